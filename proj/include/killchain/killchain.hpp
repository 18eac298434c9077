// killchain.hpp — umbrella include.

#pragma once

#include "killchain/cdr.hpp"
#include "killchain/defaults.hpp"
#include "killchain/engine.hpp"
#include "killchain/flowtrack.hpp"
#include "killchain/harness.hpp"
#include "killchain/hsg.hpp"
#include "killchain/noise.hpp"
#include "killchain/provgraph.hpp"
#include "killchain/ttp.hpp"
