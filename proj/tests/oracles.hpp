// oracles.hpp — independent brute-force references used by the tests.
// Nothing here reuses the engine's incremental bookkeeping: reachability is
// recomputed from raw events or from the plain edge list, ancestry by
// replaying FORK events, covers by exhaustive subset enumeration.

#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "killchain/cdr.hpp"
#include "killchain/harness.hpp"
#include "killchain/provgraph.hpp"

namespace oracles {

using namespace killchain;

using BaseKey = std::tuple<EntityKind, std::string, std::string>;

inline BaseKey key_of(const EntityRef& e) {
    return {e.kind, e.host_id, e.local_id};
}

// Flow orientation of one event at base granularity: (source, destination).
inline std::pair<BaseKey, BaseKey> flow_of(const Event& e) {
    BaseKey s = key_of(e.subject);
    BaseKey o = key_of(e.object);
    if (e.family == Family::EXEC) {
        EntityRef img;
        img.kind = EntityKind::File;
        img.host_id = e.host_id;
        img.local_id = ProvGraph::exec_image_of(e);
        o = key_of(img);
    }
    switch (e.family) {
        case Family::READ:
        case Family::RECV:
        case Family::CONNECT:
        case Family::ACCEPT:
        case Family::SETUID:
        case Family::EXEC:
            return {o, s};
        default:
            return {s, o};
    }
}

// Flow dependence in the full-event graph: b depends on a iff a path of
// events with non-decreasing order links a to b. One forward pass over the
// event list suffices because an edge can never enable an earlier one.
inline std::set<BaseKey> time_respecting_reachable(const std::vector<Event>& events,
                                                   const BaseKey& start) {
    std::set<BaseKey> reached{start};
    for (const Event& e : events) {
        auto [from, to] = flow_of(e);
        if (from != to && reached.count(from)) reached.insert(to);
    }
    return reached;
}

// Versioned reachability recomputed by BFS over the stored edge list.
inline std::set<NodeRef> versioned_reachable(const ProvGraph& g, NodeRef start) {
    std::set<NodeRef> seen{start};
    std::vector<NodeRef> work{start};
    while (!work.empty()) {
        NodeRef u = work.back();
        work.pop_back();
        for (std::uint32_t ei : g.out_edges(u)) {
            NodeRef v = g.edge(ei).dst;
            if (seen.insert(v).second) work.push_back(v);
        }
    }
    return seen;
}

// Kahn's algorithm on the stored edges; false when a cycle exists.
inline bool topological_sort_succeeds(const ProvGraph& g) {
    std::vector<int> indeg(g.node_count(), 0);
    for (std::size_t i = 0; i < g.edge_count(); ++i)
        indeg[g.edge(static_cast<std::uint32_t>(i)).dst]++;
    std::vector<NodeRef> queue;
    for (NodeRef n = 0; n < g.node_count(); ++n)
        if (indeg[n] == 0) queue.push_back(n);
    std::size_t emitted = 0;
    while (!queue.empty()) {
        NodeRef u = queue.back();
        queue.pop_back();
        ++emitted;
        for (std::uint32_t ei : g.out_edges(u))
            if (--indeg[g.edge(ei).dst] == 0) queue.push_back(g.edge(ei).dst);
    }
    return emitted == g.node_count();
}

// Fork parentage replayed from the raw events.
struct ForkReplay {
    std::map<BaseKey, BaseKey> parent;

    explicit ForkReplay(const std::vector<Event>& events) {
        for (const Event& e : events) {
            if (e.family != Family::FORK) continue;
            BaseKey child = key_of(e.object);
            BaseKey par = key_of(e.subject);
            if (child != par && !parent.count(child)) parent[child] = par;
        }
    }

    std::vector<BaseKey> ancestors(const BaseKey& p) const {  // includes self
        std::vector<BaseKey> out{p};
        BaseKey cur = p;
        while (true) {
            auto it = parent.find(cur);
            if (it == parent.end()) break;
            cur = it->second;
            out.push_back(cur);
        }
        return out;
    }

    BaseKey root(const BaseKey& p) const { return ancestors(p).back(); }

    bool is_ancestor(const BaseKey& a, const BaseKey& p) const {
        for (const BaseKey& x : ancestors(p))
            if (x == a) return true;
        return false;
    }
};

// Minimum ancestral cover by exhaustive subset search: candidates are all
// ancestors of the path's processes; a cover must dominate every on-path
// process. Candidate count must stay small.
inline int min_cover_bruteforce(const ForkReplay& forks,
                                const std::vector<BaseKey>& path_processes) {
    if (path_processes.empty()) return 0;
    std::set<BaseKey> cand_set;
    for (const BaseKey& p : path_processes)
        for (const BaseKey& a : forks.ancestors(p)) cand_set.insert(a);
    std::vector<BaseKey> cand(cand_set.begin(), cand_set.end());
    int n = static_cast<int>(cand.size());
    int best = n;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        int size = __builtin_popcount(mask);
        if (size >= best) continue;
        bool covers = true;
        for (const BaseKey& p : path_processes) {
            bool dominated = false;
            for (int i = 0; i < n && !dominated; ++i)
                if ((mask >> i) & 1) dominated = forks.is_ancestor(cand[i], p);
            if (!dominated) {
                covers = false;
                break;
            }
        }
        if (covers) best = size;
    }
    return best;
}

// Structured random event streams: a few process trees doing reads, writes,
// forks, sends. Entity pools stay small so graphs remain test-scale.
inline std::vector<Event> random_events(std::uint64_t seed, int count,
                                        int n_procs = 6, int n_files = 5,
                                        int n_socks = 3) {
    std::mt19937_64 rng(seed);
    harness_detail::TraceBuilder b("rh", seed, 1'000'000);

    std::vector<EntityRef> procs;
    for (int i = 0; i < n_procs; ++i)
        procs.push_back(b.proc(100 + i, "/bin/prog" + std::to_string(i)));
    std::vector<EntityRef> files;
    for (int i = 0; i < n_files; ++i)
        files.push_back(b.file("/data/f" + std::to_string(i)));
    std::vector<EntityRef> socks;
    for (int i = 0; i < n_socks; ++i)
        socks.push_back(b.sock("198.18.5." + std::to_string(i), 4000 + i));

    std::vector<int> alive;  // processes already introduced
    alive.push_back(0);
    std::uniform_int_distribution<int> faces(0, 99);

    for (int i = 0; i < count; ++i) {
        int p = alive[rng() % alive.size()];
        int f = faces(rng);
        if (f < 18 && static_cast<int>(alive.size()) < n_procs) {
            int c = static_cast<int>(alive.size());
            b.fork(procs[p], procs[c], 0);
            alive.push_back(c);
        } else if (f < 45) {
            b.read(procs[p], files[rng() % n_files], 64, 0);
        } else if (f < 72) {
            b.write(procs[p], files[rng() % n_files], 64, 0);
        } else if (f < 82) {
            b.recv(procs[p], socks[rng() % n_socks], 64, 0);
        } else if (f < 92) {
            b.send(procs[p], socks[rng() % n_socks], 64, 0);
        } else {
            b.mprotect(procs[p], b.mem("m:" + std::to_string(rng() % 3)), 0);
        }
    }
    return b.take_events();
}

}  // namespace oracles
