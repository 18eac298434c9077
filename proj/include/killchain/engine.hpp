// engine.hpp — the streaming pipeline: provenance graph -> path-factor
// propagation -> rule matching -> noise filter -> HSG maintenance ->
// threshold detection. One engine instance consumes one merged,
// time-ordered event stream.

#pragma once

#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "killchain/cdr.hpp"
#include "killchain/defaults.hpp"
#include "killchain/flowtrack.hpp"
#include "killchain/hsg.hpp"
#include "killchain/noise.hpp"
#include "killchain/provgraph.hpp"
#include "killchain/ttp.hpp"

namespace killchain {

struct EngineConfig {
    ScoreParams score;
    std::uint32_t path_thres = 3;
    std::optional<NoiseModel> noise;
    std::uint64_t noise_min_count = 1;
    bool learning = false;  // record benign observations, never suppress

    static EngineConfig with_default_rules() { return EngineConfig{}; }
};

inline RuleSet default_rule_set() {
    return RuleSet::load(default_rules_json(), ConfigLists::parse(default_lists_json()));
}

class Engine {
public:
    Engine(RuleSet rules, EngineConfig cfg)
        : rules_(std::move(rules)), cfg_(std::move(cfg)), pft_(cfg_.path_thres) {}

    explicit Engine(EngineConfig cfg = {}) : Engine(default_rule_set(), std::move(cfg)) {}

    void set_alert_sink(std::function<void(const Alert&)> sink) { sink_ = std::move(sink); }

    // Feeds one event through the full pipeline. Returns the number of
    // alerts it raised.
    std::size_t consume(const Event& e) {
        ++events_consumed_;
        GraphDelta delta = g_.add_event(e);
        pft_.on_delta(g_, delta);

        std::uint64_t cumulative = 0;
        if (e.bytes > 0) {
            auto sb = g_.find_base(EntityKind::Process, e.subject.host_id,
                                   e.subject.local_id);
            auto ob = g_.find_base(e.object.kind, e.object.host_id, e.object.local_id);
            if (sb && ob) cumulative = pair_bytes_[{*sb, *ob}] += e.bytes;
        }

        auto suppress = [&](const MatchedTTP& m) {
            if (cfg_.learning || !cfg_.noise) return false;
            NoiseKey key = noise_key_for(m, g_, rules_, matches_);
            return cfg_.noise->should_filter(key, m.bytes_so_far, cfg_.noise_min_count);
        };

        MatchOutcome outcome =
            match_event(e, g_, pft_, rules_, matches_, cumulative, suppress);

        if (cfg_.learning) {
            for (std::uint32_t id : outcome.touched) {
                const MatchedTTP& m = matches_.get(id);
                learned_.observe(noise_key_for(m, g_, rules_, matches_), m.bytes_so_far);
            }
        }

        std::set<std::uint32_t> touched_roots;
        for (std::uint32_t id : outcome.activated) {
            const MatchedTTP& m = matches_.get(id);
            pft_.register_origin(g_, origin_key(rules_.rule(m.rule_idx).stage, id),
                                 m.origin_node);
            touched_roots.insert(hsg_.add_ttp(m, matches_, rules_));
        }

        std::size_t raised = 0;
        std::set<std::uint32_t> seen;
        for (std::uint32_t r : touched_roots) {
            std::uint32_t root = hsg_.find(r);
            if (!seen.insert(root).second) continue;
            if (auto a = hsg_.detect(root, cfg_.score, e.ts)) {
                alerts_.push_back(*a);
                if (sink_) sink_(*a);
                ++raised;
            }
        }
        return raised;
    }

    template <class Stream>
        requires requires(Stream& s, Event& e) { { s.next(e) } -> std::same_as<bool>; }
    std::size_t consume_all(Stream& s) {
        Event e;
        std::size_t raised = 0;
        while (s.next(e)) raised += consume(e);
        return raised;
    }

    std::size_t consume_all(const std::vector<Event>& events) {
        std::size_t raised = 0;
        for (const Event& e : events) raised += consume(e);
        return raised;
    }

    const ProvGraph& graph() const { return g_; }
    const PathFactorTable& pft() const { return pft_; }
    const MatchStore& matches() const { return matches_; }
    const HsgStore& hsg() const { return hsg_; }
    HsgStore& hsg() { return hsg_; }
    const RuleSet& rules() const { return rules_; }
    const std::vector<Alert>& alerts() const { return alerts_; }
    const ScoreParams& score_params() const { return cfg_.score; }
    std::uint64_t events_consumed() const { return events_consumed_; }

    NoiseModel take_learned_model() { return std::move(learned_); }
    const NoiseModel& learned_model() const { return learned_; }

    std::uint64_t pair_bytes(BaseId subj, BaseId obj) const {
        auto it = pair_bytes_.find({subj, obj});
        return it == pair_bytes_.end() ? 0 : it->second;
    }

private:
    RuleSet rules_;
    EngineConfig cfg_;
    ProvGraph g_;
    PathFactorTable pft_;
    MatchStore matches_;
    HsgStore hsg_;
    NoiseModel learned_;
    std::map<std::pair<BaseId, BaseId>, std::uint64_t> pair_bytes_;
    std::vector<Alert> alerts_;
    std::function<void(const Alert&)> sink_;
    std::uint64_t events_consumed_ = 0;
};

}  // namespace killchain
