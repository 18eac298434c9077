// hsg.hpp — high-level scenario graphs. Matched TTPs are nodes; satisfied
// prerequisites are edges. An HSG is the weakly-connected component over
// prerequisite edges plus shared bound base entities. Each HSG carries a
// 7-entry threat tuple (per-stage maximum severity) scored as a weighted
// product and compared against the detection threshold.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "killchain/provgraph.hpp"
#include "killchain/ttp.hpp"

namespace killchain {

class UnsupportedFormat : public std::runtime_error {
public:
    explicit UnsupportedFormat(const std::string& f)
        : std::runtime_error("unsupported export format: " + f) {}
};

// Entry i is the max severity among the HSG's stage-(i+1) TTPs; -1 = absent.
struct ThreatTuple {
    std::array<int, kStageCount> sev{};

    ThreatTuple() { sev.fill(-1); }

    std::string to_string() const {
        std::string out;
        for (int i = 0; i < kStageCount; ++i) {
            if (i) out.push_back(',');
            out += sev[i] < 0 ? "-" : killchain::to_string(static_cast<Severity>(sev[i]));
        }
        return out;
    }

    // Accepts the "C,M,-,H,-,H,M" form.
    static std::optional<ThreatTuple> parse(const std::string& text) {
        ThreatTuple t;
        std::stringstream ss(text);
        std::string item;
        int i = 0;
        while (std::getline(ss, item, ',')) {
            // strip blanks and tuple punctuation
            std::string clean;
            for (char c : item)
                if (!isspace(static_cast<unsigned char>(c)) && c != '<' && c != '>')
                    clean.push_back(c);
            if (i >= kStageCount) return std::nullopt;
            if (clean == "-" || clean.empty()) {
                t.sev[i++] = -1;
                continue;
            }
            auto s = severity_from(clean);
            if (!s) return std::nullopt;
            t.sev[i++] = static_cast<int>(*s);
        }
        if (i != kStageCount) return std::nullopt;
        return t;
    }

    int stage_count() const {
        int n = 0;
        for (int s : sev)
            if (s >= 0) ++n;
        return n;
    }
};

struct ScoreParams {
    std::array<double, 4> severity_values{2.0, 6.0, 8.0, 10.0};  // L, M, H, C
    double absent_value = 1.0;
    std::array<double, kStageCount> weights{1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7};
    double tau_base = 2.09;
    std::array<bool, kStageCount> active_stages{true, true, true, true, true, true, true};
    std::optional<double> tau_override;

    double active_weight_sum() const {
        double n = 0;
        for (int i = 0; i < kStageCount; ++i)
            if (active_stages[i]) n += weights[i];
        return n;
    }

    // Default threshold: tau_base ^ (sum of active stage weights).
    double tau() const {
        if (tau_override) return *tau_override;
        return std::pow(tau_base, active_weight_sum());
    }
};

// Weighted product of the tuple's numeric severities; computed in log space.
inline double threat_score(const ThreatTuple& t, const ScoreParams& p) {
    double log_sum = 0.0;
    for (int i = 0; i < kStageCount; ++i) {
        double v = t.sev[i] < 0 ? p.absent_value : p.severity_values[t.sev[i]];
        log_sum += p.weights[i] * std::log(v);
    }
    return std::exp(log_sum);
}

// nth root of the score, n = sum of active weights; maps scores onto the
// per-stage severity scale.
inline double normalized_score(double score, double n) {
    return std::pow(score, 1.0 / n);
}

struct Alert {
    std::int64_t ts = 0;
    std::uint32_t hsg_id = 0;
    double score = 0;
    double normalized = 0;
    ThreatTuple tuple;
    std::vector<std::uint32_t> ttps;
    std::vector<std::string> hosts;
};

struct PrereqEdge {
    std::uint32_t witness;
    std::uint32_t dependent;
    std::string clause;
};

class HsgStore {
public:
    // Places a freshly activated match: joins the components of its
    // witnesses and of any match sharing a bound base entity, merging when
    // they differ. Returns the component's root.
    std::uint32_t add_ttp(const MatchedTTP& m, const MatchStore& store,
                          const RuleSet& rules) {
        ensure(m.id);
        const TTPRule& rule = rules.rule(m.rule_idx);
        Comp& c = comps_[m.id];
        c.stage_max[rule.stage - 1] =
            std::max(c.stage_max[rule.stage - 1], static_cast<int>(rule.severity));
        c.members = {m.id};
        c.hosts = {m.host};
        c.min_id = m.id;

        // Witnesses are always active: only registered origins resolve
        // prerequisite clauses.
        for (const auto& [clause, witness] : m.witnesses) {
            edges_.push_back({witness, m.id, clause});
            unite(m.id, witness);
        }
        for (BaseId b : {m.subject_base, m.object_base}) {
            auto& peers = by_base_[b];
            for (std::uint32_t peer : peers) unite(m.id, peer);
            peers.push_back(m.id);
        }
        return find(m.id);
    }

    std::uint32_t find(std::uint32_t id) const {
        while (parent_[id] != id) id = parent_[id];
        return id;
    }

    ThreatTuple threat_tuple(std::uint32_t root) const {
        ThreatTuple t;
        t.sev = comps_[find(root)].stage_max;
        return t;
    }

    const std::vector<std::uint32_t>& members(std::uint32_t root) const {
        return comps_[find(root)].members;
    }

    std::uint32_t stable_id(std::uint32_t root) const { return comps_[find(root)].min_id; }

    const std::set<std::string>& hosts(std::uint32_t root) const {
        return comps_[find(root)].hosts;
    }

    std::vector<std::uint32_t> roots() const {
        std::vector<std::uint32_t> out;
        for (std::uint32_t i = 0; i < parent_.size(); ++i)
            if (parent_[i] == i && !comps_[i].members.empty()) out.push_back(i);
        return out;
    }

    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<PrereqEdge>& edges() const { return edges_; }

    // Threshold test with one-alert-per-HSG policy; a component re-alerts
    // only when it has grown to cover a new stage.
    std::optional<Alert> detect(std::uint32_t root, const ScoreParams& p,
                                std::int64_t now_ts) {
        root = find(root);
        Comp& c = comps_[root];
        if (c.members.empty()) return std::nullopt;
        ThreatTuple t = threat_tuple(root);
        double score = threat_score(t, p);
        if (score < p.tau()) return std::nullopt;
        std::set<int> stages;
        for (int i = 0; i < kStageCount; ++i)
            if (t.sev[i] >= 0) stages.insert(i);
        if (!c.alerted_stages.empty() &&
            std::includes(c.alerted_stages.begin(), c.alerted_stages.end(),
                          stages.begin(), stages.end()))
            return std::nullopt;
        c.alerted_stages.insert(stages.begin(), stages.end());

        Alert a;
        a.ts = now_ts;
        a.hsg_id = c.min_id;
        a.score = score;
        a.normalized = normalized_score(score, p.active_weight_sum());
        a.tuple = t;
        a.ttps = c.members;
        a.hosts.assign(c.hosts.begin(), c.hosts.end());
        return a;
    }

    nlohmann::ordered_json to_json(std::uint32_t root, const MatchStore& store,
                                   const RuleSet& rules, const ProvGraph& g,
                                   const ScoreParams& p) const {
        root = find(root);
        const Comp& c = comps_[root];
        nlohmann::ordered_json j;
        ThreatTuple t = threat_tuple(root);
        j["id"] = c.min_id;
        j["tuple"] = tuple_array(t);
        j["score"] = threat_score(t, p);
        j["normalized_score"] = normalized_score(threat_score(t, p), p.active_weight_sum());
        j["hosts"] = std::vector<std::string>(c.hosts.begin(), c.hosts.end());
        auto nodes = nlohmann::ordered_json::array();
        std::vector<std::uint32_t> ordered = c.members;
        std::sort(ordered.begin(), ordered.end());
        for (std::uint32_t id : ordered) {
            const MatchedTTP& m = store.get(id);
            const TTPRule& r = rules.rule(m.rule_idx);
            nlohmann::ordered_json nj;
            nj["id"] = id;
            nj["name"] = r.name;
            nj["stage"] = stage_name(r.stage);
            nj["severity"] = killchain::to_string(r.severity);
            nj["ts"] = m.ts;
            nj["entities"] = {{r.subject_param, g.base(m.subject_base).local_id},
                              {r.object_param, g.base(m.object_base).local_id}};
            nodes.push_back(std::move(nj));
        }
        j["nodes"] = std::move(nodes);
        auto ejs = nlohmann::ordered_json::array();
        for (const auto& e : edges_) {
            if (find(e.dependent) != root) continue;
            ejs.push_back({{"from", e.witness}, {"to", e.dependent}, {"clause", e.clause}});
        }
        j["edges"] = std::move(ejs);
        return j;
    }

    std::string to_dot(std::uint32_t root, const MatchStore& store, const RuleSet& rules,
                       const ProvGraph& g) const {
        root = find(root);
        const Comp& c = comps_[root];
        std::ostringstream os;
        os << "digraph hsg_" << c.min_id << " {\n  node [shape=oval];\n";
        std::vector<std::uint32_t> ordered = c.members;
        std::sort(ordered.begin(), ordered.end());
        for (std::uint32_t id : ordered) {
            const MatchedTTP& m = store.get(id);
            const TTPRule& r = rules.rule(m.rule_idx);
            os << "  t" << id << " [label=\"" << r.name << "\\n"
               << stage_name(r.stage) << " (" << killchain::to_string(r.severity)
               << ")\\n" << g.base(m.subject_base).name() << " / "
               << g.base(m.object_base).name() << "\"];\n";
        }
        for (const auto& e : edges_) {
            if (find(e.dependent) != root) continue;
            os << "  t" << e.witness << " -> t" << e.dependent << " [label=\"" << e.clause
               << "\"];\n";
        }
        os << "}\n";
        return os.str();
    }

    static nlohmann::json tuple_array(const ThreatTuple& t) {
        auto arr = nlohmann::json::array();
        for (int i = 0; i < kStageCount; ++i)
            arr.push_back(t.sev[i] < 0
                              ? std::string("-")
                              : std::string(killchain::to_string(static_cast<Severity>(t.sev[i]))));
        return arr;
    }

private:
    struct Comp {
        std::array<int, kStageCount> stage_max;
        std::vector<std::uint32_t> members;
        std::set<std::string> hosts;
        std::set<int> alerted_stages;
        std::uint32_t min_id = 0;
        Comp() { stage_max.fill(-1); }
    };

    void ensure(std::uint32_t id) {
        while (parent_.size() <= id) {
            parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
            comps_.emplace_back();
        }
    }

    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (comps_[a].members.size() < comps_[b].members.size()) std::swap(a, b);
        parent_[b] = a;
        Comp& ca = comps_[a];
        Comp& cb = comps_[b];
        for (int i = 0; i < kStageCount; ++i)
            ca.stage_max[i] = std::max(ca.stage_max[i], cb.stage_max[i]);
        ca.members.insert(ca.members.end(), cb.members.begin(), cb.members.end());
        ca.hosts.insert(cb.hosts.begin(), cb.hosts.end());
        ca.alerted_stages.insert(cb.alerted_stages.begin(), cb.alerted_stages.end());
        ca.min_id = std::min(ca.min_id, cb.min_id);
        cb.members.clear();
        cb.members.shrink_to_fit();
    }

    std::vector<std::uint32_t> parent_;
    std::vector<Comp> comps_;
    std::map<BaseId, std::vector<std::uint32_t>> by_base_;
    std::vector<PrereqEdge> edges_;
};

// Renders one HSG in the requested format; throws UnsupportedFormat.
inline std::string export_hsg(const HsgStore& hsgs, std::uint32_t root,
                              const MatchStore& store, const RuleSet& rules,
                              const ProvGraph& g, const ScoreParams& p,
                              const std::string& format) {
    if (format == "dot") return hsgs.to_dot(root, store, rules, g);
    if (format == "json") return hsgs.to_json(root, store, rules, g, p).dump(2);
    throw UnsupportedFormat(format);
}

inline nlohmann::ordered_json alert_to_json(const Alert& a, const MatchStore& store,
                                            const RuleSet& rules, const ProvGraph& g) {
    nlohmann::ordered_json j;
    j["ts"] = a.ts;
    j["hsg_id"] = a.hsg_id;
    j["score"] = a.score;
    j["normalized_score"] = a.normalized;
    j["tuple"] = HsgStore::tuple_array(a.tuple);
    auto ttps = nlohmann::ordered_json::array();
    std::vector<std::uint32_t> ids = a.ttps;
    std::sort(ids.begin(), ids.end());
    for (std::uint32_t id : ids) {
        const MatchedTTP& m = store.get(id);
        const TTPRule& r = rules.rule(m.rule_idx);
        ttps.push_back({{"name", r.name},
                        {"stage", stage_name(r.stage)},
                        {"severity", killchain::to_string(r.severity)},
                        {"entities",
                         {{r.subject_param, g.base(m.subject_base).local_id},
                          {r.object_param, g.base(m.object_base).local_id}}}});
    }
    j["ttps"] = std::move(ttps);
    j["hosts"] = a.hosts;
    return j;
}

}  // namespace killchain
