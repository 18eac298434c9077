// ttp.hpp — declarative kill-chain rule set and the streaming matcher.
// A rule fires on one event family with predicates over the bound entities
// and existential prerequisites on previously matched rules or stages,
// bounded by path_factor <= path_thres.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "killchain/cdr.hpp"
#include "killchain/flowtrack.hpp"
#include "killchain/provgraph.hpp"

namespace killchain {

enum class Severity { L = 0, M = 1, H = 2, C = 3 };

inline const char* to_string(Severity s) {
    switch (s) {
        case Severity::L: return "L";
        case Severity::M: return "M";
        case Severity::H: return "H";
        case Severity::C: return "C";
    }
    return "?";
}

inline std::optional<Severity> severity_from(std::string_view s) {
    if (s == "L") return Severity::L;
    if (s == "M") return Severity::M;
    if (s == "H") return Severity::H;
    if (s == "C") return Severity::C;
    return std::nullopt;
}

constexpr int kStageCount = 7;

inline const char* stage_name(int index) {  // 1-based kill-chain order
    switch (index) {
        case 1: return "Initial_Compromise";
        case 2: return "Establish_Foothold";
        case 3: return "Privilege_Escalation";
        case 4: return "Internal_Recon";
        case 5: return "Move_Laterally";
        case 6: return "Complete_Mission";
        case 7: return "Cleanup_Tracks";
    }
    return "?";
}

inline std::optional<int> stage_from(std::string_view s) {
    for (int i = 1; i <= kStageCount; ++i)
        if (s == stage_name(i)) return i;
    if (s == "Internal_Reconnaissance") return 4;
    if (s == "Initial_Reconnaissance") return 1;
    if (s == "Lateral_Movement") return 5;
    return std::nullopt;
}

enum class RuleLoadErrorKind { UnknownList, UnknownFamily, UnboundVariable, BadSeverity };

class RuleLoadError : public std::runtime_error {
public:
    RuleLoadError(RuleLoadErrorKind kind, const std::string& detail)
        : std::runtime_error("rule load error: " + detail), kind_(kind) {}
    RuleLoadErrorKind kind() const { return kind_; }

private:
    RuleLoadErrorKind kind_;
};

namespace lists_detail {

inline std::optional<std::uint32_t> parse_ipv4(std::string_view s) {
    std::uint32_t out = 0;
    int octets = 0;
    std::uint32_t cur = 0;
    bool digit = false;
    for (char c : s) {
        if (c >= '0' && c <= '9') {
            cur = cur * 10 + static_cast<std::uint32_t>(c - '0');
            if (cur > 255) return std::nullopt;
            digit = true;
        } else if (c == '.') {
            if (!digit || octets == 3) return std::nullopt;
            out = (out << 8) | cur;
            cur = 0;
            digit = false;
            ++octets;
        } else {
            return std::nullopt;
        }
    }
    if (!digit || octets != 3) return std::nullopt;
    return (out << 8) | cur;
}

inline bool glob_match(std::string_view pat, std::string_view text) {
    std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
    while (t < text.size()) {
        if (p < pat.size() && (pat[p] == '?' || pat[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pat.size() && pat[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pat.size() && pat[p] == '*') ++p;
    return p == pat.size();
}

}  // namespace lists_detail

// Named value lists referenced by rule predicates. Entries may be exact
// strings, globs (* and ?), IPv4 addresses, or CIDR ranges.
class ConfigLists {
public:
    static ConfigLists from_json(const nlohmann::json& j) {
        ConfigLists out;
        for (auto& [name, arr] : j.items()) {
            if (name == "version") continue;
            List l;
            for (const auto& v : arr) l.entries.push_back(compile(v.get<std::string>()));
            out.lists_[name] = std::move(l);
        }
        return out;
    }

    static ConfigLists parse(const std::string& text) {
        auto j = nlohmann::json::parse(text);
        return from_json(j);
    }

    bool has(const std::string& name) const { return lists_.count(name) > 0; }

    bool match(const std::string& name, const std::string& value) const {
        auto it = lists_.find(name);
        if (it == lists_.end()) return false;
        auto ip = lists_detail::parse_ipv4(value);
        for (const Entry& e : it->second.entries) {
            switch (e.kind) {
                case Entry::Cidr:
                    if (ip && (*ip & e.mask) == e.prefix) return true;
                    break;
                case Entry::Glob:
                    if (lists_detail::glob_match(e.text, value)) return true;
                    break;
                case Entry::Exact:
                    if (e.text == value) return true;
                    break;
            }
        }
        return false;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [k, _] : lists_) out.push_back(k);
        return out;
    }

private:
    struct Entry {
        enum Kind { Exact, Glob, Cidr } kind;
        std::string text;
        std::uint32_t prefix = 0;
        std::uint32_t mask = 0;
    };
    struct List {
        std::vector<Entry> entries;
    };

    static Entry compile(const std::string& raw) {
        Entry e;
        e.text = raw;
        auto slash = raw.find('/');
        if (slash != std::string::npos && raw.find('*') == std::string::npos) {
            auto ip = lists_detail::parse_ipv4(raw.substr(0, slash));
            if (ip) {
                int bits = 32;
                try {
                    bits = std::stoi(raw.substr(slash + 1));
                } catch (...) {
                    bits = -1;
                }
                if (bits >= 0 && bits <= 32) {
                    e.kind = Entry::Cidr;
                    e.mask = bits == 0 ? 0 : (0xffffffffu << (32 - bits));
                    e.prefix = *ip & e.mask;
                    return e;
                }
            }
        }
        if (auto ip = lists_detail::parse_ipv4(raw)) {
            e.kind = Entry::Cidr;
            e.mask = 0xffffffffu;
            e.prefix = *ip;
            return e;
        }
        if (raw.find('*') != std::string::npos || raw.find('?') != std::string::npos) {
            e.kind = Entry::Glob;
            return e;
        }
        e.kind = Entry::Exact;
        return e;
    }

    std::map<std::string, List> lists_;
};

struct PredicateAtom {
    enum class Op { In, NotIn, HasFlag };
    Op op;
    std::string field;  // "subject.exe", "object.ip", ... (unused for HasFlag)
    std::string arg;    // list name or flag
};

struct PrereqClause {
    std::string ref;                    // rule or stage name as written
    int stage = 0;                      // stage the witness must belong to
    std::optional<std::uint32_t> rule;  // set for rule-level references
    std::string target;                 // rule param the flow must reach
};

struct TTPRule {
    std::string name;
    int stage = 1;
    Severity severity = Severity::L;
    std::vector<Family> families;
    std::string subject_param;  // always the acting process
    std::string object_param;
    std::vector<EntityKind> object_kinds;
    std::vector<PredicateAtom> predicate;
    std::vector<PrereqClause> prereqs;
};

class RuleSet {
public:
    static RuleSet load(const std::string& rules_text, ConfigLists lists) {
        auto j = nlohmann::json::parse(rules_text);
        RuleSet rs;
        rs.lists_ = std::move(lists);
        std::map<std::string, std::uint32_t> by_name;
        for (const auto& rj : j.at("rules")) {
            TTPRule r;
            r.name = rj.at("name").get<std::string>();
            auto stage = stage_from(rj.at("stage").get<std::string>());
            if (!stage) throw std::runtime_error("unknown stage in rule " + r.name);
            r.stage = *stage;
            auto sev = severity_from(rj.at("severity").get<std::string>());
            if (!sev)
                throw RuleLoadError(RuleLoadErrorKind::BadSeverity,
                                    r.name + ": " + rj.at("severity").get<std::string>());
            r.severity = *sev;
            for (const auto& f : rj.at("families")) {
                auto fam = family_from(f.get<std::string>());
                if (!fam)
                    throw RuleLoadError(RuleLoadErrorKind::UnknownFamily,
                                        r.name + ": " + f.get<std::string>());
                r.families.push_back(*fam);
            }
            r.subject_param = rj.at("params").at("subject").get<std::string>();
            r.object_param = rj.at("params").at("object").get<std::string>();
            for (const auto& k : rj.at("object_kinds")) {
                auto kind = entity_kind_from(k.get<std::string>());
                if (!kind) throw std::runtime_error("unknown kind in rule " + r.name);
                r.object_kinds.push_back(*kind);
            }
            if (auto it = rj.find("predicate"); it != rj.end()) {
                for (const auto& aj : *it) {
                    PredicateAtom a;
                    std::string op = aj.at("op").get<std::string>();
                    if (op == "in") a.op = PredicateAtom::Op::In;
                    else if (op == "not_in") a.op = PredicateAtom::Op::NotIn;
                    else if (op == "has_flag") a.op = PredicateAtom::Op::HasFlag;
                    else throw std::runtime_error("unknown op in rule " + r.name);
                    if (a.op == PredicateAtom::Op::HasFlag) {
                        a.arg = aj.at("flag").get<std::string>();
                    } else {
                        a.field = aj.at("field").get<std::string>();
                        validate_field(r, a.field);
                        a.arg = aj.at("list").get<std::string>();
                        if (!rs.lists_.has(a.arg))
                            throw RuleLoadError(RuleLoadErrorKind::UnknownList,
                                                r.name + ": " + a.arg);
                    }
                    r.predicate.push_back(std::move(a));
                }
            }
            if (auto it = rj.find("prereqs"); it != rj.end()) {
                for (const auto& pj : *it) {
                    PrereqClause c;
                    c.ref = pj.at("ref").get<std::string>();
                    c.target = pj.at("target").get<std::string>();
                    if (c.target != r.subject_param && c.target != r.object_param)
                        throw RuleLoadError(RuleLoadErrorKind::UnboundVariable,
                                            r.name + ": prereq target " + c.target);
                    r.prereqs.push_back(std::move(c));
                }
            }
            by_name[r.name] = static_cast<std::uint32_t>(rs.rules_.size());
            rs.rules_.push_back(std::move(r));
        }
        // Resolve prerequisite references: rule name first, else stage name.
        for (auto& r : rs.rules_) {
            for (auto& c : r.prereqs) {
                if (auto it = by_name.find(c.ref); it != by_name.end()) {
                    c.rule = it->second;
                    c.stage = rs.rules_[it->second].stage;
                } else if (auto st = stage_from(c.ref)) {
                    c.stage = *st;
                } else {
                    throw RuleLoadError(RuleLoadErrorKind::UnboundVariable,
                                        r.name + ": prereq ref " + c.ref);
                }
            }
        }
        return rs;
    }

    const std::vector<TTPRule>& rules() const { return rules_; }
    const TTPRule& rule(std::uint32_t i) const { return rules_[i]; }
    const ConfigLists& lists() const { return lists_; }

    std::vector<std::uint32_t> by_family(Family f) const {
        std::vector<std::uint32_t> out;
        for (std::uint32_t i = 0; i < rules_.size(); ++i)
            if (std::find(rules_[i].families.begin(), rules_[i].families.end(), f) !=
                rules_[i].families.end())
                out.push_back(i);
        return out;
    }

private:
    static void validate_field(const TTPRule& r, const std::string& field) {
        static const std::set<std::string> known = {
            "subject.exe", "subject.name", "subject.path", "object.path",
            "object.name", "object.ip",   "object.port",  "object.uid",
            "object.id",
        };
        if (!known.count(field))
            throw RuleLoadError(RuleLoadErrorKind::UnboundVariable,
                                r.name + ": field " + field);
    }

    std::vector<TTPRule> rules_;
    ConfigLists lists_;
};

// A concrete binding of a rule to graph entities. Identity for duplicate
// suppression is (rule, subject base, object base); repeats accumulate
// bytes onto the existing match.
struct MatchedTTP {
    std::uint32_t id = 0;
    std::uint32_t rule_idx = 0;
    std::int64_t ts = 0;
    std::uint64_t event_seq = 0;
    BaseId subject_base = kNoBase;
    BaseId object_base = kNoBase;
    NodeRef origin_node = kNoNode;  // subject version the match anchored to
    std::vector<std::pair<std::string, std::uint32_t>> witnesses;  // clause ref -> id
    std::uint64_t bytes_so_far = 0;
    bool active = false;  // false while suppressed by the noise model
    std::string host;
};

// Origin keys order matches by (stage, arrival), so an ascending scan yields
// the earliest witness of a stage first.
inline std::uint32_t origin_key(int stage, std::uint32_t match_id) {
    return (static_cast<std::uint32_t>(stage) << 24) | match_id;
}

class MatchStore {
public:
    std::uint32_t create(MatchedTTP m) {
        m.id = static_cast<std::uint32_t>(all_.size());
        dedup_[{m.rule_idx, m.subject_base, m.object_base}] = m.id;
        all_.push_back(std::move(m));
        return all_.back().id;
    }

    std::optional<std::uint32_t> find(std::uint32_t rule, BaseId subj, BaseId obj) const {
        auto it = dedup_.find({rule, subj, obj});
        if (it == dedup_.end()) return std::nullopt;
        return it->second;
    }

    MatchedTTP& get(std::uint32_t id) { return all_[id]; }
    const MatchedTTP& get(std::uint32_t id) const { return all_[id]; }
    std::size_t size() const { return all_.size(); }

    std::size_t active_count() const {
        std::size_t n = 0;
        for (const auto& m : all_)
            if (m.active) ++n;
        return n;
    }

    const std::vector<MatchedTTP>& all() const { return all_; }

private:
    std::vector<MatchedTTP> all_;
    std::map<std::tuple<std::uint32_t, BaseId, BaseId>, std::uint32_t> dedup_;
};

// Resolves one prerequisite clause at a node: any matched TTP of the
// referenced rule/stage whose path_factor to the node is within bound.
// Deterministic choice: the earliest-ts witness.
inline std::optional<std::uint32_t> eval_prereq(const PrereqClause& clause,
                                                NodeRef local_node,
                                                const PathFactorTable& pft,
                                                const MatchStore& store,
                                                const RuleSet& rules) {
    std::optional<std::uint32_t> found;
    std::uint32_t lo = origin_key(clause.stage, 0);
    std::uint32_t hi = origin_key(clause.stage + 1, 0);
    pft.scan_origins(local_node, lo, hi, [&](std::uint32_t key, std::uint32_t value) {
        if (value > pft.path_thres()) return true;
        std::uint32_t id = key & 0x00ffffffu;
        if (clause.rule && store.get(id).rule_idx != *clause.rule) return true;
        found = id;
        return false;
    });
    (void)rules;
    return found;
}

struct MatchOutcome {
    std::vector<std::uint32_t> activated;  // newly active (fresh or unsuppressed)
    std::vector<std::uint32_t> touched;    // every match this event hit
};

// Runs every rule of the event's family. `suppress(m)` implements the noise
// filter; it sees bytes_so_far already updated. Matches created while
// suppressed stay pending and activate when a later occurrence pushes the
// cumulative byte count past the learned threshold.
template <class Suppress>
MatchOutcome match_event(const Event& e, const ProvGraph& g, const PathFactorTable& pft,
                         const RuleSet& rules, MatchStore& store,
                         std::uint64_t pair_bytes_total, Suppress&& suppress) {
    MatchOutcome out;
    for (std::uint32_t ri : rules.by_family(e.family)) {
        const TTPRule& rule = rules.rule(ri);

        BaseId obj;
        bool obj_is_event_object = true;
        if (e.family == Family::EXEC) {
            auto fb = g.find_base(EntityKind::File, e.host_id, ProvGraph::exec_image_of(e));
            if (!fb) continue;
            obj = *fb;
            obj_is_event_object = false;
        } else {
            auto ob = g.find_base(e.object.kind, e.object.host_id, e.object.local_id);
            if (!ob) continue;
            obj = *ob;
        }
        auto sb = g.find_base(EntityKind::Process, e.subject.host_id, e.subject.local_id);
        if (!sb) continue;

        if (std::find(rule.object_kinds.begin(), rule.object_kinds.end(),
                      g.base(obj).kind) == rule.object_kinds.end())
            continue;

        auto field_value = [&](const std::string& field) -> std::string {
            const BaseEntity& s = g.base(*sb);
            const BaseEntity& o = g.base(obj);
            if (field == "subject.exe" || field == "subject.path") return s.attr("exe_path");
            if (field == "subject.name") return s.name();
            if (field == "object.path")
                return o.kind == EntityKind::File ? o.local_id : o.attr("path");
            if (field == "object.name") return o.name();
            if (field == "object.ip") return o.attr("ip");
            if (field == "object.port") return o.attr("port");
            if (field == "object.uid")
                return o.attr("uid").empty() ? o.local_id : o.attr("uid");
            if (field == "object.id") return o.local_id;
            return {};
        };

        bool ok = true;
        for (const PredicateAtom& a : rule.predicate) {
            switch (a.op) {
                case PredicateAtom::Op::In:
                    ok = rules.lists().match(a.arg, field_value(a.field));
                    break;
                case PredicateAtom::Op::NotIn:
                    ok = !rules.lists().match(a.arg, field_value(a.field));
                    break;
                case PredicateAtom::Op::HasFlag:
                    ok = e.flags.count(a.arg) > 0;
                    break;
            }
            if (!ok) break;
        }
        if (!ok) continue;

        std::uint64_t cumulative = obj_is_event_object ? pair_bytes_total : 0;

        if (auto existing = store.find(ri, *sb, obj)) {
            MatchedTTP& m = store.get(*existing);
            m.bytes_so_far = std::max(m.bytes_so_far, cumulative);
            out.touched.push_back(m.id);
            if (!m.active && !suppress(m)) {
                m.active = true;
                out.activated.push_back(m.id);
            }
            continue;
        }

        std::vector<std::pair<std::string, std::uint32_t>> witnesses;
        for (const PrereqClause& c : rule.prereqs) {
            NodeRef local = c.target == rule.subject_param ? g.current(*sb)
                                                           : g.current(obj);
            auto w = eval_prereq(c, local, pft, store, rules);
            if (!w) {
                ok = false;
                break;
            }
            witnesses.emplace_back(c.ref, *w);
        }
        if (!ok) continue;

        MatchedTTP m;
        m.rule_idx = ri;
        m.ts = e.ts;
        m.event_seq = e.seq;
        m.subject_base = *sb;
        m.object_base = obj;
        m.origin_node = g.current(*sb);
        m.witnesses = std::move(witnesses);
        m.bytes_so_far = cumulative;
        m.host = e.host_id;
        std::uint32_t id = store.create(std::move(m));
        out.touched.push_back(id);
        MatchedTTP& created = store.get(id);
        if (!suppress(created)) {
            created.active = true;
            out.activated.push_back(id);
        }
    }
    return out;
}

}  // namespace killchain
