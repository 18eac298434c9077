// noise.hpp — benign-behavior model. Training records which rule matches
// fire in a benign setting, keyed by subject executable, object identity
// pattern and ordered prerequisite signature, together with the largest
// cumulative byte flow seen per (subject, object) pair. At detection time a
// match with a known key is suppressed while its cumulative bytes stay
// within the learned threshold.

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "killchain/provgraph.hpp"
#include "killchain/ttp.hpp"

namespace killchain {

class ModelFormatError : public std::runtime_error {
public:
    explicit ModelFormatError(const std::string& what)
        : std::runtime_error("noise model: " + what) {}
};

struct NoiseKey {
    std::string subject_exe;
    std::string rule;
    std::string object_pattern;
    std::vector<std::string> prereq_sig;  // witness rule names, clause order

    auto tie() const { return std::tie(subject_exe, rule, object_pattern, prereq_sig); }
    bool operator<(const NoiseKey& o) const { return tie() < o.tie(); }
    bool operator==(const NoiseKey& o) const { return tie() == o.tie(); }
};

struct NoiseEntry {
    NoiseKey key;
    std::uint64_t byte_threshold = 0;  // max cumulative bytes seen in training
    std::uint64_t hit_count = 0;
};

// Identity pattern of the matched object. Sockets generalize to
// (/24 prefix, well-known port or "high") so ephemeral peers learned in
// training still match at detection time.
inline std::string object_pattern(const BaseEntity& b) {
    switch (b.kind) {
        case EntityKind::File:
            return b.local_id;
        case EntityKind::Socket: {
            std::string ip = b.attr("ip");
            auto last = ip.find_last_of('.');
            std::string prefix = last == std::string::npos ? ip : ip.substr(0, last) + ".0/24";
            std::string port = b.attr("port");
            int p = 99999;
            try {
                p = std::stoi(port);
            } catch (...) {
            }
            return prefix + ":" + (p <= 1024 ? port : std::string("high"));
        }
        case EntityKind::Process:
            return b.name();
        case EntityKind::User:
            return "uid:" + (b.attr("uid").empty() ? b.local_id : b.attr("uid"));
        case EntityKind::Memory:
            return "mem";
    }
    return b.local_id;
}

class NoiseModel {
public:
    void observe(const NoiseKey& key, std::uint64_t cumulative_bytes) {
        auto& e = entries_[key];
        e.key = key;
        e.byte_threshold = std::max(e.byte_threshold, cumulative_bytes);
        e.hit_count++;
    }

    // True iff the key was seen in training and the flow is still within the
    // benign byte threshold. min_count ignores rarely-seen entries.
    bool should_filter(const NoiseKey& key, std::uint64_t cumulative_bytes,
                       std::uint64_t min_count = 1) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return false;
        if (it->second.hit_count < min_count) return false;
        return cumulative_bytes <= it->second.byte_threshold;
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const std::map<NoiseKey, NoiseEntry>& entries() const { return entries_; }

    void set_meta(std::int64_t duration_us, std::vector<std::string> stream_ids) {
        duration_us_ = duration_us;
        streams_ = std::move(stream_ids);
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["version"] = 1;
        j["meta"] = {{"duration_us", duration_us_}, {"streams", streams_}};
        auto arr = nlohmann::ordered_json::array();
        for (const auto& [k, e] : entries_) {
            nlohmann::ordered_json ej;
            ej["subject_exe"] = k.subject_exe;
            ej["rule"] = k.rule;
            ej["object_pattern"] = k.object_pattern;
            ej["prereq_sig"] = k.prereq_sig;
            ej["byte_threshold"] = e.byte_threshold;
            ej["hit_count"] = e.hit_count;
            arr.push_back(std::move(ej));
        }
        j["entries"] = std::move(arr);
        return j;
    }

    static NoiseModel from_json(const nlohmann::json& j) {
        NoiseModel m;
        if (!j.is_object() || !j.contains("version") || !j.contains("entries"))
            throw ModelFormatError("missing version/entries");
        if (j["version"].get<int>() != 1) throw ModelFormatError("unsupported version");
        if (auto meta = j.find("meta"); meta != j.end()) {
            m.duration_us_ = meta->value("duration_us", std::int64_t{0});
            if (auto s = meta->find("streams"); s != meta->end())
                m.streams_ = s->get<std::vector<std::string>>();
        }
        for (const auto& ej : j.at("entries")) {
            if (!ej.contains("subject_exe") || !ej.contains("rule") ||
                !ej.contains("object_pattern") || !ej.contains("byte_threshold"))
                throw ModelFormatError("malformed entry");
            NoiseKey k;
            k.subject_exe = ej.at("subject_exe").get<std::string>();
            k.rule = ej.at("rule").get<std::string>();
            k.object_pattern = ej.at("object_pattern").get<std::string>();
            if (auto sig = ej.find("prereq_sig"); sig != ej.end())
                k.prereq_sig = sig->get<std::vector<std::string>>();
            NoiseEntry e;
            e.key = k;
            e.byte_threshold = ej.at("byte_threshold").get<std::uint64_t>();
            e.hit_count = ej.value("hit_count", std::uint64_t{1});
            m.entries_[k] = std::move(e);
        }
        return m;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write noise model: " + path);
        out << to_json().dump(2) << "\n";
    }

    static NoiseModel load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ModelFormatError("cannot open " + path);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw ModelFormatError("invalid JSON in " + path);
        return from_json(j);
    }

    bool operator==(const NoiseModel& o) const { return entries_ == o.entries_; }

private:
    std::map<NoiseKey, NoiseEntry> entries_;
    std::int64_t duration_us_ = 0;
    std::vector<std::string> streams_;
};

inline bool operator==(const NoiseEntry& a, const NoiseEntry& b) {
    return a.key == b.key && a.byte_threshold == b.byte_threshold &&
           a.hit_count == b.hit_count;
}

// Key for a concrete match, resolving entity identities through the graph.
// The prerequisite signature is the witnesses' rule names in clause order.
inline NoiseKey noise_key_for(const MatchedTTP& m, const ProvGraph& g,
                              const RuleSet& rules, const MatchStore& store) {
    NoiseKey k;
    k.subject_exe = g.base(m.subject_base).attr("exe_path");
    k.rule = rules.rule(m.rule_idx).name;
    k.object_pattern = object_pattern(g.base(m.object_base));
    for (const auto& [ref, witness_id] : m.witnesses) {
        (void)ref;
        k.prereq_sig.push_back(rules.rule(store.get(witness_id).rule_idx).name);
    }
    return k;
}

}  // namespace killchain
