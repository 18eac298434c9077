// flowtrack.hpp — incremental path_factor computation. For an origin O and a
// node N, path_factor(O, N) is the minimum, over information-flow paths from
// O to N, of the minimum ancestral cover size of the path (the number of
// distinct fork/exec process-tree roots among the processes on it).
//
// Per (node version, origin) we keep the Pareto-minimal set of cover
// root-sets seen over any path, bounded by path_thres; the stored value is
// the smallest root-set size. Because node versions never gain incoming
// edges after creation, a value is final once written. Records are shared
// persistent maps, so a version-chain step that changes nothing costs O(1).

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include <json.hpp>

#include "killchain/detail/patricia.hpp"
#include "killchain/provgraph.hpp"

namespace killchain {

constexpr std::uint32_t kMaxPathThres = 8;

// Sorted set of process-tree roots of one candidate ancestral cover.
struct RootSet {
    std::uint8_t n = 0;
    std::array<BaseId, kMaxPathThres> r{};

    bool contains(BaseId b) const {
        for (std::uint8_t i = 0; i < n; ++i)
            if (r[i] == b) return true;
        return false;
    }

    bool insert(BaseId b) {  // false when capacity would be exceeded
        if (contains(b)) return true;
        if (n >= kMaxPathThres) return false;
        std::uint8_t i = n;
        while (i > 0 && r[i - 1] > b) {
            r[i] = r[i - 1];
            --i;
        }
        r[i] = b;
        ++n;
        return true;
    }

    bool subset_of(const RootSet& o) const {
        std::uint8_t i = 0, j = 0;
        while (i < n && j < o.n) {
            if (r[i] == o.r[j]) ++i;
            else if (r[i] > o.r[j]) { ++j; continue; }
            else return false;
            ++j;
        }
        return i == n;
    }

    bool operator==(const RootSet& o) const {
        return n == o.n && std::equal(r.begin(), r.begin() + n, o.r.begin());
    }
};

class PathFactorTable {
public:
    explicit PathFactorTable(std::uint32_t path_thres = 3) : thres_(path_thres) {
        chains_.emplace_back();  // index 0 unused
    }

    std::uint32_t path_thres() const { return thres_; }

    // Applies a graph delta: contributions flow along each new edge in
    // order. Sources of a new edge predate its destination, so their
    // records are already final.
    void on_delta(const ProvGraph& g, const GraphDelta& delta) {
        grow(g);
        for (std::uint32_t ei : delta.new_edges) propagate(g, ei);
    }

    // Folds the source record of one new edge into the destination record.
    void propagate(const ProvGraph& g, std::uint32_t edge_idx) {
        grow(g);
        const ProvEdge& e = g.edge(edge_idx);
        std::uint32_t src_map = node_pf_[e.src];
        if (src_map == detail::PatriciaPool::kEmpty) return;
        std::uint32_t contrib = transform_map(g, src_map, e.dst);
        node_pf_[e.dst] = unite_maps(node_pf_[e.dst], contrib);
    }

    // Marks `at` as carrying `origin_key` with value 1 and pushes the entry
    // to everything already depending on that node version.
    void register_origin(const ProvGraph& g, std::uint32_t origin_key, NodeRef at) {
        grow(g);
        RootSet rs;
        if (g.is_process(at)) rs.insert(g.tree_root(g.node(at).base));
        std::uint32_t c = intern_chain({rs});
        node_pf_[at] = insert_entry(node_pf_[at], origin_key, c);

        // Sweep existing dependents in ascending (topological) node order.
        std::set<NodeRef> pending{at};
        while (!pending.empty()) {
            NodeRef n = *pending.begin();
            pending.erase(pending.begin());
            auto entry = pool_.find(node_pf_[n], origin_key);
            if (!entry) continue;
            for (std::uint32_t ei : g.out_edges(n)) {
                const ProvEdge& e = g.edge(ei);
                auto moved = transform_chain(g, *entry, e.dst);
                if (!moved) continue;
                std::uint32_t before = node_pf_[e.dst];
                node_pf_[e.dst] = insert_entry(before, origin_key, *moved);
                if (node_pf_[e.dst] != before) pending.insert(e.dst);
            }
        }
    }

    // Smallest known cover size for (node, origin); >= 1, absent when no
    // flow within path_thres exists.
    std::optional<std::uint32_t> value(NodeRef node, std::uint32_t origin_key) const {
        if (node >= node_pf_.size()) return std::nullopt;
        auto c = pool_.find(node_pf_[node], origin_key);
        if (!c) return std::nullopt;
        return std::max<std::uint32_t>(1, chains_[*c].min_size);
    }

    // Ascending scan of origin keys in [lo, hi) present at a node.
    // fn(key, value) returns false to stop.
    template <class Fn>
    void scan_origins(NodeRef node, std::uint32_t lo, std::uint32_t hi, Fn&& fn) const {
        if (node >= node_pf_.size()) return;
        pool_.for_each_ge(node_pf_[node], lo, [&](std::uint32_t k, std::uint32_t c) {
            if (k >= hi) return false;
            return fn(k, std::max<std::uint32_t>(1, chains_[c].min_size));
        });
    }

    nlohmann::ordered_json dump(const ProvGraph& g) const {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (NodeRef n = 0; n < node_pf_.size() && n < g.node_count(); ++n) {
            if (node_pf_[n] == detail::PatriciaPool::kEmpty) continue;
            nlohmann::ordered_json entry;
            entry["node"] = n;
            entry["label"] = g.node_label(n);
            auto origins = nlohmann::ordered_json::array();
            pool_.for_each(node_pf_[n], [&](std::uint32_t k, std::uint32_t c) {
                nlohmann::ordered_json o;
                o["origin"] = k;
                o["value"] = std::max<std::uint32_t>(1, chains_[c].min_size);
                auto sets = nlohmann::ordered_json::array();
                for (const RootSet& rs : chains_[c].sets) {
                    auto s = nlohmann::ordered_json::array();
                    for (std::uint8_t i = 0; i < rs.n; ++i) s.push_back(rs.r[i]);
                    sets.push_back(std::move(s));
                }
                o["root_sets"] = std::move(sets);
                origins.push_back(std::move(o));
                return true;
            });
            entry["origins"] = std::move(origins);
            j.push_back(std::move(entry));
        }
        return j;
    }

private:
    struct Antichain {
        std::vector<RootSet> sets;
        std::uint32_t min_size = 0;
    };

    void grow(const ProvGraph& g) {
        if (node_pf_.size() < g.node_count())
            node_pf_.resize(g.node_count(), detail::PatriciaPool::kEmpty);
    }

    static void minimize(std::vector<RootSet>& sets) {
        std::vector<RootSet> keep;
        for (const RootSet& a : sets) {
            bool dominated = false;
            for (const RootSet& b : sets) {
                if (&a == &b) continue;
                if (b.subset_of(a) && !(a == b)) { dominated = true; break; }
            }
            if (dominated) continue;
            bool dup = false;
            for (const RootSet& k : keep)
                if (k == a) { dup = true; break; }
            if (!dup) keep.push_back(a);
        }
        sets = std::move(keep);
    }

    std::uint32_t intern_chain(std::vector<RootSet> sets) {
        minimize(sets);
        Antichain c;
        c.min_size = thres_ + 1;
        for (const RootSet& rs : sets) c.min_size = std::min<std::uint32_t>(c.min_size, rs.n);
        if (sets.empty()) c.min_size = 0;
        c.sets = std::move(sets);
        chains_.push_back(std::move(c));
        return static_cast<std::uint32_t>(chains_.size() - 1);
    }

    // Moves one antichain across an edge into `dst`: processes stamp their
    // tree root onto every cover; contributions past path_thres are dropped.
    std::optional<std::uint32_t> transform_chain(const ProvGraph& g, std::uint32_t chain,
                                                 NodeRef dst) {
        if (!g.is_process(dst)) return chain;
        BaseId root = g.tree_root(g.node(dst).base);
        const Antichain& in = chains_[chain];
        bool unchanged = true;
        std::vector<RootSet> out;
        out.reserve(in.sets.size());
        for (RootSet rs : in.sets) {
            if (!rs.contains(root)) {
                unchanged = false;
                if (!rs.insert(root) || rs.n > thres_) continue;
            }
            out.push_back(rs);
        }
        if (unchanged) return chain;
        if (out.empty()) return std::nullopt;
        return intern_chain(std::move(out));
    }

    std::uint32_t merge_chains(std::uint32_t a, std::uint32_t b) {
        if (a == b) return a;
        std::vector<RootSet> sets = chains_[a].sets;
        sets.insert(sets.end(), chains_[b].sets.begin(), chains_[b].sets.end());
        minimize(sets);
        if (sets == chains_[a].sets) return a;
        if (sets == chains_[b].sets) return b;
        return intern_chain(std::move(sets));
    }

    std::uint32_t insert_entry(std::uint32_t map, std::uint32_t key, std::uint32_t chain) {
        return pool_.insert(map, key, chain, [this](std::uint32_t old, std::uint32_t nw) {
            return merge_chains(old, nw);
        });
    }

    std::uint32_t unite_maps(std::uint32_t a, std::uint32_t b) {
        return pool_.unite(a, b, [this](std::uint32_t x, std::uint32_t y) {
            return merge_chains(x, y);
        });
    }

    std::uint32_t transform_map(const ProvGraph& g, std::uint32_t map, NodeRef dst) {
        if (!g.is_process(dst)) return map;
        // Version-chain steps within one process never change covers.
        bool identity = true;
        pool_.for_each(map, [&](std::uint32_t, std::uint32_t c) {
            auto moved = transform_chain(g, c, dst);
            if (!moved || *moved != c) { identity = false; return false; }
            return true;
        });
        if (identity) return map;
        std::uint32_t out = detail::PatriciaPool::kEmpty;
        pool_.for_each(map, [&](std::uint32_t k, std::uint32_t c) {
            auto moved = transform_chain(g, c, dst);
            if (moved) out = insert_entry(out, k, *moved);
            return true;
        });
        return out;
    }

    std::uint32_t thres_;
    detail::PatriciaPool pool_;
    std::vector<std::uint32_t> node_pf_;  // NodeRef -> map root
    std::vector<Antichain> chains_;
};

// Size of the minimum ancestral cover of a path: the number of distinct
// fork/exec tree roots among its process nodes (0 when none). A set of
// processes covers the path iff every on-path process is a member or a
// member's descendant, and under forest-shaped ancestry one member per
// distinct root is both necessary and sufficient.
inline int min_ancestral_cover(const ProvGraph& g, const std::vector<NodeRef>& path) {
    std::set<BaseId> roots;
    for (NodeRef n : path)
        if (g.is_process(n)) roots.insert(g.tree_root(g.node(n).base));
    return static_cast<int>(roots.size());
}

// Exhaustive path_factor: minimum over all directed paths n1 -> n2 of the
// path's minimum ancestral cover, clamped to >= 1 (an origin counts itself).
// Enumerates every simple path; test-scale graphs only.
inline std::optional<int> path_factor_oracle(const ProvGraph& g, NodeRef n1, NodeRef n2) {
    std::optional<int> best;
    std::vector<BaseId> stack;  // roots added along the current path, in order
    std::set<BaseId> roots;

    auto consider = [&]() {
        int c = static_cast<int>(roots.size());
        if (!best || c < *best) best = c;
    };

    std::function<void(NodeRef)> dfs = [&](NodeRef u) {
        bool added = false;
        if (g.is_process(u)) {
            BaseId r = g.tree_root(g.node(u).base);
            if (roots.insert(r).second) {
                stack.push_back(r);
                added = true;
            }
        }
        if (u == n2) {
            consider();
        } else {
            for (std::uint32_t ei : g.out_edges(u)) dfs(g.edge(ei).dst);
        }
        if (added) {
            roots.erase(stack.back());
            stack.pop_back();
        }
    };
    dfs(n1);
    if (!best) return std::nullopt;
    return std::max(1, *best);
}

}  // namespace killchain
