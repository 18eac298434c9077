// detail/patricia.hpp — pooled persistent big-endian patricia tries over
// uint32 keys. Versions share structure; a node, once allocated, is never
// mutated. Used for per-node-version ancestor sets and for the shared
// origin-map records of the path-factor table.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace killchain::detail {

// One pool holds many tries; a trie is identified by the index of its root.
// Index 0 is the empty trie. Leaves have mask == 0 and carry (key, value);
// branches carry (prefix, one-hot branch bit, left, right). Left subtree
// holds keys with the branch bit clear, so in-order traversal is ascending.
class PatriciaPool {
public:
    static constexpr std::uint32_t kEmpty = 0;

    PatriciaPool() { nodes_.push_back({0, 0, 0, 0}); }

    bool contains(std::uint32_t t, std::uint32_t key) const {
        return find(t, key).has_value();
    }

    std::optional<std::uint32_t> find(std::uint32_t t, std::uint32_t key) const {
        while (t != kEmpty) {
            const Node& n = nodes_[t];
            if (n.mask == 0) {
                if (n.prefix == key) return n.right;
                return std::nullopt;
            }
            if (!match_prefix(key, n.prefix, n.mask)) return std::nullopt;
            t = (key & n.mask) ? n.right : n.left;
        }
        return std::nullopt;
    }

    // Inserts (key, value); when the key exists, the stored value becomes
    // merge(old, value). Returns the new root. The old root stays valid.
    template <class Merge>
    std::uint32_t insert(std::uint32_t t, std::uint32_t key, std::uint32_t value,
                         Merge&& merge) {
        if (t == kEmpty) return leaf(key, value);
        const Node n = nodes_[t];
        if (n.mask == 0) {
            if (n.prefix == key) {
                std::uint32_t merged = merge(n.right, value);
                return merged == n.right ? t : leaf(key, merged);
            }
            return join(key, leaf(key, value), n.prefix, t);
        }
        if (!match_prefix(key, n.prefix, n.mask))
            return join(key, leaf(key, value), n.prefix, t);
        if (key & n.mask) {
            std::uint32_t r = insert(n.right, key, value, merge);
            return r == n.right ? t : branch(n.prefix, n.mask, n.left, r);
        }
        std::uint32_t l = insert(n.left, key, value, merge);
        return l == n.left ? t : branch(n.prefix, n.mask, l, n.right);
    }

    std::uint32_t insert(std::uint32_t t, std::uint32_t key, std::uint32_t value = 0) {
        return insert(t, key, value, [](std::uint32_t, std::uint32_t v) { return v; });
    }

    // Union of two tries; values of shared keys become merge(left, right).
    // Shared subtrees are detected by index equality and reused as-is.
    template <class Merge>
    std::uint32_t unite(std::uint32_t a, std::uint32_t b, Merge&& merge) {
        if (a == b || b == kEmpty) return a;
        if (a == kEmpty) return b;
        const Node na = nodes_[a];
        const Node nb = nodes_[b];
        if (na.mask == 0)
            return insert(b, na.prefix, na.right,
                          [&](std::uint32_t bv, std::uint32_t av) { return merge(av, bv); });
        if (nb.mask == 0)
            return insert(a, nb.prefix, nb.right, merge);
        if (na.mask == nb.mask && na.prefix == nb.prefix) {
            std::uint32_t l = unite(na.left, nb.left, merge);
            std::uint32_t r = unite(na.right, nb.right, merge);
            if (l == na.left && r == na.right) return a;
            if (l == nb.left && r == nb.right) return b;
            return branch(na.prefix, na.mask, l, r);
        }
        if (na.mask > nb.mask && match_prefix(nb.prefix, na.prefix, na.mask)) {
            if (nb.prefix & na.mask) {
                std::uint32_t r = unite(na.right, b, merge);
                return r == na.right ? a : branch(na.prefix, na.mask, na.left, r);
            }
            std::uint32_t l = unite(na.left, b, merge);
            return l == na.left ? a : branch(na.prefix, na.mask, l, na.right);
        }
        if (nb.mask > na.mask && match_prefix(na.prefix, nb.prefix, nb.mask)) {
            if (na.prefix & nb.mask) {
                std::uint32_t r = unite(a, nb.right, merge);
                return r == nb.right ? b : branch(nb.prefix, nb.mask, nb.left, r);
            }
            std::uint32_t l = unite(a, nb.left, merge);
            return l == nb.left ? b : branch(nb.prefix, nb.mask, l, nb.right);
        }
        return join(na.prefix, a, nb.prefix, b);
    }

    // Ascending-key visit; fn(key, value) returns false to stop early.
    // The node is copied out first: fn may insert into this pool, which can
    // relocate the node array.
    template <class Fn>
    bool for_each(std::uint32_t t, Fn&& fn) const {
        if (t == kEmpty) return true;
        const Node n = nodes_[t];
        if (n.mask == 0) return fn(n.prefix, n.right);
        return for_each(n.left, fn) && for_each(n.right, fn);
    }

    // Visits keys >= lo in ascending order; fn returns false to stop.
    template <class Fn>
    bool for_each_ge(std::uint32_t t, std::uint32_t lo, Fn&& fn) const {
        if (t == kEmpty) return true;
        const Node n = nodes_[t];
        if (n.mask == 0) {
            if (n.prefix >= lo) return fn(n.prefix, n.right);
            return true;
        }
        // Keys below this subtree's prefix range cannot reach lo.
        std::uint32_t hi_bits = n.prefix | n.mask | (n.mask - 1);
        if (hi_bits < lo) return true;
        if (n.prefix >= lo) return for_each(n.left, fn) && for_each(n.right, fn);
        return for_each_ge(n.left, lo, fn) && for_each_ge(n.right, lo, fn);
    }

    std::size_t count(std::uint32_t t) const {
        std::size_t c = 0;
        for_each(t, [&](std::uint32_t, std::uint32_t) {
            ++c;
            return true;
        });
        return c;
    }

    std::size_t pool_size() const { return nodes_.size(); }

private:
    struct Node {
        std::uint32_t prefix;  // leaf: key
        std::uint32_t mask;    // 0 for leaf
        std::uint32_t left;    // leaf: unused
        std::uint32_t right;   // leaf: value
    };

    static bool match_prefix(std::uint32_t key, std::uint32_t prefix, std::uint32_t mask) {
        return (key & ~(mask | (mask - 1))) == prefix;
    }

    static std::uint32_t highest_bit(std::uint32_t x) {
        x |= x >> 1;
        x |= x >> 2;
        x |= x >> 4;
        x |= x >> 8;
        x |= x >> 16;
        return x - (x >> 1);
    }

    std::uint32_t leaf(std::uint32_t key, std::uint32_t value) {
        nodes_.push_back({key, 0, 0, value});
        return static_cast<std::uint32_t>(nodes_.size() - 1);
    }

    std::uint32_t branch(std::uint32_t prefix, std::uint32_t mask, std::uint32_t l,
                         std::uint32_t r) {
        nodes_.push_back({prefix, mask, l, r});
        return static_cast<std::uint32_t>(nodes_.size() - 1);
    }

    std::uint32_t join(std::uint32_t p0, std::uint32_t t0, std::uint32_t p1,
                       std::uint32_t t1) {
        std::uint32_t m = highest_bit(p0 ^ p1);
        std::uint32_t p = p0 & ~(m | (m - 1));
        if (p0 & m) return branch(p, m, t1, t0);
        return branch(p, m, t0, t1);
    }

    std::vector<Node> nodes_;
};

}  // namespace killchain::detail
