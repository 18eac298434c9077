#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

#include "killchain/detail/patricia.hpp"

using killchain::detail::PatriciaPool;

TEST_CASE("patricia basic insert and lookup") {
    PatriciaPool pool;
    std::uint32_t t = PatriciaPool::kEmpty;
    CHECK_FALSE(pool.contains(t, 5));
    t = pool.insert(t, 5, 50);
    t = pool.insert(t, 1, 10);
    t = pool.insert(t, 9, 90);
    CHECK(pool.contains(t, 5));
    CHECK(pool.find(t, 1) == 10u);
    CHECK(pool.find(t, 9) == 90u);
    CHECK_FALSE(pool.find(t, 4).has_value());
    CHECK(pool.count(t) == 3);
}

TEST_CASE("patricia persistence: old roots unaffected") {
    PatriciaPool pool;
    std::uint32_t a = pool.insert(PatriciaPool::kEmpty, 3, 1);
    std::uint32_t b = pool.insert(a, 7, 2);
    CHECK(pool.count(a) == 1);
    CHECK(pool.count(b) == 2);
    CHECK_FALSE(pool.contains(a, 7));
}

TEST_CASE("patricia matches std::map under random operations") {
    std::mt19937_64 rng(42);
    for (int round = 0; round < 30; ++round) {
        PatriciaPool pool;
        std::uint32_t t = PatriciaPool::kEmpty;
        std::map<std::uint32_t, std::uint32_t> ref;
        for (int i = 0; i < 300; ++i) {
            std::uint32_t k = rng() % 512;
            std::uint32_t v = static_cast<std::uint32_t>(rng() % 1000);
            t = pool.insert(t, k, v);
            ref[k] = v;
        }
        REQUIRE(pool.count(t) == ref.size());
        // ascending traversal equals map iteration
        auto it = ref.begin();
        pool.for_each(t, [&](std::uint32_t k, std::uint32_t v) {
            REQUIRE(it != ref.end());
            CHECK(k == it->first);
            CHECK(v == it->second);
            ++it;
            return true;
        });
        CHECK(it == ref.end());
        for (std::uint32_t probe = 0; probe < 512; ++probe)
            CHECK(pool.contains(t, probe) == (ref.count(probe) > 0));
    }
}

TEST_CASE("patricia union merges values and shares structure") {
    std::mt19937_64 rng(7);
    for (int round = 0; round < 20; ++round) {
        PatriciaPool pool;
        std::uint32_t a = PatriciaPool::kEmpty, b = PatriciaPool::kEmpty;
        std::map<std::uint32_t, std::uint32_t> ra, rb;
        for (int i = 0; i < 120; ++i) {
            std::uint32_t k = rng() % 256;
            std::uint32_t v = static_cast<std::uint32_t>(rng() % 100);
            if (rng() % 2) {
                a = pool.insert(a, k, v);
                ra[k] = v;
            } else {
                b = pool.insert(b, k, v);
                rb[k] = v;
            }
        }
        auto mx = [](std::uint32_t x, std::uint32_t y) { return std::max(x, y); };
        std::uint32_t u = pool.unite(a, b, mx);
        std::map<std::uint32_t, std::uint32_t> ru = ra;
        for (auto& [k, v] : rb) {
            auto it = ru.find(k);
            ru[k] = it == ru.end() ? v : std::max(it->second, v);
        }
        REQUIRE(pool.count(u) == ru.size());
        pool.for_each(u, [&](std::uint32_t k, std::uint32_t v) {
            CHECK(ru.at(k) == v);
            return true;
        });
        // inputs unchanged
        REQUIRE(pool.count(a) == ra.size());
        REQUIRE(pool.count(b) == rb.size());
    }
}

TEST_CASE("patricia union with itself is identity") {
    PatriciaPool pool;
    std::uint32_t t = PatriciaPool::kEmpty;
    for (std::uint32_t k : {4u, 19u, 200u, 77u}) t = pool.insert(t, k, k);
    auto keep = [](std::uint32_t x, std::uint32_t) { return x; };
    CHECK(pool.unite(t, t, keep) == t);
    CHECK(pool.unite(t, PatriciaPool::kEmpty, keep) == t);
    CHECK(pool.unite(PatriciaPool::kEmpty, t, keep) == t);
}

TEST_CASE("patricia ranged scan starts at lower bound and stops on demand") {
    PatriciaPool pool;
    std::uint32_t t = PatriciaPool::kEmpty;
    for (std::uint32_t k : {2u, 8u, 16u, 64u, 65u, 130u}) t = pool.insert(t, k, k * 2);
    std::vector<std::uint32_t> seen;
    pool.for_each_ge(t, 9, [&](std::uint32_t k, std::uint32_t) {
        if (k >= 100) return false;
        seen.push_back(k);
        return true;
    });
    CHECK(seen == std::vector<std::uint32_t>{16, 64, 65});
}
