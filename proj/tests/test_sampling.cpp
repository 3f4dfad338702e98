#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "gcat/errors.hpp"
#include "gcat/rng.hpp"
#include "gcat/sampling.hpp"

using namespace gcat;

TEST_CASE("rng streams are reproducible and independent of draw count") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42);
    auto before = c.split(3).next_u64();
    c.next_u64();
    CHECK(c.split(3).next_u64() == before);
    CHECK(Rng(42).split(1).next_u64() != Rng(42).split(2).next_u64());
    // std::mt19937_64's 10000th output for the default seed is fixed by the standard.
    Rng d(5489);
    for (int i = 0; i < 9999; ++i) d.next_u64();
    CHECK(d.next_u64() == 9981545732273789042ULL);
    Rng e(1);
    for (int i = 0; i < 1000; ++i) {
        CHECK(e.uniform_index(7) < 7);
        double u = e.uniform01();
        CHECK((u >= 0.0 && u < 1.0));
    }
}

TEST_CASE("corrupt contract") {
    Rng rng(1);
    // Two entities: the replaced slot can only take the other id.
    for (int i = 0; i < 20; ++i) {
        auto c = corrupt({0, 0, 1}, 2, rng);
        CHECK(((c == Triple{1, 0, 1}) || (c == Triple{0, 0, 0})));
    }
    for (int i = 0; i < 1000; ++i) {
        Triple t{static_cast<EntityId>(rng.uniform_index(9)), 3, static_cast<EntityId>(rng.uniform_index(9))};
        auto c = corrupt(t, 9, rng);
        CHECK(c != t);
        CHECK(c.relation == t.relation);
        CHECK(((c.head == t.head) + (c.tail == t.tail)) == 1);
    }
    CHECK_THROWS_AS(corrupt({0, 0, 0}, 1, rng), InvalidConfigError);
}

TEST_CASE("replacement entities are uniform") {
    Rng rng(2024);
    std::map<EntityId, int> heads, tails;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        auto c = corrupt({2, 0, 2}, 5, rng);
        if (c.head != 2) ++heads[c.head];
        if (c.tail != 2) ++tails[c.tail];
    }
    int total_heads = 0;
    for (auto& [e, n] : heads) total_heads += n;
    CHECK(std::abs(total_heads - draws / 2) <= 5 * std::sqrt(draws * 0.25));
    for (const auto* counts : {&heads, &tails}) {
        int n_side = 0;
        for (auto& [e, n] : *counts) n_side += n;
        CHECK(counts->size() == 4);
        const double p = 0.25, mean = n_side * p, sd = std::sqrt(n_side * p * (1 - p));
        for (auto& [e, n] : *counts) CHECK(std::abs(n - mean) <= 5 * sd);
    }
}

TEST_CASE("make_batch") {
    std::vector<Triple> one{{0, 0, 1}};
    Rng rng(42);
    auto b1 = make_batch(one, 1, 3, rng);
    REQUIRE(b1.size() == 1);
    CHECK(b1[0].valid == one[0]);
    CHECK(b1[0].invalid != one[0]);

    std::vector<Triple> s;
    for (EntityId i = 0; i < 10; ++i) s.push_back({i, 0, (i + 1) % 10});
    auto perm = make_batch(s, s.size(), 10, rng);
    std::multiset<Triple> seen, all(s.begin(), s.end());
    for (auto& p : perm) seen.insert(p.valid);
    CHECK(seen == all);

    Rng x(42), y(42);
    auto bx = make_batch(s, 7, 10, x, {3, nullptr});
    auto by = make_batch(s, 7, 10, y, {3, nullptr});
    REQUIRE(bx.size() == 21);
    for (std::size_t i = 0; i < bx.size(); ++i) {
        CHECK(bx[i].valid == by[i].valid);
        CHECK(bx[i].invalid == by[i].invalid);
    }
    CHECK(make_batch(s, 25, 10, rng).size() == 25);

    std::unordered_set<Triple, TripleHash> known(s.begin(), s.end());
    int hits = 0;
    for (auto& p : make_batch(s, 10, 10, rng, {5, &known})) hits += known.count(p.invalid);
    CHECK(hits == 0);

    CHECK_THROWS_AS(make_batch({}, 1, 3, rng), EmptyDatasetError);
    CHECK_THROWS_AS(make_batch(s, 0, 3, rng), InvalidConfigError);
    CHECK(batches_per_epoch(10, 3) == 4);
    CHECK(batches_per_epoch(9, 3) == 3);
}
