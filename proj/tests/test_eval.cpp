#include <doctest.h>

#include <cmath>
#include <limits>

#include "gcat/errors.hpp"
#include "gcat/eval.hpp"
#include "oracles.hpp"

using namespace gcat;

namespace {

const std::vector<std::size_t> kK{1, 3, 10};

std::unordered_set<EntityId> ids(std::initializer_list<EntityId> l) { return {l.begin(), l.end()}; }

}  // namespace

TEST_CASE("rank examples") {
    std::vector<double> s{0.1, 0.5, 0.9};
    CHECK(rank_entity(s, 0, {}).raw == 1);
    CHECK(rank_entity(s, 2, {}).raw == 3);
    std::vector<double> tied(4, 0.3);
    CHECK(rank_entity(tied, 0, {}).raw == 4);
    CHECK(rank_entity(tied, 2, ids({0, 1})).filtered == 2);
    std::vector<double> one{7.0};
    CHECK(rank_entity(one, 0, {}).filtered == 1);
    CHECK_THROWS_AS(rank_entity(s, 3, {}), IndexError);
    CHECK_THROWS_AS(rank_entity(s, 1, ids({1})), ContractError);

    // a NaN competitor counts as ranking ahead
    std::vector<double> nan{0.2, std::numeric_limits<double>::quiet_NaN(), 0.9};
    CHECK(rank_entity(nan, 0, {}).raw == 2);
}

TEST_CASE("ranks agree with a sort-based oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 50;
        std::vector<double> s(n);
        for (double& x : s) x = static_cast<double>(rng.uniform_index(12));  // many ties
        const auto truth = static_cast<EntityId>(rng.uniform_index(n));
        std::unordered_set<EntityId> filter;
        std::set<std::size_t> skip;
        for (std::size_t e = 0; e < n; ++e)
            if (e != truth && rng.uniform01() < 0.3) {
                filter.insert(static_cast<EntityId>(e));
                skip.insert(e);
            }
        auto r = rank_entity(s, truth, filter);
        CHECK(r.raw == oracle::sorted_rank(s, truth, {}));
        CHECK(r.filtered == oracle::sorted_rank(s, truth, skip));
        CHECK(r.filtered <= r.raw);
        CHECK(r.filtered >= 1);
        CHECK(r.raw <= n);

        // lowering the true entity's score never worsens its rank
        auto better = s;
        better[truth] -= 1.0;
        CHECK(rank_entity(better, truth, filter).raw <= r.raw);
    }
}

TEST_CASE("metrics from ranks") {
    std::vector<std::size_t> r{1, 10};
    auto m = metrics_from_ranks(r, kK);
    CHECK(std::abs(m.mrr - 0.55) <= 1e-15);
    CHECK(m.mr == 5.5);
    CHECK(m.hits.at(1) == 0.5);
    CHECK(m.hits.at(3) == 0.5);
    CHECK(m.hits.at(10) == 1.0);
    CHECK(m.query_count == 2);
    auto none = metrics_from_ranks(r, std::vector<std::size_t>{});
    CHECK(none.hits.empty());
    CHECK(std::abs(none.mrr - 0.55) <= 1e-15);

    std::vector<std::size_t> three{1, 2, 3};
    auto m3 = metrics_from_ranks(three, std::vector<std::size_t>{1, 3});
    auto md = report(m3, ReportFormat::markdown);
    CHECK(md == "| H@1 | H@3 | MR | MRR |\n|---|---|---|---|\n| 33.33 | 100.00 | 2 | 0.6111 |\n");
    CHECK(report(m3, ReportFormat::csv) == "H@1,H@3,MR,MRR\n33.33,100.00,2,0.6111\n");
}

TEST_CASE("evaluate") {
    // scorer that prefers the true tail and head: a perfect model
    std::vector<Triple> test{{0, 0, 1}, {2, 0, 3}};
    std::unordered_set<Triple, TripleHash> known(test.begin(), test.end());
    known.insert({0, 0, 2});
    auto perfect = [&](const Triple& t) { return known.count(t) && !(t == Triple{0, 0, 2}) ? 0.0 : 1.0; };
    auto ev = evaluate(perfect, 4, test, known, kK);
    CHECK(ev.queries.size() == 4);
    CHECK(ev.queries[0].side == Side::head);
    CHECK(ev.queries[1].side == Side::tail);
    CHECK(ev.filtered.mrr == 1.0);
    CHECK(ev.raw.mrr == 1.0);

    // a constant scorer ties everyone: raw rank N; filtering (0,0,2) helps the tail query of (0,0,1)
    auto flat = [](const Triple&) { return 0.0; };
    auto ev2 = evaluate(flat, 4, test, known, kK);
    CHECK(ev2.queries[1].rank_raw == 4);
    CHECK(ev2.queries[1].rank_filtered == 3);
    CHECK(ev2.queries[0].rank_filtered == 4);
    for (const auto& q : ev2.queries) CHECK(q.rank_filtered <= q.rank_raw);
    CHECK(ev2.raw.mr == 4.0);

    CHECK_THROWS_AS(evaluate(flat, 4, std::vector<Triple>{}, known, kK), EmptyDatasetError);
}

TEST_CASE("report formats and metrics csv") {
    Rng rng(3);
    std::vector<std::pair<std::string, Metrics>> rows;
    for (const char* label : {"filtered", "raw"}) {
        std::vector<std::size_t> ranks;
        for (int i = 0; i < 37; ++i) ranks.push_back(1 + rng.uniform_index(40));
        rows.emplace_back(label, metrics_from_ranks(ranks, kK));
    }
    auto csv = report(rows, ReportFormat::csv);
    auto md = report(rows, ReportFormat::markdown);
    CHECK(csv.rfind("setting,H@1,H@3,H@10,MR,MRR\n", 0) == 0);
    // markdown holds the same cells as the csv
    std::string from_md;
    std::istringstream in(md);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        if (n++ == 1) continue;
        const std::string cells = line.substr(2, line.size() - 4);
        std::string out;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells.compare(i, 3, " | ") == 0) {
                out += ',';
                i += 2;
            } else {
                out += cells[i];
            }
        }
        from_md += out + "\n";
    }
    CHECK(from_md == csv);

    auto back = parse_metrics_csv(metrics_csv(rows));
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].first == rows[i].first);
        CHECK(back[i].second.mrr == rows[i].second.mrr);
        CHECK(back[i].second.mr == rows[i].second.mr);
        CHECK(back[i].second.hits == rows[i].second.hits);
        CHECK(back[i].second.query_count == 37);
    }
    CHECK_THROWS_AS(parse_metrics_csv("nope\n"), ParseError);
}
