#include <doctest.h>

#include <cmath>

#include "gcat/errors.hpp"
#include "gcat/gradcheck.hpp"
#include "gcat/selfcheck.hpp"
#include "gcat/transe.hpp"
#include "oracles.hpp"

using namespace gcat;

namespace {

DatasetBundle chain_bundle(int n) {
    std::vector<RawTriple> train;
    for (int i = 0; i + 1 < n; ++i) train.push_back({"n" + std::to_string(i), "next", "n" + std::to_string(i + 1)});
    return make_bundle(train, {}, {});
}

double max_norm_error(const Matrix& m) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) worst = std::max(worst, std::abs(l2_norm(m.row(i)) - 1.0));
    return worst;
}

}  // namespace

TEST_CASE("initialization") {
    TranseConfig cfg;
    cfg.dim = 36;
    Rng rng(7);
    auto tab = init_embeddings(10, 4, cfg, rng);
    for (double x : tab.entities.values()) CHECK((x >= -1.0 && x <= 1.0));
    CHECK(max_norm_error(tab.relations) <= 1e-9);
    Rng again(7);
    CHECK(init_embeddings(10, 4, cfg, again).entities.bit_equal(tab.entities));
    cfg.dim = 0;
    CHECK_THROWS_AS(validate(cfg), InvalidConfigError);
}

TEST_CASE("transe_score") {
    EmbeddingTable tab{Matrix{{1, 0}, {1, 1}, {0, 0}, {2, -3}}, Matrix{{0, 1}, {0, 0}}};
    CHECK(transe_score(tab, {0, 0, 1}) == 0.0);
    CHECK(transe_score(tab, {2, 1, 3}) == 5.0);
    CHECK_THROWS_AS(transe_score(tab, {9, 0, 0}), IndexError);

    Rng rng(3);
    EmbeddingTable r{oracle::random_matrix(rng, 2, 5), oracle::random_matrix(rng, 1, 5)};
    double naive = 0.0;
    for (std::size_t k = 0; k < 5; ++k) naive += std::abs(r.entities(0, k) + r.relations(0, k) - r.entities(1, k));
    CHECK(std::abs(transe_score(r, {0, 0, 1}) - naive) <= 1e-12);
}

TEST_CASE("margin loss cases") {
    // d = 0 for (0,0,1); d' = 10 for (0,0,2)
    EmbeddingTable tab{Matrix{{0}, {1}, {11}}, Matrix{{1}}};
    TrainPair satisfied{{0, 0, 1}, {0, 0, 2}};
    CHECK(transe_loss_value(tab, std::span(&satisfied, 1), 1.0) == 0.0);
    TrainPair equal{{0, 0, 1}, {0, 0, 1}};
    CHECK(transe_loss_value(tab, std::span(&equal, 1), 1.0) == 1.0);
    for (std::uint64_t s = 1; s <= 5; ++s) {
        auto inst = transe_grad_instance(s);
        double err = 0.0;
        try {
            err = ad::grad_check(inst.expr, inst.inputs, 1e-5, 4e-5).max_relative_error;
        } catch (const RetryableKinkError&) {
            continue;  // the suite redraws these; covered by run_gradient_suite
        }
        CHECK(err < 1e-4);
    }
}

TEST_CASE("training on a chain") {
    auto bundle = chain_bundle(8);
    TranseConfig cfg;
    cfg.dim = 32;
    cfg.lr = 0.01;
    cfg.epochs = 200;
    cfg.batch_size = 7;
    cfg.seed = 3;
    auto r = train_transe(bundle, cfg);
    REQUIRE(r.epoch_losses.size() == 200);
    CHECK(r.epoch_losses.back() <= 0.2 * r.epoch_losses.front());
    CHECK(max_norm_error(r.table.entities) <= 1e-9);
    for (double l : r.epoch_losses) CHECK(l >= 0.0);

    auto again = train_transe(bundle, cfg);
    CHECK(again.table.entities.bit_equal(r.table.entities));
    CHECK(again.table.relations.bit_equal(r.table.relations));

    cfg.lr = 0.0;
    cfg.epochs = 3;
    Rng init = Rng(cfg.seed).split(0);
    auto start = init_embeddings(bundle.num_entities(), bundle.num_relations(), cfg, init);
    auto frozen = train_transe(bundle, cfg, start);
    // once per epoch and once more at the end
    for (std::size_t k = 0; k <= cfg.epochs; ++k) normalize_rows(start.entities);
    CHECK(frozen.table.entities.bit_equal(start.entities));
    CHECK(frozen.table.relations.bit_equal(start.relations));

    cfg.plain_sgd = true;
    cfg.lr = 0.01;
    CHECK_NOTHROW(train_transe(bundle, cfg));
}

TEST_CASE("divergence is reported") {
    auto bundle = chain_bundle(4);
    TranseConfig cfg;
    cfg.dim = 2;
    cfg.epochs = 1;
    EmbeddingTable bad{Matrix(4, 2, std::numeric_limits<double>::infinity()), Matrix(1, 2, 0.0)};
    CHECK_THROWS_AS(train_transe(bundle, cfg, bad), DivergenceError);
}

TEST_CASE("table checkpoint round trip") {
    Rng rng(1);
    EmbeddingTable tab{oracle::random_matrix(rng, 4, 3), oracle::random_matrix(rng, 2, 3)};
    round_to_float(tab.entities);
    round_to_float(tab.relations);
    auto back = table_from_checkpoint(decode_checkpoint(encode_checkpoint(to_checkpoint(tab))));
    CHECK(back.entities.bit_equal(tab.entities));
    CHECK(back.relations.bit_equal(tab.relations));
    Checkpoint wrong;
    wrong.stage = StageTag::decoder;
    CHECK_THROWS_AS(table_from_checkpoint(wrong), FormatError);
}
