#include <doctest.h>

#include <bit>
#include <cmath>

#include "gcat/encoder.hpp"
#include "gcat/errors.hpp"
#include "gcat/gradcheck.hpp"
#include "gcat/selfcheck.hpp"
#include "gcat/toy.hpp"
#include "oracles.hpp"

using namespace gcat;

namespace {

struct Fixture {
    std::size_t n_e, n_r;
    std::vector<Triple> triples;
    KnowledgeGraph kg;
    AttentionLayout layout;
    EncoderParams params;
    Matrix E, R;
};

Fixture random_fixture(std::uint64_t seed, std::size_t max_entities = 6, std::size_t n_hop = 2,
                       std::size_t n_head = 2) {
    Rng rng(seed);
    Fixture f;
    f.n_e = 2 + rng.uniform_index(max_entities - 1);
    f.n_r = 1 + rng.uniform_index(3);
    f.triples = oracle::random_triples(rng, f.n_e, f.n_r, f.n_e + rng.uniform_index(2 * f.n_e));
    f.kg = oracle::make_graph(f.n_e, f.n_r, f.triples);
    f.layout = make_layout(build_neighborhood_index(f.kg, n_hop), f.n_r);
    EncoderConfig cfg;
    cfg.n_head = n_head;
    cfg.d_k = 3;
    cfg.d_out = 4;
    cfg.p_prime = 5;
    f.params = init_encoder_params(4, 4, cfg, rng);
    for (auto* m : {&f.params.w_r, &f.params.w_r2, &f.params.w_e})
        for (double& x : m->values()) x += 0.5 * rng.normal();
    f.E = oracle::random_matrix(rng, f.n_e, 4);
    f.R = oracle::random_matrix(rng, f.n_r, 4);
    return f;
}

double max_abs_diff(const Matrix& a, const oracle::Mat& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b[i][j]));
    return worst;
}

}  // namespace

TEST_CASE("layout groups follow the neighborhood index") {
    auto kg = oracle::make_graph(3, 2, {{0, 0, 1}, {1, 1, 2}});
    auto layout = make_layout(build_neighborhood_index(kg, 2), 2);
    CHECK(layout.group_offsets == std::vector<std::size_t>{0, 3, 5, 6});
    CHECK(layout.path_ids == std::vector<std::size_t>{2, 0, 0, 1, 2, 1, 2});
    CHECK(layout.path_offsets == std::vector<std::size_t>{0, 1, 2, 4, 5, 6, 7});
}

TEST_CASE("triple representation") {
    auto kg = oracle::make_graph(3, 2, {{0, 0, 1}, {1, 1, 2}});
    auto layout = make_layout(build_neighborhood_index(kg, 2), 2);
    ad::ComputeGraph g;
    Matrix e{{1, 2}, {3, 4}, {5, 6}};
    Matrix r{{0.5, -1}, {2, 0.25}};
    auto E = g.leaf(e), R = g.leaf(r), self = g.leaf(Matrix{{9, 9}});
    auto paths = path_relations(R, self, layout);
    // entry 2 of entity 0 is the 2-hop path [r0, r1]
    CHECK(paths.value()(2, 0) == 2.5);
    CHECK(paths.value()(2, 1) == -0.75);
    CHECK(paths.value()(0, 0) == 9.0);

    Matrix selector(2, 6);
    selector(0, 0) = selector(1, 1) = 1.0;
    auto t = triple_repr(g.leaf(selector), E, paths, layout);
    for (std::size_t k = 0; k < layout.num_entries(); ++k) {
        CHECK(t.value()(k, 0) == e(layout.source[k], 0));
        CHECK(t.value()(k, 1) == e(layout.source[k], 1));
    }
    auto zero = triple_repr(g.leaf(Matrix(2, 6)), E, paths, layout);
    for (double x : zero.value().values()) CHECK(x == 0.0);
    CHECK_THROWS_AS(triple_repr(g.leaf(Matrix(2, 5)), E, paths, layout), ShapeError);

    // a 2-hop path behaves like a single relation equal to the sum
    Rng rng(4);
    auto w1 = g.leaf(oracle::random_matrix(rng, 3, 6));
    auto full = triple_repr(w1, E, paths, layout).value();
    Matrix x(1, 6);
    for (int c = 0; c < 2; ++c) {
        x(0, c) = e(0, c);
        x(0, 2 + c) = e(2, c);
        x(0, 4 + c) = r(0, c) + r(1, c);
    }
    auto direct = ad::matmul(g.leaf(x), ad::transpose(w1)).value();
    for (int c = 0; c < 3; ++c) CHECK(std::abs(full(2, c) - direct(0, c)) <= 1e-12);
}

TEST_CASE("attention weights") {
    ad::ComputeGraph g;
    AttentionLayout one;
    one.group_offsets = {0, 1};
    CHECK(attention_weights(g.leaf(Matrix{{1, 2}}), g.leaf(Matrix{{0.3, -4}}), one).value()[0] == 1.0);
    AttentionLayout two;
    two.group_offsets = {0, 2};
    auto a = attention_weights(g.leaf(Matrix{{1, 2}}), g.leaf(Matrix{{0.3, -4}, {0.3, -4}}), two).value();
    CHECK(a[0] == 0.5);
    CHECK(a[1] == 0.5);

    auto f = random_fixture(5, 3);
    auto ref = oracle::encoder_reference(f.params, f.E, f.R, f.kg.triples(), 2);
    ad::ComputeGraph h;
    auto vars = bind(h, f.params);
    auto trace = layer_forward(0, vars, h.leaf(f.E), h.leaf(f.R), vars.self_relation, f.layout);
    for (std::size_t head = 0; head < 2; ++head)
        for (std::size_t i = 0; i < f.n_e; ++i)
            for (std::size_t k = f.layout.group_offsets[i]; k < f.layout.group_offsets[i + 1]; ++k)
                CHECK(std::abs(trace.alpha[head].value()[k] - ref.alpha1[head][i][k - f.layout.group_offsets[i]]) <= 1e-12);
}

TEST_CASE("layer outputs") {
    // one entity with a self loop, one head: output is LeakyReLU of t for the only neighbor pair
    auto kg = oracle::make_graph(1, 1, {{0, 0, 0}});
    auto layout = make_layout(build_neighborhood_index(kg, 1), 1);
    EncoderConfig cfg;
    cfg.n_head = 1;
    cfg.d_k = 2;
    cfg.d_out = 2;
    cfg.p_prime = 2;
    Rng rng(1);
    auto p = init_encoder_params(2, 2, cfg, rng);
    ad::ComputeGraph g;
    auto vars = bind(g, p);
    auto E = g.leaf(Matrix{{0.4, -0.7}});
    auto R = g.leaf(Matrix{{0.1, 0.2}});
    auto tr = layer_forward(0, vars, E, R, vars.self_relation, layout);
    CHECK(tr.output.cols() == 2);

    // identical heads: the concatenated layer repeats the single-head block
    auto f = random_fixture(8);
    f.params.w1[1] = f.params.w1[0];
    f.params.w2[1] = f.params.w2[0];
    ad::ComputeGraph h;
    auto v2 = bind(h, f.params);
    auto out = layer_forward(0, v2, h.leaf(f.E), h.leaf(f.R), v2.self_relation, f.layout).output.value();
    REQUIRE(out.cols() == 6);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t c = 0; c < 3; ++c) CHECK(out(i, c) == out(i, c + 3));
    auto r1 = relation_transform(h.leaf(f.R), v2.w_r);
    auto second = layer_forward(1, v2, h.leaf(out), r1, ad::matmul(v2.self_relation, v2.w_r), f.layout);
    CHECK(second.output.cols() == 4);
    CHECK_THROWS_AS(layer_forward(2, v2, h.leaf(f.E), h.leaf(f.R), v2.self_relation, f.layout), ContractError);
}

TEST_CASE("relation transform and residual merge") {
    ad::ComputeGraph g;
    Rng rng(2);
    auto R = oracle::random_matrix(rng, 3, 4);
    CHECK(relation_transform(g.leaf(R), g.leaf(Matrix::identity(4))).value() == R);
    for (double x : relation_transform(g.leaf(R), g.leaf(Matrix(4, 2))).value().values()) CHECK(x == 0.0);
    auto W = oracle::random_matrix(rng, 4, 2);
    auto got = relation_transform(g.leaf(R), g.leaf(W)).value();
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 4; ++k) s += R(i, k) * W(k, j);
            CHECK(std::abs(got(i, j) - s) <= 1e-12);
        }

    auto E = oracle::random_matrix(rng, 3, 4), WE = oracle::random_matrix(rng, 4, 2), E2 = oracle::random_matrix(rng, 3, 2);
    auto base = ad::matmul(g.leaf(E), g.leaf(WE)).value();
    CHECK(residual_merge(g.leaf(E), g.leaf(WE), g.leaf(Matrix(3, 2))).value() == base);
    CHECK(residual_merge(g.leaf(E), g.leaf(Matrix(4, 2)), g.leaf(E2)).value() == E2);
    auto merged = residual_merge(g.leaf(E), g.leaf(WE), g.leaf(E2)).value();
    for (std::size_t i = 0; i < merged.size(); ++i) CHECK(merged[i] == base[i] + E2[i]);
}

TEST_CASE("encoder loss") {
    ad::ComputeGraph g;
    auto H = g.leaf(Matrix{{0, 0}, {1, 1}, {5, 5}});
    auto R = g.leaf(Matrix{{1, 1}});
    TrainPair far{{0, 0, 1}, {0, 0, 2}};  // d = 0, d' = 8
    CHECK(encoder_loss(H, R, std::span(&far, 1), 1.0).value()[0] == 0.0);
    TrainPair same{{0, 0, 2}, {0, 0, 2}};
    CHECK(encoder_loss(H, R, std::span(&same, 1), 1.5).value()[0] == 1.5);
    for (std::uint64_t s = 1; s <= 5; ++s) {
        auto inst = encoder_grad_instance(s);
        double err = 0.0;
        try {
            err = ad::grad_check(inst.expr, inst.inputs, 1e-5, 4e-5).max_relative_error;
        } catch (const RetryableKinkError&) {
            continue;  // the suite redraws these; covered by run_gradient_suite
        }
        CHECK(err < 1e-4);
    }
}

TEST_CASE("forward pass matches the straight-line reference") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto f = random_fixture(seed, 6, 1 + seed % 2);
        auto out = encode(f.params, {f.E, f.R}, f.layout);
        auto ref = oracle::encoder_reference(f.params, f.E, f.R, f.kg.triples(), 1 + seed % 2);
        CHECK(max_abs_diff(out.H, ref.H) <= 1e-12);
        CHECK(max_abs_diff(out.R_out, ref.R_out) <= 1e-12);
    }
}

TEST_CASE("masked attention ignores non-neighbors") {
    // 0 -> 1, and 2 -> 3 disjoint: entity 0 never sees entities 2 and 3
    auto kg = oracle::make_graph(4, 1, {{0, 0, 1}, {2, 0, 3}});
    auto layout = make_layout(build_neighborhood_index(kg, 2), 1);
    auto f = random_fixture(3);
    Rng rng(6);
    Matrix E = oracle::random_matrix(rng, 4, 4), R = oracle::random_matrix(rng, 1, 4);
    ad::ComputeGraph g1, g2;
    auto v1 = bind(g1, f.params), v2 = bind(g2, f.params);
    auto base = layer_forward(0, v1, g1.leaf(E), g1.leaf(R), v1.self_relation, layout).output.value();
    E(3, 1) += 10.0;
    E(2, 0) -= 3.0;
    auto moved = layer_forward(0, v2, g2.leaf(E), g2.leaf(R), v2.self_relation, layout).output.value();
    for (std::size_t c = 0; c < base.cols(); ++c) CHECK(std::bit_cast<std::uint64_t>(base(0, c)) == std::bit_cast<std::uint64_t>(moved(0, c)));
}

TEST_CASE("zero residual weight isolates the attention output") {
    auto f = random_fixture(12);
    f.params.w_e = Matrix(f.params.w_e.rows(), f.params.w_e.cols());
    ad::ComputeGraph g;
    auto vars = bind(g, f.params);
    auto fw = encoder_forward(vars, g.leaf(f.E), g.leaf(f.R), f.layout);
    CHECK(fw.H.value() == fw.layer2.output.value());
    CHECK(fw.layer1.output.cols() == 2 * 3);
}

TEST_CASE("training") {
    auto splits = generate_toy_graph(1);
    auto bundle = make_bundle(splits.train, splits.valid, splits.test);
    Rng rng(4);
    EmbeddingTable input{oracle::random_matrix(rng, bundle.num_entities(), 8, 0.3),
                         oracle::random_matrix(rng, bundle.num_relations(), 8, 0.3)};
    EncoderConfig cfg;
    cfg.n_head = 2;
    cfg.d_k = 4;
    cfg.d_out = 8;
    cfg.p_prime = 8;
    cfg.lr = 0.01;
    cfg.epochs = 300;
    cfg.batch_size = 64;
    cfg.seed = 9;
    auto r = train_encoder(bundle, input, cfg);
    CHECK(r.epoch_losses.back() <= 0.2 * r.epoch_losses.front());

    cfg.epochs = 2;
    auto a = train_encoder(bundle, input, cfg), b = train_encoder(bundle, input, cfg);
    CHECK(a.output.H.bit_equal(b.output.H));

    cfg.lr = 0.0;
    auto frozen = train_encoder(bundle, input, cfg);
    Rng init = Rng(cfg.seed).split(0);
    auto p0 = init_encoder_params(8, 8, cfg, init);
    auto layout = make_layout(build_neighborhood_index(bundle.graph, cfg.n_hop), bundle.num_relations());
    CHECK(frozen.output.H.bit_equal(encode(p0, input, layout).H));

    auto ckpt = decode_checkpoint(encode_checkpoint(to_checkpoint(a.params, a.output)));
    auto params = encoder_params_from_checkpoint(ckpt);
    CHECK(params.n_head == 2);
    auto h = a.output.H;
    round_to_float(h);
    CHECK(encoder_output_from_checkpoint(ckpt).H.bit_equal(h));
}
