#include "gcat/selfcheck.hpp"

#include <algorithm>
#include <cmath>

#include "gcat/convkb.hpp"
#include "gcat/encoder.hpp"
#include "gcat/errors.hpp"
#include "gcat/transe.hpp"

namespace gcat {

namespace {

// Entity and relation values are kept small: rounding noise in the
// finite differences scales with their magnitude, and that noise is what
// coordinates with an exactly zero gradient (cancelling L1 signs) report.
constexpr double kValueScale = 1.0 / 1024.0;

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& x : m.values()) x = scale * rng.normal();
    return m;
}

std::vector<TrainPair> random_pairs(std::size_t n, std::size_t entities, std::size_t relations, Rng& rng) {
    std::vector<TrainPair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        Triple t{static_cast<EntityId>(rng.uniform_index(entities)),
                 static_cast<RelationId>(rng.uniform_index(relations)),
                 static_cast<EntityId>(rng.uniform_index(entities))};
        pairs.push_back({t, corrupt(t, entities, rng)});
    }
    return pairs;
}

}  // namespace

double GradSuiteResult::worst() const { return std::max({transe, encoder, convkb}); }

GradInstance transe_grad_instance(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n_e = 3 + rng.uniform_index(4), n_r = 1 + rng.uniform_index(3), dim = 2 + rng.uniform_index(4);
    auto pairs = random_pairs(4, n_e, n_r, rng);
    const double gamma = kValueScale * (1.0 + rng.uniform01());
    GradInstance inst;
    inst.inputs = {random_matrix(n_e, dim, rng, kValueScale), random_matrix(n_r, dim, rng, kValueScale)};
    inst.expr = [pairs, gamma](ad::ComputeGraph&, std::span<const ad::Var> in) {
        return transe_loss(in[0], in[1], pairs, gamma);
    };
    return inst;
}

GradInstance encoder_grad_instance(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n_e = 3 + rng.uniform_index(4), n_r = 1 + rng.uniform_index(2);
    std::vector<Triple> triples;
    const std::size_t n_t = n_e + rng.uniform_index(n_e);
    for (std::size_t i = 0; i < n_t; ++i) {
        triples.push_back({static_cast<EntityId>(rng.uniform_index(n_e)),
                           static_cast<RelationId>(rng.uniform_index(n_r)),
                           static_cast<EntityId>(rng.uniform_index(n_e))});
    }
    Vocab ents, rels;
    for (std::size_t i = 0; i < n_e; ++i) ents.intern("e" + std::to_string(i));
    for (std::size_t i = 0; i < n_r; ++i) rels.intern("r" + std::to_string(i));
    KnowledgeGraph kg(std::move(ents), std::move(rels), triples);
    const std::size_t n_hop = 1 + rng.uniform_index(2);
    auto layout = make_layout(build_neighborhood_index(kg, n_hop), n_r);

    EncoderConfig cfg;
    cfg.n_head = 2;
    cfg.d_k = 2;
    cfg.d_out = 3;
    cfg.p_prime = 3;
    const std::size_t d_in = 3;
    auto params = init_encoder_params(d_in, d_in, cfg, rng);
    // Perturb the identity-initialised transforms so their gradients are generic.
    for (auto* m : {&params.w_r, &params.w_r2, &params.w_e})
        for (double& x : m->values()) x += 0.3 * rng.normal();

    for (double& x : params.self_relation.values()) x *= kValueScale;

    auto pairs = random_pairs(3, n_e, n_r, rng);
    const double gamma = 2.0 * kValueScale;
    GradInstance inst;
    inst.inputs = {random_matrix(n_e, d_in, rng, kValueScale), random_matrix(n_r, d_in, rng, kValueScale)};
    for (const auto* m : params.all()) inst.inputs.push_back(*m);
    const std::size_t heads = cfg.n_head;
    inst.expr = [layout, pairs, gamma, heads](ad::ComputeGraph&, std::span<const ad::Var> in) {
        EncoderVars v;
        v.n_head = heads;
        std::size_t k = 2;
        for (std::size_t i = 0; i < 2 * heads; ++i) v.w1.push_back(in[k++]);
        for (std::size_t i = 0; i < 2 * heads; ++i) v.w2.push_back(in[k++]);
        v.w_r = in[k++];
        v.w_r2 = in[k++];
        v.w_e = in[k++];
        v.self_relation = in[k++];
        auto f = encoder_forward(v, in[0], in[1], layout);
        return encoder_loss(f.H, f.R_out, pairs, gamma);
    };
    return inst;
}

GradInstance convkb_grad_instance(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n_e = 3 + rng.uniform_index(4), n_r = 1 + rng.uniform_index(3);
    const std::size_t omega = 2, d = 4;
    auto pairs = random_pairs(3, n_e, n_r, rng);
    const double lambda = 0.01 + 0.1 * rng.uniform01();
    GradInstance inst;
    inst.inputs = {random_matrix(omega, 3, rng), random_matrix(omega * d, 1, rng, 1.0 / std::sqrt(omega * d)),
                   random_matrix(n_e, d, rng), random_matrix(n_r, d, rng)};
    inst.expr = [pairs, lambda](ad::ComputeGraph&, std::span<const ad::Var> in) {
        return convkb_loss(in[0], in[1], in[2], in[3], pairs, lambda);
    };
    return inst;
}

GradSuiteResult run_gradient_suite(std::uint64_t seed, double epsilon, double kink_margin,
                                   std::size_t max_retries) {
    GradSuiteResult out;
    auto check = [&](GradInstance (*make)(std::uint64_t), std::uint64_t stream) {
        for (std::size_t attempt = 0; attempt <= max_retries; ++attempt) {
            auto inst = make(Rng::derive_seed(Rng::derive_seed(seed, stream), attempt));
            try {
                return ad::grad_check(inst.expr, inst.inputs, epsilon, kink_margin).max_relative_error;
            } catch (const RetryableKinkError&) {
                ++out.kink_retries;
            }
        }
        throw RetryableKinkError("gradient suite: every redraw landed near a kink");
    };
    out.transe = check(&transe_grad_instance, 1);
    out.encoder = check(&encoder_grad_instance, 2);
    out.convkb = check(&convkb_grad_instance, 3);
    return out;
}

}  // namespace gcat
