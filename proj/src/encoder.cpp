#include "gcat/encoder.hpp"

#include <cmath>
#include <sstream>

#include "gcat/errors.hpp"
#include "gcat/optimizer.hpp"

namespace gcat {

void validate(const EncoderConfig& cfg) {
    if (cfg.n_head == 0) throw InvalidConfigError("encoder: n_head must be >= 1");
    if (cfg.d_k == 0 || cfg.d_out == 0 || cfg.p_prime == 0) {
        throw InvalidConfigError("encoder: dimensions must be >= 1");
    }
    if (cfg.n_hop == 0) throw InvalidConfigError("encoder: n_hop must be >= 1");
    if (!(cfg.gamma > 0.0)) throw InvalidConfigError("encoder: gamma must be > 0");
    if (!(cfg.lr >= 0.0)) throw InvalidConfigError("encoder: lr must be >= 0");
    if (cfg.batch_size == 0) throw InvalidConfigError("encoder: batch size must be >= 1");
    if (cfg.neg_ratio == 0) throw InvalidConfigError("encoder: neg_ratio must be >= 1");
}

std::vector<Matrix*> EncoderParams::all() {
    std::vector<Matrix*> out;
    for (auto& m : w1) out.push_back(&m);
    for (auto& m : w2) out.push_back(&m);
    for (auto* m : {&w_r, &w_r2, &w_e, &self_relation}) out.push_back(m);
    return out;
}

std::vector<const Matrix*> EncoderParams::all() const {
    auto mut = const_cast<EncoderParams*>(this)->all();
    return {mut.begin(), mut.end()};
}

std::vector<ad::Var> EncoderVars::all() const {
    std::vector<ad::Var> out(w1.begin(), w1.end());
    out.insert(out.end(), w2.begin(), w2.end());
    for (auto v : {w_r, w_r2, w_e, self_relation}) out.push_back(v);
    return out;
}

void validate(const EncoderParams& p) {
    auto fail = [](const std::string& what) { throw ShapeError("encoder params: " + what); };
    if (p.n_head == 0 || p.w1.size() != 2 * p.n_head || p.w2.size() != 2 * p.n_head) {
        fail("expected two layers of n_head weight matrices");
    }
    const std::size_t d_in = p.w_e.rows(), d_out = p.w_e.cols();
    const std::size_t p_in = p.w_r.rows(), p1 = p.w_r.cols();
    const std::size_t d_k = p.w1.front().rows();
    if (p.w_r2.rows() != p1 || p.w_r2.cols() != d_out) fail("W_R2 must be P' x D''");
    if (p.self_relation.rows() != 1 || p.self_relation.cols() != p_in) fail("self relation must be 1 x P_in");
    for (std::size_t h = 0; h < p.n_head; ++h) {
        const auto& a = p.w1_at(0, h);
        const auto& b = p.w1_at(1, h);
        if (a.rows() != d_k || a.cols() != 2 * d_in + p_in) fail("layer-1 W1 must be D_k x (2 D_in + P_in)");
        if (b.rows() != d_out || b.cols() != 2 * p.n_head * d_k + p1) {
            fail("layer-2 W1 must be D'' x (2 D' + P')");
        }
        if (p.w2_at(0, h).rows() != 1 || p.w2_at(0, h).cols() != d_k) fail("layer-1 W2 must be 1 x D_k");
        if (p.w2_at(1, h).rows() != 1 || p.w2_at(1, h).cols() != d_out) fail("layer-2 W2 must be 1 x D''");
    }
}

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& x : m.values()) x = rng.uniform_real(-bound, bound);
    return m;
}

Matrix rect_identity(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
    return m;
}

}  // namespace

EncoderParams init_encoder_params(std::size_t input_dim, std::size_t relation_input_dim,
                                  const EncoderConfig& cfg, Rng& rng) {
    validate(cfg);
    if (input_dim == 0 || relation_input_dim == 0) throw InvalidConfigError("encoder: empty input dims");
    EncoderParams p;
    p.n_head = cfg.n_head;
    const std::size_t d1 = cfg.n_head * cfg.d_k;
    for (std::size_t h = 0; h < cfg.n_head; ++h) {
        p.w1.push_back(glorot(cfg.d_k, 2 * input_dim + relation_input_dim, rng));
    }
    for (std::size_t h = 0; h < cfg.n_head; ++h) {
        p.w1.push_back(glorot(cfg.d_out, 2 * d1 + cfg.p_prime, rng));
    }
    for (std::size_t h = 0; h < cfg.n_head; ++h) p.w2.push_back(glorot(1, cfg.d_k, rng));
    for (std::size_t h = 0; h < cfg.n_head; ++h) p.w2.push_back(glorot(1, cfg.d_out, rng));
    p.w_r = rect_identity(relation_input_dim, cfg.p_prime);
    p.w_r2 = rect_identity(cfg.p_prime, cfg.d_out);
    p.w_e = rect_identity(input_dim, cfg.d_out);
    p.self_relation = Matrix(1, relation_input_dim);
    const double bound = 6.0 / std::sqrt(static_cast<double>(relation_input_dim));
    for (double& x : p.self_relation.values()) x = rng.uniform_real(-bound, bound);
    const double n = l2_norm(p.self_relation.values());
    for (double& x : p.self_relation.values()) x /= n;
    return p;
}

AttentionLayout make_layout(const NeighborhoodIndex& index, std::size_t num_relations) {
    AttentionLayout L;
    L.num_entities = index.num_entities();
    L.num_relations = num_relations;
    L.group_offsets.push_back(0);
    L.path_offsets.push_back(0);
    for (EntityId e = 0; e < index.num_entities(); ++e) {
        for (const auto& entry : index.entries(e)) {
            L.source.push_back(e);
            L.neighbor.push_back(entry.neighbor);
            if (entry.path.empty()) {
                L.path_ids.push_back(num_relations);
            } else {
                for (auto r : entry.path) {
                    if (r >= num_relations) throw IndexError("make_layout: relation id out of range");
                    L.path_ids.push_back(r);
                }
            }
            L.path_offsets.push_back(L.path_ids.size());
        }
        L.group_offsets.push_back(L.source.size());
    }
    return L;
}

EncoderVars bind(ad::ComputeGraph& g, const EncoderParams& params) {
    validate(params);
    EncoderVars v;
    v.n_head = params.n_head;
    for (const auto& m : params.w1) v.w1.push_back(g.leaf(m));
    for (const auto& m : params.w2) v.w2.push_back(g.leaf(m));
    v.w_r = g.leaf(params.w_r);
    v.w_r2 = g.leaf(params.w_r2);
    v.w_e = g.leaf(params.w_e);
    v.self_relation = g.leaf(params.self_relation);
    return v;
}

ad::Var path_relations(ad::Var relations, ad::Var self_row, const AttentionLayout& layout) {
    if (relations.rows() != layout.num_relations) {
        throw ShapeError("path_relations: relation matrix does not match layout");
    }
    ad::Var parts[] = {relations, self_row};
    auto extended = ad::concat_rows(parts);
    auto per_step = ad::gather_rows(extended, layout.path_ids);
    return ad::segment_sum(per_step, layout.path_offsets);
}

ad::Var triple_repr(ad::Var w1, ad::Var entities, ad::Var path_rel, const AttentionLayout& layout) {
    if (entities.rows() != layout.num_entities) {
        throw ShapeError("triple_repr: entity matrix does not match layout");
    }
    ad::Var parts[] = {ad::gather_rows(entities, layout.source),
                       ad::gather_rows(entities, layout.neighbor), path_rel};
    auto x = ad::concat_cols(parts);
    if (x.cols() != w1.cols()) {
        throw ShapeError("triple_repr: W1 expects " + std::to_string(w1.cols()) +
                         " inputs, concatenation has " + std::to_string(x.cols()));
    }
    return ad::matmul(x, ad::transpose(w1));
}

ad::Var attention_weights(ad::Var w2, ad::Var triples, const AttentionLayout& layout) {
    auto logits = ad::leaky_relu(ad::matmul(triples, ad::transpose(w2)));
    return ad::grouped_softmax(logits, layout.group_offsets);
}

LayerTrace layer_forward(std::size_t layer, const EncoderVars& vars, ad::Var entities,
                         ad::Var relations, ad::Var self_row, const AttentionLayout& layout) {
    if (layer > 1) throw ContractError("layer_forward: layer must be 0 or 1");
    LayerTrace trace;
    auto path_rel = path_relations(relations, self_row, layout);
    std::vector<ad::Var> aggregated;
    for (std::size_t h = 0; h < vars.n_head; ++h) {
        auto t = triple_repr(vars.w1[layer * vars.n_head + h], entities, path_rel, layout);
        auto alpha = attention_weights(vars.w2[layer * vars.n_head + h], t, layout);
        trace.triples.push_back(t);
        trace.alpha.push_back(alpha);
        aggregated.push_back(ad::segment_sum(ad::row_scale(t, alpha), layout.group_offsets));
    }
    if (layer == 0) {
        std::vector<ad::Var> activated;
        for (auto a : aggregated) activated.push_back(ad::leaky_relu(a));
        trace.output = ad::concat_cols(activated);
    } else {
        auto total = aggregated.front();
        for (std::size_t h = 1; h < aggregated.size(); ++h) total = total + aggregated[h];
        trace.output = ad::leaky_relu(ad::scale(total, 1.0 / static_cast<double>(vars.n_head)));
    }
    return trace;
}

ad::Var relation_transform(ad::Var relations, ad::Var w) { return ad::matmul(relations, w); }

ad::Var residual_merge(ad::Var initial, ad::Var w_e, ad::Var final_entities) {
    return ad::matmul(initial, w_e) + final_entities;
}

EncoderForward encoder_forward(const EncoderVars& vars, ad::Var entities, ad::Var relations,
                               const AttentionLayout& layout) {
    EncoderForward f;
    f.layer1 = layer_forward(0, vars, entities, relations, vars.self_relation, layout);
    f.relations1 = relation_transform(relations, vars.w_r);
    auto self1 = relation_transform(vars.self_relation, vars.w_r);
    f.layer2 = layer_forward(1, vars, f.layer1.output, f.relations1, self1, layout);
    f.R_out = relation_transform(f.relations1, vars.w_r2);
    f.H = residual_merge(entities, vars.w_e, f.layer2.output);
    return f;
}

ad::Var encoder_loss(ad::Var H, ad::Var R_out, std::span<const TrainPair> pairs, double gamma) {
    if (H.cols() != R_out.cols()) throw ShapeError("encoder_loss: H and R_out widths differ");
    auto distance = [&](auto pick) {
        std::vector<std::size_t> heads, rels, tails;
        for (const auto& p : pairs) {
            const Triple& t = pick(p);
            heads.push_back(t.head);
            rels.push_back(t.relation);
            tails.push_back(t.tail);
        }
        return ad::l1_rows(ad::gather_rows(H, std::move(heads)) +
                           ad::gather_rows(R_out, std::move(rels)) -
                           ad::gather_rows(H, std::move(tails)));
    };
    auto d = distance([](const TrainPair& p) -> const Triple& { return p.valid; });
    auto d_bad = distance([](const TrainPair& p) -> const Triple& { return p.invalid; });
    return ad::sum(ad::relu(ad::add_scalar(d - d_bad, gamma)));
}

EncoderOutput encode(const EncoderParams& params, const EmbeddingTable& input,
                     const AttentionLayout& layout) {
    ad::ComputeGraph g;
    auto vars = bind(g, params);
    auto e = g.leaf(input.entities);
    auto r = g.leaf(input.relations);
    auto f = encoder_forward(vars, e, r, layout);
    return {f.H.value(), f.R_out.value()};
}

EncoderResult train_encoder(const DatasetBundle& bundle, const EmbeddingTable& input,
                            const EncoderConfig& cfg) {
    validate(cfg);
    if (bundle.train.empty()) throw EmptyDatasetError("train_encoder: no training triples");
    if (input.entities.rows() != bundle.num_entities() ||
        input.relations.rows() != bundle.num_relations()) {
        throw ShapeError("train_encoder: input table does not match the vocabulary");
    }
    Rng root(cfg.seed);
    Rng init_rng = root.split(0);
    Rng batch_rng = root.split(1);

    const auto index = build_neighborhood_index(bundle.graph, cfg.n_hop);
    const auto layout = make_layout(index, bundle.num_relations());

    EncoderResult result;
    result.params = init_encoder_params(input.entity_dim(), input.relation_dim(), cfg, init_rng);

    std::unordered_set<Triple, TripleHash> known;
    BatchOptions opts{cfg.neg_ratio, nullptr};
    if (cfg.filtered_negatives) {
        known.insert(bundle.train.begin(), bundle.train.end());
        opts.filter = &known;
    }

    auto params = result.params.all();
    Optimizer opt(AdamConfig{.lr = cfg.lr}, params);
    const std::size_t n_batches = batches_per_epoch(bundle.train.size(), cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            auto pairs = make_batch(bundle.train, cfg.batch_size, bundle.num_entities(), batch_rng, opts);
            ad::ComputeGraph g;
            auto vars = bind(g, result.params);
            auto e = g.leaf(input.entities);
            auto r = g.leaf(input.relations);
            auto f = encoder_forward(vars, e, r, layout);
            auto loss = encoder_loss(f.H, f.R_out, pairs, cfg.gamma);
            const double value = loss.value()[0];
            if (!std::isfinite(value)) {
                std::ostringstream msg;
                msg << "train_encoder: non-finite loss " << value << " at epoch " << epoch + 1
                    << " batch " << b + 1;
                throw DivergenceError(msg.str());
            }
            g.backward(loss);
            std::vector<const Matrix*> grads;
            for (auto v : vars.all()) grads.push_back(&v.grad());
            opt.step(grads);
            total += value;
            count += pairs.size();
        }
        result.epoch_losses.push_back(total / static_cast<double>(count));
    }
    result.output = encode(result.params, input, layout);
    if (!all_finite(result.output.H) || !all_finite(result.output.R_out)) {
        throw DivergenceError("train_encoder: non-finite encoder output");
    }
    return result;
}

namespace {

std::string weight_name(const char* base, std::size_t layer, std::size_t head) {
    return std::string(base) + "_l" + std::to_string(layer + 1) + "_h" + std::to_string(head);
}

}  // namespace

Checkpoint to_checkpoint(const EncoderParams& params, const EncoderOutput& output) {
    Checkpoint ckpt;
    ckpt.stage = StageTag::encoder;
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t h = 0; h < params.n_head; ++h) ckpt.add(weight_name("w1", l, h), params.w1_at(l, h));
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t h = 0; h < params.n_head; ++h) ckpt.add(weight_name("w2", l, h), params.w2_at(l, h));
    ckpt.add("w_r", params.w_r);
    ckpt.add("w_r2", params.w_r2);
    ckpt.add("w_e", params.w_e);
    ckpt.add("self_relation", params.self_relation);
    ckpt.add("entity_output", output.H);
    ckpt.add("relation_output", output.R_out);
    return ckpt;
}

EncoderOutput encoder_output_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.stage != StageTag::encoder) {
        throw FormatError(std::string("checkpoint: expected encoder stage, got ") + stage_name(ckpt.stage));
    }
    return {ckpt.matrix("entity_output"), ckpt.matrix("relation_output")};
}

EncoderParams encoder_params_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.stage != StageTag::encoder) {
        throw FormatError(std::string("checkpoint: expected encoder stage, got ") + stage_name(ckpt.stage));
    }
    EncoderParams p;
    std::size_t heads = 0;
    while (true) {
        bool found = false;
        for (const auto& b : ckpt.blocks) found = found || b.name == weight_name("w1", 0, heads);
        if (!found) break;
        ++heads;
    }
    p.n_head = heads;
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t h = 0; h < heads; ++h) p.w1.push_back(ckpt.matrix(weight_name("w1", l, h)));
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t h = 0; h < heads; ++h) p.w2.push_back(ckpt.matrix(weight_name("w2", l, h)));
    p.w_r = ckpt.matrix("w_r");
    p.w_r2 = ckpt.matrix("w_r2");
    p.w_e = ckpt.matrix("w_e");
    p.self_relation = ckpt.matrix("self_relation");
    validate(p);
    return p;
}

}  // namespace gcat
