#include "gcat/convkb.hpp"

#include <cmath>
#include <sstream>

#include "gcat/errors.hpp"
#include "gcat/optimizer.hpp"

namespace gcat {

void validate(const DecoderConfig& cfg) {
    if (cfg.filters == 0) throw InvalidConfigError("decoder: need at least one filter");
    if (!(cfg.lambda >= 0.0)) throw InvalidConfigError("decoder: lambda must be >= 0");
    if (!(cfg.lr >= 0.0)) throw InvalidConfigError("decoder: lr must be >= 0");
    if (cfg.batch_size == 0) throw InvalidConfigError("decoder: batch size must be >= 1");
    if (cfg.neg_ratio == 0) throw InvalidConfigError("decoder: neg_ratio must be >= 1");
}

void validate(const DecoderParams& p) {
    if (p.filters.rows() == 0 || p.filters.cols() != 3) throw ShapeError("decoder: filters must be Omega x 3");
    if (p.w_out.cols() != 1 || p.w_out.rows() == 0 || p.w_out.rows() % p.filters.rows() != 0) {
        throw ShapeError("decoder: w_out must be an (Omega * d) x 1 column");
    }
}

DecoderParams init_decoder_params(std::size_t dim, const DecoderConfig& cfg, Rng& rng) {
    validate(cfg);
    if (dim == 0) throw InvalidConfigError("decoder: embedding dimension must be >= 1");
    DecoderParams p;
    p.lambda = cfg.lambda;
    p.filters = Matrix(cfg.filters, 3);
    const double base[3] = {0.1, 0.1, -0.1};
    for (std::size_t m = 0; m < cfg.filters; ++m)
        for (std::size_t c = 0; c < 3; ++c) p.filters(m, c) = base[c] + 0.01 * rng.normal();
    const std::size_t n = cfg.filters * dim;
    p.w_out = Matrix(n, 1);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (double& x : p.w_out.values()) x = rng.uniform_real(0.5, 1.5) * s;
    return p;
}

double convkb_score(const DecoderParams& params, std::span<const double> h,
                    std::span<const double> r, std::span<const double> t) {
    validate(params);
    const std::size_t d = params.dim();
    if (h.size() != d || r.size() != d || t.size() != d) {
        throw ShapeError("convkb_score: embeddings must have dimension " + std::to_string(d));
    }
    double score = 0.0;
    for (std::size_t m = 0; m < params.num_filters(); ++m) {
        const double a = params.filters(m, 0), b = params.filters(m, 1), c = params.filters(m, 2);
        for (std::size_t k = 0; k < d; ++k) {
            const double v = a * h[k] + b * r[k] + c * t[k];
            if (v > 0.0 || std::isnan(v)) score += v * params.w_out[m * d + k];
        }
    }
    return score;
}

ad::Var convkb_scores(ad::Var filters, ad::Var w_out, ad::Var H, ad::Var R,
                      std::span<const Triple> triples) {
    if (H.cols() != R.cols()) throw ShapeError("convkb_scores: entity and relation widths differ");
    std::vector<std::size_t> heads, rels, tails;
    for (const auto& t : triples) {
        heads.push_back(t.head);
        rels.push_back(t.relation);
        tails.push_back(t.tail);
    }
    auto maps = ad::relu(ad::conv1x3(ad::gather_rows(H, std::move(heads)),
                                     ad::gather_rows(R, std::move(rels)),
                                     ad::gather_rows(H, std::move(tails)), filters));
    return ad::matmul(maps, w_out);
}

ad::Var soft_margin_loss(ad::Var scores, std::span<const double> labels, ad::Var w_out,
                         double lambda) {
    if (scores.cols() != 1 || scores.rows() != labels.size()) {
        throw ShapeError("soft_margin_loss: one label per score required");
    }
    auto* g = scores.graph;
    auto l = g->leaf(Matrix::column_vector(labels));
    auto data = ad::sum(ad::softplus(ad::mul(l, scores)));
    if (lambda == 0.0) return data;
    return data + ad::scale(ad::dot(w_out, w_out), lambda / 2.0);
}

ad::Var convkb_loss(ad::Var filters, ad::Var w_out, ad::Var H, ad::Var R,
                    std::span<const TrainPair> pairs, double lambda) {
    std::vector<Triple> triples;
    std::vector<double> labels;
    for (const auto& p : pairs) {
        triples.push_back(p.valid);
        labels.push_back(1.0);
    }
    for (const auto& p : pairs) {
        triples.push_back(p.invalid);
        labels.push_back(-1.0);
    }
    return soft_margin_loss(convkb_scores(filters, w_out, H, R, triples), labels, w_out, lambda);
}

DecoderResult train_decoder(const DatasetBundle& bundle, const EncoderOutput& embeddings,
                            const DecoderConfig& cfg) {
    validate(cfg);
    if (bundle.train.empty()) throw EmptyDatasetError("train_decoder: no training triples");
    if (embeddings.H.cols() != embeddings.R_out.cols()) {
        throw ShapeError("train_decoder: entity and relation embeddings differ in width");
    }
    if (embeddings.H.rows() != bundle.num_entities() || embeddings.R_out.rows() != bundle.num_relations()) {
        throw ShapeError("train_decoder: embeddings do not match the vocabulary");
    }
    Rng root(cfg.seed);
    Rng init_rng = root.split(0);
    Rng batch_rng = root.split(1);

    DecoderResult result;
    result.params = init_decoder_params(embeddings.H.cols(), cfg, init_rng);
    result.embeddings = embeddings;

    std::unordered_set<Triple, TripleHash> known;
    BatchOptions opts{cfg.neg_ratio, nullptr};
    if (cfg.filtered_negatives) {
        known.insert(bundle.train.begin(), bundle.train.end());
        opts.filter = &known;
    }

    std::vector<Matrix*> params{&result.params.filters, &result.params.w_out};
    if (cfg.joint_finetune) {
        params.push_back(&result.embeddings.H);
        params.push_back(&result.embeddings.R_out);
    }
    Optimizer opt(AdamConfig{.lr = cfg.lr}, params);
    const std::size_t n_batches = batches_per_epoch(bundle.train.size(), cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            auto pairs = make_batch(bundle.train, cfg.batch_size, bundle.num_entities(), batch_rng, opts);
            ad::ComputeGraph g;
            auto filters = g.leaf(result.params.filters);
            auto w_out = g.leaf(result.params.w_out);
            auto H = g.leaf(result.embeddings.H);
            auto R = g.leaf(result.embeddings.R_out);
            auto loss = convkb_loss(filters, w_out, H, R, pairs, cfg.lambda);
            const double value = loss.value()[0];
            if (!std::isfinite(value)) {
                std::ostringstream msg;
                msg << "train_decoder: non-finite loss " << value << " at epoch " << epoch + 1
                    << " batch " << b + 1;
                throw DivergenceError(msg.str());
            }
            g.backward(loss);
            std::vector<const Matrix*> grads{&filters.grad(), &w_out.grad()};
            if (cfg.joint_finetune) {
                grads.push_back(&H.grad());
                grads.push_back(&R.grad());
            }
            opt.step(grads);
            total += value;
            count += pairs.size();
        }
        result.epoch_losses.push_back(total / static_cast<double>(count));
    }
    return result;
}

double score_triple(const DecoderResult& model, const Triple& t) {
    const auto& H = model.embeddings.H;
    const auto& R = model.embeddings.R_out;
    if (t.head >= H.rows() || t.tail >= H.rows() || t.relation >= R.rows()) {
        throw IndexError("score_triple: id out of range");
    }
    return convkb_score(model.params, H.row(t.head), R.row(t.relation), H.row(t.tail));
}

Checkpoint to_checkpoint(const DecoderResult& model) {
    Checkpoint ckpt;
    ckpt.stage = StageTag::decoder;
    ckpt.add("filters", model.params.filters);
    ckpt.add("w_out", model.params.w_out);
    ckpt.add("lambda", Matrix(1, 1, model.params.lambda));
    ckpt.add("entity_output", model.embeddings.H);
    ckpt.add("relation_output", model.embeddings.R_out);
    return ckpt;
}

DecoderResult decoder_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.stage != StageTag::decoder) {
        throw FormatError(std::string("checkpoint: expected decoder stage, got ") + stage_name(ckpt.stage));
    }
    DecoderResult model;
    model.params.filters = ckpt.matrix("filters");
    model.params.w_out = ckpt.matrix("w_out");
    model.params.lambda = ckpt.matrix("lambda")[0];
    model.embeddings = {ckpt.matrix("entity_output"), ckpt.matrix("relation_output")};
    validate(model.params);
    if (model.embeddings.H.cols() != model.params.dim() || model.embeddings.R_out.cols() != model.params.dim()) {
        throw ShapeError("checkpoint: decoder embeddings do not match w_out");
    }
    return model;
}

}  // namespace gcat
