#include "gcat/transe.hpp"

#include <cmath>
#include <sstream>

#include "gcat/errors.hpp"
#include "gcat/optimizer.hpp"

namespace gcat {

void validate(const TranseConfig& cfg) {
    if (cfg.dim == 0) throw InvalidConfigError("transe: dimension must be >= 1");
    if (!(cfg.gamma > 0.0)) throw InvalidConfigError("transe: gamma must be > 0");
    if (!(cfg.lr >= 0.0)) throw InvalidConfigError("transe: lr must be >= 0");
    if (cfg.batch_size == 0) throw InvalidConfigError("transe: batch size must be >= 1");
    if (cfg.neg_ratio == 0) throw InvalidConfigError("transe: neg_ratio must be >= 1");
}

void normalize_rows(Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = m.row(i);
        double n = l2_norm(row);
        if (n == 0.0) continue;
        for (double& x : row) x /= n;
    }
}

EmbeddingTable init_embeddings(std::size_t num_entities, std::size_t num_relations,
                               const TranseConfig& cfg, Rng& rng) {
    if (cfg.dim == 0) throw InvalidConfigError("init_embeddings: dimension must be >= 1");
    if (num_entities == 0 || num_relations == 0) {
        throw InvalidConfigError("init_embeddings: need at least one entity and one relation");
    }
    const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
    EmbeddingTable tab{Matrix(num_entities, cfg.dim), Matrix(num_relations, cfg.dim)};
    for (double& x : tab.relations.values()) x = rng.uniform_real(-bound, bound);
    normalize_rows(tab.relations);
    for (double& x : tab.entities.values()) x = rng.uniform_real(-bound, bound);
    return tab;
}

double transe_score(const EmbeddingTable& tab, const Triple& t) {
    if (t.head >= tab.entities.rows() || t.tail >= tab.entities.rows() ||
        t.relation >= tab.relations.rows()) {
        throw IndexError("transe_score: id out of range");
    }
    auto h = tab.entities.row(t.head);
    auto r = tab.relations.row(t.relation);
    auto tl = tab.entities.row(t.tail);
    double d = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) d += std::abs(h[k] + r[k] - tl[k]);
    return d;
}

namespace {

ad::Var translation_distance(ad::Var entities, ad::Var relations, std::span<const Triple> triples) {
    std::vector<std::size_t> heads, rels, tails;
    for (const auto& t : triples) {
        heads.push_back(t.head);
        rels.push_back(t.relation);
        tails.push_back(t.tail);
    }
    auto h = ad::gather_rows(entities, std::move(heads));
    auto r = ad::gather_rows(relations, std::move(rels));
    auto t = ad::gather_rows(entities, std::move(tails));
    return ad::l1_rows(h + r - t);
}

}  // namespace

ad::Var transe_loss(ad::Var entities, ad::Var relations, std::span<const TrainPair> pairs,
                    double gamma) {
    std::vector<Triple> valid, invalid;
    for (const auto& p : pairs) {
        valid.push_back(p.valid);
        invalid.push_back(p.invalid);
    }
    auto d = translation_distance(entities, relations, valid);
    auto d_bad = translation_distance(entities, relations, invalid);
    return ad::sum(ad::relu(ad::add_scalar(d - d_bad, gamma)));
}

double transe_loss_value(const EmbeddingTable& tab, std::span<const TrainPair> pairs, double gamma) {
    ad::ComputeGraph g;
    auto e = g.leaf(tab.entities);
    auto r = g.leaf(tab.relations);
    return transe_loss(e, r, pairs, gamma).value()[0];
}

TranseResult train_transe(const DatasetBundle& bundle, const TranseConfig& cfg) {
    validate(cfg);
    Rng root(cfg.seed);
    Rng init_rng = root.split(0);
    return train_transe(bundle, cfg,
                        init_embeddings(bundle.num_entities(), bundle.num_relations(), cfg, init_rng));
}

TranseResult train_transe(const DatasetBundle& bundle, const TranseConfig& cfg,
                          EmbeddingTable initial) {
    validate(cfg);
    if (bundle.train.empty()) throw EmptyDatasetError("train_transe: no training triples");
    if (initial.entities.rows() != bundle.num_entities() ||
        initial.relations.rows() != bundle.num_relations()) {
        throw ShapeError("train_transe: table does not match the vocabulary");
    }

    Rng batch_rng = Rng(cfg.seed).split(1);
    TranseResult result{std::move(initial), {}};
    auto& tab = result.table;

    std::unordered_set<Triple, TripleHash> known;
    BatchOptions opts{cfg.neg_ratio, nullptr};
    if (cfg.filtered_negatives) {
        known.insert(bundle.train.begin(), bundle.train.end());
        opts.filter = &known;
    }

    Matrix* params[] = {&tab.entities, &tab.relations};
    Optimizer opt(AdamConfig{.lr = cfg.lr}, params, cfg.plain_sgd);
    const std::size_t n_batches = batches_per_epoch(bundle.train.size(), cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        normalize_rows(tab.entities);
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            auto pairs = make_batch(bundle.train, cfg.batch_size, bundle.num_entities(), batch_rng, opts);
            ad::ComputeGraph g;
            auto e = g.leaf(tab.entities);
            auto r = g.leaf(tab.relations);
            auto loss = transe_loss(e, r, pairs, cfg.gamma);
            const double value = loss.value()[0];
            if (!std::isfinite(value)) {
                std::ostringstream msg;
                msg << "train_transe: non-finite loss " << value << " at epoch " << epoch + 1
                    << " batch " << b + 1;
                throw DivergenceError(msg.str());
            }
            g.backward(loss);
            const Matrix* grads[] = {&e.grad(), &r.grad()};
            opt.step(grads);
            total += value;
            count += pairs.size();
        }
        result.epoch_losses.push_back(total / static_cast<double>(count));
    }
    normalize_rows(tab.entities);
    return result;
}

Checkpoint to_checkpoint(const EmbeddingTable& tab) {
    Checkpoint ckpt;
    ckpt.stage = StageTag::transe;
    ckpt.add("entity_embeddings", tab.entities);
    ckpt.add("relation_embeddings", tab.relations);
    return ckpt;
}

EmbeddingTable table_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.stage != StageTag::transe) {
        throw FormatError(std::string("checkpoint: expected transe stage, got ") +
                          stage_name(ckpt.stage));
    }
    return {ckpt.matrix("entity_embeddings"), ckpt.matrix("relation_embeddings")};
}

}  // namespace gcat
