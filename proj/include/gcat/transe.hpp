#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcat/autodiff.hpp"
#include "gcat/checkpoint.hpp"
#include "gcat/dataset.hpp"
#include "gcat/rng.hpp"
#include "gcat/sampling.hpp"

namespace gcat {

/// Entity (N_e x D) and relation (N_r x P) embeddings. TransE uses D == P.
struct EmbeddingTable {
    Matrix entities;
    Matrix relations;

    std::size_t entity_dim() const noexcept { return entities.cols(); }
    std::size_t relation_dim() const noexcept { return relations.cols(); }
};

struct TranseConfig {
    std::size_t dim = 200;
    double gamma = 1.0;
    double lr = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch_size = 128;
    std::size_t neg_ratio = 1;
    std::uint64_t seed = 0;
    bool plain_sgd = false;
    bool filtered_negatives = false;
};

/// Throws InvalidConfigError for dim == 0, gamma <= 0, lr < 0, batch_size == 0.
void validate(const TranseConfig& cfg);

/// Every component uniform in [-6/sqrt(D), 6/sqrt(D)); relation rows are then
/// L2-normalized. Entity rows are left raw (training normalizes them at the
/// start of every epoch).
EmbeddingTable init_embeddings(std::size_t num_entities, std::size_t num_relations,
                               const TranseConfig& cfg, Rng& rng);

/// ||h + r - t||_1; lower means more plausible.
double transe_score(const EmbeddingTable& tab, const Triple& t);

/// Sum over pairs of max(0, d_valid - d_invalid + gamma).
ad::Var transe_loss(ad::Var entities, ad::Var relations, std::span<const TrainPair> pairs,
                    double gamma);

double transe_loss_value(const EmbeddingTable& tab, std::span<const TrainPair> pairs, double gamma);

void normalize_rows(Matrix& m);

struct TranseResult {
    EmbeddingTable table;
    std::vector<double> epoch_losses;  // mean loss per training pair
};

/// Runs mini-batch margin training for cfg.epochs epochs of
/// ceil(|train| / batch_size) batches. Entity rows are renormalized at the
/// start of every epoch and once more after the last one. Throws
/// DivergenceError on a non-finite batch loss.
TranseResult train_transe(const DatasetBundle& bundle, const TranseConfig& cfg);

/// Same loop starting from a caller-supplied table.
TranseResult train_transe(const DatasetBundle& bundle, const TranseConfig& cfg,
                          EmbeddingTable initial);

Checkpoint to_checkpoint(const EmbeddingTable& tab);
EmbeddingTable table_from_checkpoint(const Checkpoint& ckpt);

}  // namespace gcat
