#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcat/autodiff.hpp"
#include "gcat/checkpoint.hpp"
#include "gcat/dataset.hpp"
#include "gcat/graph.hpp"
#include "gcat/rng.hpp"
#include "gcat/sampling.hpp"
#include "gcat/transe.hpp"

namespace gcat {

/// Relation-aware two-layer multi-head graph attention encoder.
///
/// For every entity i and every neighborhood entry (j, path k) of i:
///   t_ijk   = W1[l,h] [e_i || e_j || r_k]          r_k = sum of the path's
///                                                   relation rows (self entry:
///                                                   the learned self relation)
///   alpha   = softmax over i's entries of LeakyReLU(W2[l,h] t_ijk)
/// Layer 1 concatenates heads:  e'_i  = ||_h  s( sum alpha t )
/// Layer 2 averages heads:      e''_i = s( 1/N_head sum_h sum alpha' t' )
/// with s = LeakyReLU(0.2). Relations follow R' = R W_R and R'' = R' W_R2,
/// and the output entities are H = E W_E + E''.
struct EncoderConfig {
    std::size_t n_head = 2;
    std::size_t d_k = 100;      // per-head width of layer 1 (D' = n_head * d_k)
    std::size_t d_out = 200;    // D'' = P''
    std::size_t p_prime = 200;  // P'
    std::size_t n_hop = 2;
    double gamma = 1.0;
    double lr = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch_size = 128;
    std::size_t neg_ratio = 1;
    std::uint64_t seed = 0;
    bool filtered_negatives = false;
};

void validate(const EncoderConfig& cfg);

struct EncoderParams {
    std::size_t n_head = 0;
    std::vector<Matrix> w1;  // index layer * n_head + head; layer 0 is the first layer
    std::vector<Matrix> w2;
    Matrix w_r;            // P_in x P'
    Matrix w_r2;           // P' x P''
    Matrix w_e;            // D_in x D''
    Matrix self_relation;  // 1 x P_in

    const Matrix& w1_at(std::size_t layer, std::size_t head) const { return w1[layer * n_head + head]; }
    const Matrix& w2_at(std::size_t layer, std::size_t head) const { return w2[layer * n_head + head]; }
    std::size_t input_dim() const { return w_e.rows(); }
    std::size_t relation_input_dim() const { return w_r.rows(); }
    std::size_t d_k() const { return w1.front().rows(); }
    std::size_t d_out() const { return w_e.cols(); }
    std::size_t p_prime() const { return w_r.cols(); }

    /// Every mutable matrix, in a fixed order shared with EncoderVars.
    std::vector<Matrix*> all();
    std::vector<const Matrix*> all() const;
};

/// Throws ShapeError unless all shapes agree with each other.
void validate(const EncoderParams& params);

/// W1/W2 use Glorot-uniform draws; W_R, W_R2 and W_E start as rectangular
/// identities so the translational geometry of the input passes through;
/// the self relation is a normalized uniform row.
EncoderParams init_encoder_params(std::size_t input_dim, std::size_t relation_input_dim,
                                  const EncoderConfig& cfg, Rng& rng);

/// Neighborhood index flattened into contiguous per-entity groups.
struct AttentionLayout {
    std::size_t num_entities = 0;
    std::size_t num_relations = 0;  // path id num_relations denotes the self relation
    std::vector<std::size_t> source;
    std::vector<std::size_t> neighbor;
    std::vector<std::size_t> path_ids;
    std::vector<std::size_t> path_offsets;   // entries + 1
    std::vector<std::size_t> group_offsets;  // num_entities + 1

    std::size_t num_entries() const noexcept { return source.size(); }
};

AttentionLayout make_layout(const NeighborhoodIndex& index, std::size_t num_relations);

/// Leaves bound to one ComputeGraph, mirroring EncoderParams.
struct EncoderVars {
    std::size_t n_head = 0;
    std::vector<ad::Var> w1;
    std::vector<ad::Var> w2;
    ad::Var w_r, w_r2, w_e, self_relation;

    std::vector<ad::Var> all() const;
};

EncoderVars bind(ad::ComputeGraph& g, const EncoderParams& params);

/// Per-entry path relation embeddings (entries x P), from relation rows
/// extended with the self row.
ad::Var path_relations(ad::Var relations, ad::Var self_row, const AttentionLayout& layout);

/// Rows t_ijk = W1 [e_i || e_j || r_k] for every layout entry.
ad::Var triple_repr(ad::Var w1, ad::Var entities, ad::Var path_rel, const AttentionLayout& layout);

/// Column of alpha_ijk, normalized within each entity's group.
ad::Var attention_weights(ad::Var w2, ad::Var triples, const AttentionLayout& layout);

struct LayerTrace {
    std::vector<ad::Var> triples;  // per head
    std::vector<ad::Var> alpha;    // per head
    ad::Var output;
};

/// layer 0 concatenates heads, layer 1 averages them.
LayerTrace layer_forward(std::size_t layer, const EncoderVars& vars, ad::Var entities,
                         ad::Var relations, ad::Var self_row, const AttentionLayout& layout);

ad::Var relation_transform(ad::Var relations, ad::Var w);

/// H = E W_E + E''.
ad::Var residual_merge(ad::Var initial, ad::Var w_e, ad::Var final_entities);

struct EncoderForward {
    LayerTrace layer1;
    LayerTrace layer2;
    ad::Var relations1;  // R'
    ad::Var H;
    ad::Var R_out;  // R''
};

EncoderForward encoder_forward(const EncoderVars& vars, ad::Var entities, ad::Var relations,
                               const AttentionLayout& layout);

/// Sum over pairs of max(0, d_valid - d_invalid + gamma) with
/// d = ||H_h + R_r - H_t||_1.
ad::Var encoder_loss(ad::Var H, ad::Var R_out, std::span<const TrainPair> pairs, double gamma);

struct EncoderOutput {
    Matrix H;      // N_e x D''
    Matrix R_out;  // N_r x P''
};

/// Forward pass without training.
EncoderOutput encode(const EncoderParams& params, const EmbeddingTable& input,
                     const AttentionLayout& layout);

struct EncoderResult {
    EncoderParams params;
    EncoderOutput output;
    std::vector<double> epoch_losses;
};

/// Builds the n-hop index over the training graph, then trains the encoder
/// weights with Adam on encoder_loss. The input table stays fixed.
/// Throws DivergenceError on a non-finite loss.
EncoderResult train_encoder(const DatasetBundle& bundle, const EmbeddingTable& input,
                            const EncoderConfig& cfg);

Checkpoint to_checkpoint(const EncoderParams& params, const EncoderOutput& output);
EncoderOutput encoder_output_from_checkpoint(const Checkpoint& ckpt);
EncoderParams encoder_params_from_checkpoint(const Checkpoint& ckpt);

}  // namespace gcat
