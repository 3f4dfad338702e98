#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcat/autodiff.hpp"
#include "gcat/checkpoint.hpp"
#include "gcat/dataset.hpp"
#include "gcat/encoder.hpp"
#include "gcat/rng.hpp"
#include "gcat/sampling.hpp"

namespace gcat {

struct DecoderConfig {
    std::size_t filters = 8;  // Omega
    double lambda = 1e-3;
    double lr = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch_size = 128;
    std::size_t neg_ratio = 1;
    std::uint64_t seed = 0;
    bool filtered_negatives = false;
    /// Also update the encoder outputs H and R_out during decoder training.
    bool joint_finetune = false;
};

void validate(const DecoderConfig& cfg);

struct DecoderParams {
    Matrix filters;  // Omega x 3, row m applied to [h, r, t]
    Matrix w_out;    // (Omega * d) x 1
    double lambda = 0.0;

    std::size_t num_filters() const noexcept { return filters.rows(); }
    std::size_t dim() const noexcept { return filters.rows() == 0 ? 0 : w_out.rows() / filters.rows(); }
};

/// Throws ShapeError unless filters is Omega x 3 with Omega >= 1 and w_out
/// is a column of length Omega * d for some d >= 1.
void validate(const DecoderParams& params);

/// Filters start at [0.1, 0.1, -0.1] plus N(0, 0.01^2) noise; w_out is
/// uniform in [0.5, 1.5) / sqrt(Omega * d).
DecoderParams init_decoder_params(std::size_t dim, const DecoderConfig& cfg, Rng& rng);

/// concat_m ReLU(w_m0 h + w_m1 r + w_m2 t) . w_out. Throws ShapeError.
double convkb_score(const DecoderParams& params, std::span<const double> h,
                    std::span<const double> r, std::span<const double> t);

/// Scores of `triples` as an M x 1 column, rows gathered from H and R.
ad::Var convkb_scores(ad::Var filters, ad::Var w_out, ad::Var H, ad::Var R,
                      std::span<const Triple> triples);

/// Sum of log(1 + exp(l_i f_i)) + lambda/2 ||w_out||^2 for a score column
/// and labels l_i in {1, -1}.
ad::Var soft_margin_loss(ad::Var scores, std::span<const double> labels, ad::Var w_out,
                         double lambda);

/// Soft-margin loss over pairs: every valid triple has label 1, every
/// corruption label -1.
ad::Var convkb_loss(ad::Var filters, ad::Var w_out, ad::Var H, ad::Var R,
                    std::span<const TrainPair> pairs, double lambda);

struct DecoderResult {
    DecoderParams params;
    EncoderOutput embeddings;  // as used for scoring (updated under joint_finetune)
    std::vector<double> epoch_losses;
};

/// Adam training of the decoder on paired batches. Throws ShapeError when
/// H and R_out widths differ, DivergenceError on a non-finite loss.
DecoderResult train_decoder(const DatasetBundle& bundle, const EncoderOutput& embeddings,
                            const DecoderConfig& cfg);

/// Scores a triple against the decoder's own embedding copy.
double score_triple(const DecoderResult& model, const Triple& t);

Checkpoint to_checkpoint(const DecoderResult& model);
DecoderResult decoder_from_checkpoint(const Checkpoint& ckpt);

}  // namespace gcat
