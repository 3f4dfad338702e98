#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gcat/config.hpp"
#include "gcat/convkb.hpp"
#include "gcat/dataset.hpp"
#include "gcat/encoder.hpp"
#include "gcat/eval.hpp"
#include "gcat/transe.hpp"

namespace gcat {

/// File names inside RunConfig::out_dir.
namespace artifacts {
inline constexpr const char* transe_checkpoint = "transe.ckpt";
inline constexpr const char* encoder_checkpoint = "encoder.ckpt";
inline constexpr const char* decoder_checkpoint = "decoder.ckpt";
inline constexpr const char* transe_loss = "transe_loss.csv";
inline constexpr const char* encoder_loss = "encoder_loss.csv";
inline constexpr const char* decoder_loss = "decoder_loss.csv";
inline constexpr const char* metrics_csv = "metrics.csv";
inline constexpr const char* metrics_markdown = "metrics.md";
inline constexpr const char* manifest = "manifest.txt";
}  // namespace artifacts

DatasetBundle load_dataset(const RunConfig& cfg);

/// Each stage trains, writes its checkpoint and loss CSV under out_dir, and
/// returns its result read back from the checkpoint, so downstream stages
/// see exactly the stored (binary32) values whether run in one process or
/// resumed from disk.
EmbeddingTable run_transe_stage(const RunConfig& cfg, const DatasetBundle& bundle);
EncoderOutput run_encoder_stage(const RunConfig& cfg, const DatasetBundle& bundle, const EmbeddingTable& input);
DecoderResult run_decoder_stage(const RunConfig& cfg, const DatasetBundle& bundle, const EncoderOutput& input);

/// Ranks the test split with the decoder's scores and writes metrics.csv
/// and metrics.md.
Evaluation run_evaluation(const RunConfig& cfg, const DatasetBundle& bundle, const DecoderResult& model);

/// Rows of the report selected by cfg.eval_mode.
std::vector<std::pair<std::string, Metrics>> report_rows(const RunConfig& cfg, const Evaluation& ev);

struct PipelineResult {
    EmbeddingTable transe;
    EncoderOutput encoder;
    DecoderResult decoder;
    Evaluation evaluation;
};

/// TransE, encoder, decoder, then evaluation, followed by the manifest.
PipelineResult run_pipeline(const RunConfig& cfg);

/// Writes manifest.txt: the command, the resolved configuration, derived
/// stage seeds, and the CRC-32 of every checkpoint present in out_dir.
void write_manifest(const RunConfig& cfg, const std::string& command);

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& epoch_losses);

}  // namespace gcat
