#include "gcat/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include "gcat/checkpoint.hpp"
#include "gcat/errors.hpp"

namespace gcat {

namespace {

std::filesystem::path in_out(const RunConfig& cfg, const char* name) { return cfg.out_dir / name; }

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& epoch_losses) {
    std::string text = "epoch,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < epoch_losses.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, epoch_losses[i]);
        text += buf;
    }
    write_text(path, text);
}

DatasetBundle load_dataset(const RunConfig& cfg) {
    return load_split(cfg.train_path(), cfg.valid_path(), cfg.test_path());
}

EmbeddingTable run_transe_stage(const RunConfig& cfg, const DatasetBundle& bundle) {
    ensure_out_dir(cfg);
    auto result = train_transe(bundle, cfg.transe);
    const auto path = in_out(cfg, artifacts::transe_checkpoint);
    save_checkpoint(path, to_checkpoint(result.table));
    write_loss_csv(in_out(cfg, artifacts::transe_loss), result.epoch_losses);
    return table_from_checkpoint(load_checkpoint(path));
}

EncoderOutput run_encoder_stage(const RunConfig& cfg, const DatasetBundle& bundle, const EmbeddingTable& input) {
    ensure_out_dir(cfg);
    auto result = train_encoder(bundle, input, cfg.encoder);
    const auto path = in_out(cfg, artifacts::encoder_checkpoint);
    save_checkpoint(path, to_checkpoint(result.params, result.output));
    write_loss_csv(in_out(cfg, artifacts::encoder_loss), result.epoch_losses);
    return encoder_output_from_checkpoint(load_checkpoint(path));
}

DecoderResult run_decoder_stage(const RunConfig& cfg, const DatasetBundle& bundle, const EncoderOutput& input) {
    ensure_out_dir(cfg);
    auto result = train_decoder(bundle, input, cfg.decoder);
    const auto path = in_out(cfg, artifacts::decoder_checkpoint);
    save_checkpoint(path, to_checkpoint(result));
    write_loss_csv(in_out(cfg, artifacts::decoder_loss), result.epoch_losses);
    auto stored = decoder_from_checkpoint(load_checkpoint(path));
    stored.epoch_losses = std::move(result.epoch_losses);
    return stored;
}

std::vector<std::pair<std::string, Metrics>> report_rows(const RunConfig& cfg, const Evaluation& ev) {
    std::vector<std::pair<std::string, Metrics>> rows;
    if (cfg.eval_mode != EvalMode::raw) rows.emplace_back("filtered", ev.filtered);
    if (cfg.eval_mode != EvalMode::filtered) rows.emplace_back("raw", ev.raw);
    return rows;
}

Evaluation run_evaluation(const RunConfig& cfg, const DatasetBundle& bundle, const DecoderResult& model) {
    ensure_out_dir(cfg);
    auto ev = evaluate([&](const Triple& t) { return score_triple(model, t); }, bundle.num_entities(),
                       bundle.test, bundle.known_triples(), cfg.k_list);
    std::vector<std::pair<std::string, Metrics>> both{{"filtered", ev.filtered}, {"raw", ev.raw}};
    write_text(in_out(cfg, artifacts::metrics_csv), metrics_csv(both));
    write_text(in_out(cfg, artifacts::metrics_markdown), report(both, ReportFormat::markdown));
    return ev;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
    validate(cfg);
    const auto bundle = load_dataset(cfg);
    PipelineResult r;
    r.transe = run_transe_stage(cfg, bundle);
    r.encoder = run_encoder_stage(cfg, bundle, r.transe);
    r.decoder = run_decoder_stage(cfg, bundle, r.encoder);
    r.evaluation = run_evaluation(cfg, bundle, r.decoder);
    write_manifest(cfg, "pipeline");
    return r;
}

void write_manifest(const RunConfig& cfg, const std::string& command) {
    ensure_out_dir(cfg);
    std::string text = "# command: " + command + "\n";
    text += serialize_config(cfg);
    text += "# stage seeds: transe " + std::to_string(cfg.transe.seed) + " encoder " +
            std::to_string(cfg.encoder.seed) + " decoder " + std::to_string(cfg.decoder.seed) + "\n";
    for (const char* name : {artifacts::transe_checkpoint, artifacts::encoder_checkpoint,
                             artifacts::decoder_checkpoint, artifacts::metrics_csv}) {
        const auto path = in_out(cfg, name);
        if (std::filesystem::exists(path)) text += "# crc32 " + std::string(name) + " " + file_crc32_hex(path) + "\n";
    }
    write_text(in_out(cfg, artifacts::manifest), text);
}

}  // namespace gcat
