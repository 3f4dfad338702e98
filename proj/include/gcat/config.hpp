#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gcat/convkb.hpp"
#include "gcat/encoder.hpp"
#include "gcat/eval.hpp"
#include "gcat/transe.hpp"

namespace gcat {

enum class EvalMode { filtered, raw, both };

/// Everything a run needs. Stage seeds are derived from the root seed by
/// resolve_config and are not settable on their own.
struct RunConfig {
    std::string preset = "paper";
    std::filesystem::path data_dir;
    std::filesystem::path train, valid, test;
    std::filesystem::path out_dir = "run";
    std::uint64_t seed = 0;
    TranseConfig transe;
    EncoderConfig encoder;
    DecoderConfig decoder;
    std::vector<std::size_t> k_list{1, 3, 10};
    EvalMode eval_mode = EvalMode::filtered;
    ReportFormat format = ReportFormat::markdown;

    std::filesystem::path train_path() const;
    std::filesystem::path valid_path() const;
    std::filesystem::path test_path() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct ConfigKey {
    std::string name;
    std::string help;
    bool is_flag = false;
};

/// Every recognised key, in manifest order. CLI options use the same names
/// as `--name`.
const std::vector<ConfigKey>& config_keys();

/// "paper": dimension 200, lr 0.001. "desk": small dimensions and epoch
/// counts tuned for graphs of a few dozen entities.
RunConfig preset_config(const std::string& name);

/// Parses `key = value` lines; blank lines and text after '#' are ignored.
/// Throws InvalidConfigError (with the line number) on malformed lines.
KeyValues parse_config_text(const std::string& text, const std::string& source);
KeyValues read_config_file(const std::filesystem::path& path);

/// Layers `file` then `cli` over the preset named by the last "preset"
/// entry (default "paper"), derives stage seeds and validates. Unknown keys
/// and invalid values throw InvalidConfigError.
RunConfig resolve_config(const KeyValues& file, const KeyValues& cli);

/// Throws InvalidConfigError for any inconsistent field.
void validate(const RunConfig& cfg);

/// `key = value` lines that resolve back to an identical configuration.
std::string serialize_config(const RunConfig& cfg);

}  // namespace gcat
