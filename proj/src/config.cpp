#include "gcat/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "gcat/errors.hpp"
#include "gcat/rng.hpp"

namespace gcat {

std::filesystem::path RunConfig::train_path() const { return train.empty() ? data_dir / "train.txt" : train; }
std::filesystem::path RunConfig::valid_path() const { return valid.empty() ? data_dir / "valid.txt" : valid; }
std::filesystem::path RunConfig::test_path() const { return test.empty() ? data_dir / "test.txt" : test; }

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw InvalidConfigError("config: " + key + " = '" + value + "' is not " + expected);
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "a boolean");
}

std::vector<std::size_t> to_k_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos < v.size()) {
        auto end = v.find(',', pos);
        if (end == std::string::npos) end = v.size();
        auto k = to_size(key, v.substr(pos, end - pos));
        if (k == 0) bad_value(key, v, "a list of positive integers");
        out.push_back(k);
        pos = end + 1;
    }
    return out;
}

std::string from_double(double d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

struct KeyBinding {
    ConfigKey key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define SIZE_KEY(name, field, help)                                                       \
    KeyBinding {                                                                          \
        {name, help, false}, [](RunConfig& c, const std::string& v) { c.field = to_size(name, v); }, \
            [](const RunConfig& c) { return std::to_string(c.field); }                    \
    }
#define DOUBLE_KEY(name, field, help)                                                       \
    KeyBinding {                                                                            \
        {name, help, false}, [](RunConfig& c, const std::string& v) { c.field = to_double(name, v); }, \
            [](const RunConfig& c) { return from_double(c.field); }                         \
    }
#define PATH_KEY(name, field, help)                                                  \
    KeyBinding {                                                                     \
        {name, help, false}, [](RunConfig& c, const std::string& v) { c.field = v; }, \
            [](const RunConfig& c) { return c.field.string(); }                      \
    }

const std::vector<KeyBinding>& bindings() {
    static const std::vector<KeyBinding> table = {
        KeyBinding{{"preset", "base configuration: paper or desk", false},
                   [](RunConfig& c, const std::string& v) { c.preset = v; },
                   [](const RunConfig& c) { return c.preset; }},
        PATH_KEY("data-dir", data_dir, "directory holding train.txt, valid.txt and test.txt"),
        PATH_KEY("train", train, "training split (overrides data-dir)"),
        PATH_KEY("valid", valid, "validation split (overrides data-dir)"),
        PATH_KEY("test", test, "test split (overrides data-dir)"),
        PATH_KEY("out-dir", out_dir, "directory for checkpoints, CSVs and the manifest"),
        KeyBinding{{"seed", "root random seed", false},
                   [](RunConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
                   [](const RunConfig& c) { return std::to_string(c.seed); }},
        SIZE_KEY("dim", transe.dim, "TransE embedding dimension (encoder input)"),
        DOUBLE_KEY("transe-gamma", transe.gamma, "TransE margin"),
        DOUBLE_KEY("transe-lr", transe.lr, "TransE learning rate"),
        SIZE_KEY("transe-epochs", transe.epochs, "TransE epochs"),
        SIZE_KEY("n-head", encoder.n_head, "attention heads per layer"),
        SIZE_KEY("d-k", encoder.d_k, "per-head width of the first layer"),
        SIZE_KEY("d-out", encoder.d_out, "encoder output dimension"),
        SIZE_KEY("p-prime", encoder.p_prime, "intermediate relation dimension"),
        SIZE_KEY("n-hop", encoder.n_hop, "neighborhood radius in hops"),
        DOUBLE_KEY("encoder-gamma", encoder.gamma, "encoder margin"),
        DOUBLE_KEY("encoder-lr", encoder.lr, "encoder learning rate"),
        SIZE_KEY("encoder-epochs", encoder.epochs, "encoder epochs"),
        SIZE_KEY("filters", decoder.filters, "number of ConvKB filters"),
        DOUBLE_KEY("lambda", decoder.lambda, "L2 weight on the ConvKB output weights"),
        DOUBLE_KEY("decoder-lr", decoder.lr, "decoder learning rate"),
        SIZE_KEY("decoder-epochs", decoder.epochs, "decoder epochs"),
        KeyBinding{{"batch-size", "triples per batch in every stage", false},
                   [](RunConfig& c, const std::string& v) {
                       c.transe.batch_size = c.encoder.batch_size = c.decoder.batch_size = to_size("batch-size", v);
                   },
                   [](const RunConfig& c) { return std::to_string(c.transe.batch_size); }},
        KeyBinding{{"neg-ratio", "corruptions per valid triple in every stage", false},
                   [](RunConfig& c, const std::string& v) {
                       c.transe.neg_ratio = c.encoder.neg_ratio = c.decoder.neg_ratio = to_size("neg-ratio", v);
                   },
                   [](const RunConfig& c) { return std::to_string(c.transe.neg_ratio); }},
        KeyBinding{{"k-list", "comma-separated Hits@K cutoffs", false},
                   [](RunConfig& c, const std::string& v) { c.k_list = to_k_list("k-list", v); },
                   [](const RunConfig& c) {
                       std::string s;
                       for (auto k : c.k_list) s += (s.empty() ? "" : ",") + std::to_string(k);
                       return s;
                   }},
        KeyBinding{{"eval-mode", "metrics to display: filtered, raw or both", false},
                   [](RunConfig& c, const std::string& v) {
                       if (v == "filtered") c.eval_mode = EvalMode::filtered;
                       else if (v == "raw") c.eval_mode = EvalMode::raw;
                       else if (v == "both") c.eval_mode = EvalMode::both;
                       else bad_value("eval-mode", v, "filtered, raw or both");
                   },
                   [](const RunConfig& c) {
                       return std::string(c.eval_mode == EvalMode::filtered ? "filtered"
                                          : c.eval_mode == EvalMode::raw    ? "raw"
                                                                            : "both");
                   }},
        KeyBinding{{"format", "report format: markdown or csv", false},
                   [](RunConfig& c, const std::string& v) {
                       if (v == "markdown") c.format = ReportFormat::markdown;
                       else if (v == "csv") c.format = ReportFormat::csv;
                       else bad_value("format", v, "markdown or csv");
                   },
                   [](const RunConfig& c) {
                       return std::string(c.format == ReportFormat::csv ? "csv" : "markdown");
                   }},
        KeyBinding{{"plain-sgd", "literal gradient-descent update for TransE instead of Adam", true},
                   [](RunConfig& c, const std::string& v) { c.transe.plain_sgd = to_bool("plain-sgd", v); },
                   [](const RunConfig& c) { return from_bool(c.transe.plain_sgd); }},
        KeyBinding{{"filtered-negatives", "redraw corruptions that are known training triples", true},
                   [](RunConfig& c, const std::string& v) {
                       c.transe.filtered_negatives = c.encoder.filtered_negatives = c.decoder.filtered_negatives =
                           to_bool("filtered-negatives", v);
                   },
                   [](const RunConfig& c) { return from_bool(c.transe.filtered_negatives); }},
        KeyBinding{{"joint-finetune", "let the decoder also update the encoder outputs", true},
                   [](RunConfig& c, const std::string& v) {
                       c.decoder.joint_finetune = to_bool("joint-finetune", v);
                   },
                   [](const RunConfig& c) { return from_bool(c.decoder.joint_finetune); }},
    };
    return table;
}

#undef SIZE_KEY
#undef DOUBLE_KEY
#undef PATH_KEY

const KeyBinding& binding(const std::string& name) {
    for (const auto& b : bindings())
        if (b.key.name == name) return b;
    throw InvalidConfigError("config: unknown key '" + name + "'");
}

std::string trim(const std::string& s) {
    const auto* ws = " \t\r";
    auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return {};
    auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& b : bindings()) out.push_back(b.key);
        return out;
    }();
    return keys;
}

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.preset = name;
    if (name == "paper") return c;
    if (name != "desk") throw InvalidConfigError("config: unknown preset '" + name + "'");
    c.transe.dim = 32;
    c.transe.lr = 0.01;
    c.transe.epochs = 200;
    c.transe.gamma = 2.0;
    c.encoder.n_head = 2;
    c.encoder.d_k = 16;
    c.encoder.d_out = 32;
    c.encoder.p_prime = 32;
    c.encoder.lr = 0.001;
    c.encoder.epochs = 50;
    c.encoder.gamma = 2.0;
    c.decoder.filters = 8;
    c.decoder.lr = 0.005;
    c.decoder.epochs = 300;
    for (auto* b : {&c.transe.batch_size, &c.encoder.batch_size, &c.decoder.batch_size}) *b = 64;
    return c;
}

KeyValues parse_config_text(const std::string& text, const std::string& source) {
    KeyValues out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
        }
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw InvalidConfigError(source + ":" + std::to_string(line_no) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

RunConfig resolve_config(const KeyValues& file, const KeyValues& cli) {
    std::string preset = "paper";
    for (const auto* layer : {&file, &cli})
        for (const auto& [k, v] : *layer) {
            binding(k);
            if (k == "preset") preset = v;
        }
    RunConfig c = preset_config(preset);
    for (const auto* layer : {&file, &cli})
        for (const auto& [k, v] : *layer)
            if (k != "preset") binding(k).set(c, v);
    c.transe.seed = Rng::derive_seed(c.seed, 1);
    c.encoder.seed = Rng::derive_seed(c.seed, 2);
    c.decoder.seed = Rng::derive_seed(c.seed, 3);
    validate(c);
    return c;
}

void validate(const RunConfig& c) {
    validate(c.transe);
    validate(c.encoder);
    validate(c.decoder);
    if (c.out_dir.empty()) throw InvalidConfigError("config: out-dir must not be empty");
    for (auto k : c.k_list)
        if (k == 0) throw InvalidConfigError("config: k-list entries must be >= 1");
}

std::string serialize_config(const RunConfig& c) {
    std::string out;
    for (const auto& b : bindings()) out += b.key.name + " = " + b.get(c) + "\n";
    return out;
}

}  // namespace gcat
