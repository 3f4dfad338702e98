// gcat: command-line driver for the link-prediction pipeline.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gcat/config.hpp"
#include "gcat/errors.hpp"
#include "gcat/graph.hpp"
#include "gcat/pipeline.hpp"
#include "gcat/selfcheck.hpp"
#include "gcat/toy.hpp"

namespace {

using namespace gcat;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitDivergence = 4;

const char* kCommands[] = {"ingest",   "stats",     "train-transe", "train-encoder", "train-decoder",
                           "evaluate", "gradcheck", "proximity",    "report",        "pipeline"};

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

int fail(const char* kind, const std::string& message, int code) {
    std::cerr << "error: kind=" << kind << " message=" << one_line(message) << '\n';
    return code;
}

std::string usage() {
    std::string s = "usage: gcat <command> [options]\ncommands:";
    for (const char* c : kCommands) s += std::string(" ") + c;
    return s + "\nrun 'gcat <command> --help' for the options of one command\n";
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct ConfigOptions {
    std::string config_file;
    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App& app) {
        app.add_option("--config", config_file, "key = value configuration file");
        for (const auto& key : config_keys()) {
            if (key.is_flag) {
                options[key.name] = app.add_flag("--" + key.name, flags[key.name], key.help);
            } else {
                options[key.name] = app.add_option("--" + key.name, values[key.name], key.help);
            }
        }
    }

    RunConfig resolve() const {
        KeyValues file = config_file.empty() ? KeyValues{} : read_config_file(config_file);
        KeyValues cli;
        for (const auto& key : config_keys()) {
            if (options.at(key.name)->count() == 0) continue;
            cli.emplace_back(key.name, key.is_flag ? (flags.at(key.name) ? "true" : "false") : values.at(key.name));
        }
        return resolve_config(file, cli);
    }
};

void print_stats(const DatasetBundle& bundle) {
    auto s = dataset_stats(bundle);
    std::printf("| Entities | Relations | Train | Valid | Test |\n|---|---|---|---|---|\n");
    std::printf("| %zu | %zu | %zu | %zu | %zu |\n", s.entities, s.relations, s.train, s.valid, s.test);
    if (s.cross_split_duplicates != 0) {
        std::fprintf(stderr, "warning: %zu triples occur in more than one split\n", s.cross_split_duplicates);
    }
}

void print_losses(const char* stage, const std::filesystem::path& csv) {
    std::printf("%s: wrote %s\n", stage, csv.string().c_str());
}

void print_report(const RunConfig& cfg, const Evaluation& ev) {
    std::cout << report(report_rows(cfg, ev), cfg.format);
}

int cmd_gradcheck(const RunConfig& cfg) {
    constexpr double kTolerance = 1e-4;
    auto r = run_gradient_suite(cfg.seed);
    std::printf("transe_loss  max relative error %.3e\n", r.transe);
    std::printf("encoder_loss max relative error %.3e\n", r.encoder);
    std::printf("convkb_loss  max relative error %.3e\n", r.convkb);
    std::printf("max relative error %.3e (tolerance %.0e, kink redraws %zu)\n", r.worst(), kTolerance,
                r.kink_retries);
    return r.worst() < kTolerance ? 0 : kExitFailure;
}

int cmd_proximity(bool demo, std::size_t u, std::size_t v) {
    auto g = example_weighted_graph();
    auto show = [&](std::size_t a, std::size_t b) {
        if (a < 1 || b < 1 || a > g.num_vertices() || b > g.num_vertices()) {
            throw IndexError("proximity: vertex labels run from 1 to " + std::to_string(g.num_vertices()));
        }
        auto s = second_order_proximity(g, a - 1, b - 1);
        if (s) {
            std::printf("s(%zu,%zu) = %.2f\n", a, b, *s);
        } else {
            std::printf("s(%zu,%zu) undefined (isolated vertex)\n", a, b);
        }
    };
    if (demo) {
        std::printf("first-order proximity w(1,2) = %.1f\n", first_order_vector(g, 0)[1]);
        show(1, 2);
        show(1, 5);
    }
    if (u != 0 || v != 0) show(u, v);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << usage();
        return kExitUsage;
    }
    const std::string command = argv[1];
    bool known = false;
    for (const char* c : kCommands) known = known || command == c;
    if (command == "--help" || command == "-h") {
        std::cout << usage();
        return 0;
    }
    if (!known) {
        std::cerr << usage();
        return fail("UsageError", "unknown command '" + command + "'", kExitUsage);
    }

    CLI::App app{"gcat " + command};
    app.name("gcat " + command);
    ConfigOptions opts;
    opts.attach(app);
    std::string toy_dir;
    bool demo = false;
    std::size_t u = 0, v = 0;
    if (command == "ingest") app.add_option("--generate-toy", toy_dir, "write the toy dataset into this directory");
    if (command == "proximity") {
        app.add_flag("--demo", demo, "print the nine-vertex worked example");
        app.add_option("--u", u, "first vertex label (1-9)");
        app.add_option("--v", v, "second vertex label (1-9)");
    }
    try {
        app.parse(argc - 1, argv + 1);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        return fail("UsageError", e.what(), kExitUsage);
    }

    try {
        const RunConfig cfg = opts.resolve();
        if (command == "gradcheck") return cmd_gradcheck(cfg);
        if (command == "proximity") return cmd_proximity(demo || (u == 0 && v == 0), u, v);

        if (command == "ingest") {
            if (!toy_dir.empty()) {
                auto splits = generate_toy_graph(cfg.seed);
                write_toy_dataset(toy_dir, splits);
                std::printf("wrote toy dataset to %s (%zu train, %zu valid, %zu test)\n", toy_dir.c_str(),
                            splits.train.size(), splits.valid.size(), splits.test.size());
                return 0;
            }
            auto bundle = load_dataset(cfg);
            print_stats(bundle);
            return 0;
        }
        if (command == "stats") {
            print_stats(load_dataset(cfg));
            return 0;
        }
        if (command == "report") {
            auto rows = parse_metrics_csv(read_text(cfg.out_dir / artifacts::metrics_csv));
            std::vector<std::pair<std::string, Metrics>> shown;
            for (auto& row : rows) {
                if (cfg.eval_mode == EvalMode::both || row.first == (cfg.eval_mode == EvalMode::raw ? "raw" : "filtered")) {
                    shown.push_back(row);
                }
            }
            std::cout << report(shown, cfg.format);
            return 0;
        }

        const auto bundle = load_dataset(cfg);
        if (command == "train-transe") {
            run_transe_stage(cfg, bundle);
            print_losses("train-transe", cfg.out_dir / artifacts::transe_loss);
        } else if (command == "train-encoder") {
            auto input = table_from_checkpoint(load_checkpoint(cfg.out_dir / artifacts::transe_checkpoint));
            run_encoder_stage(cfg, bundle, input);
            print_losses("train-encoder", cfg.out_dir / artifacts::encoder_loss);
        } else if (command == "train-decoder") {
            auto input = encoder_output_from_checkpoint(load_checkpoint(cfg.out_dir / artifacts::encoder_checkpoint));
            run_decoder_stage(cfg, bundle, input);
            print_losses("train-decoder", cfg.out_dir / artifacts::decoder_loss);
        } else if (command == "evaluate") {
            auto model = decoder_from_checkpoint(load_checkpoint(cfg.out_dir / artifacts::decoder_checkpoint));
            print_report(cfg, run_evaluation(cfg, bundle, model));
        } else if (command == "pipeline") {
            auto result = run_pipeline(cfg);
            print_report(cfg, result.evaluation);
            return 0;
        }
        write_manifest(cfg, command);
        return 0;
    } catch (const InvalidConfigError& e) {
        return fail(e.kind(), e.what(), kExitConfig);
    } catch (const DivergenceError& e) {
        return fail(e.kind(), e.what(), kExitDivergence);
    } catch (const Error& e) {
        return fail(e.kind(), e.what(), kExitFailure);
    } catch (const std::exception& e) {
        return fail("InternalError", e.what(), kExitFailure);
    }
}
