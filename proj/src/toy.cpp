#include "gcat/toy.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include "gcat/errors.hpp"
#include "gcat/rng.hpp"

namespace gcat {

namespace {

constexpr int kEntities = 32;
constexpr int kRelations = 4;

std::string entity_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "e%02d", i);
    return buf;
}

void write_split(const std::filesystem::path& path, const std::vector<RawTriple>& triples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& t : triples) out << t[0] << '\t' << t[1] << '\t' << t[2] << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

ToySplits generate_toy_graph(std::uint64_t seed, double holdout) {
    if (!(holdout >= 0.0 && holdout < 1.0)) throw InvalidConfigError("toy graph: holdout must lie in [0, 1)");
    std::vector<RawTriple> all;
    for (int k = 0; k < kRelations; ++k) {
        const std::string rel = "r" + std::to_string(k);
        for (int i = 0; i < kEntities; ++i)
            for (int step : {2 * k + 1, 2 * k + 2})
                if (i + step < kEntities) all.push_back({entity_name(i), rel, entity_name(i + step)});
    }

    Rng rng(seed);
    for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng.uniform_index(i)]);

    std::map<std::string, int> degree;
    for (const auto& t : all) {
        ++degree[t[0]];
        ++degree[t[2]];
    }
    const auto target = static_cast<std::size_t>(holdout * static_cast<double>(all.size()) + 0.5);
    ToySplits out;
    for (const auto& t : all) {
        if (out.test.size() < target && degree[t[0]] > 1 && degree[t[2]] > 1) {
            --degree[t[0]];
            --degree[t[2]];
            out.test.push_back(t);
        } else {
            out.train.push_back(t);
        }
    }
    return out;
}

void write_toy_dataset(const std::filesystem::path& dir, const ToySplits& splits) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_split(dir / "train.txt", splits.train);
    write_split(dir / "valid.txt", splits.valid);
    write_split(dir / "test.txt", splits.test);
}

}  // namespace gcat
