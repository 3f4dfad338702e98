#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gcat/graph.hpp"

namespace gcat {

struct ToySplits {
    std::vector<RawTriple> train;
    std::vector<RawTriple> valid;
    std::vector<RawTriple> test;
};

/// Compositional graph on 32 entities e00..e31 laid out on a line. Relation
/// r_k links every i to i + 2k + 1 and i + 2k + 2 where those exist, so
/// longer hops are compositions of shorter ones (220 triples). `holdout`
/// of the triples move to test, chosen at random among those whose removal
/// keeps both endpoints in train. Valid stays empty.
ToySplits generate_toy_graph(std::uint64_t seed, double holdout = 0.2);

/// Writes train.txt, valid.txt and test.txt under `dir`.
void write_toy_dataset(const std::filesystem::path& dir, const ToySplits& splits);

}  // namespace gcat
