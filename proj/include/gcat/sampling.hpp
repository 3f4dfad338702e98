#pragma once

#include <cstddef>
#include <span>
#include <unordered_set>
#include <vector>

#include "gcat/graph.hpp"
#include "gcat/rng.hpp"

namespace gcat {

struct TrainPair {
    Triple valid;
    Triple invalid;
};

/// Replaces the head (fair coin) or the tail by a uniform entity other than
/// the original. Throws InvalidConfigError when num_entities < 2.
Triple corrupt(const Triple& t, std::size_t num_entities, Rng& rng);

struct BatchOptions {
    /// Corruptions drawn per sampled valid triple.
    std::size_t neg_ratio = 1;
    /// When set, corruptions that land on a known triple are redrawn (up to a
    /// bounded number of attempts, after which the last draw is kept).
    const std::unordered_set<Triple, TripleHash>* filter = nullptr;
};

/// Samples b triples from S (without replacement when b <= |S|, with
/// replacement otherwise) and pairs each with neg_ratio corruptions.
/// Throws EmptyDatasetError for empty S, InvalidConfigError for b == 0.
std::vector<TrainPair> make_batch(std::span<const Triple> triples, std::size_t batch_size,
                                  std::size_t num_entities, Rng& rng,
                                  const BatchOptions& options = {});

/// Number of batches in one pass over n triples: ceil(n / b).
std::size_t batches_per_epoch(std::size_t num_triples, std::size_t batch_size);

}  // namespace gcat
