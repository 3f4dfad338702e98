#include "gcat/sampling.hpp"

#include <numeric>

#include "gcat/errors.hpp"

namespace gcat {

namespace {

constexpr int kFilterAttempts = 32;

EntityId other_entity(EntityId original, std::size_t num_entities, Rng& rng) {
    auto k = static_cast<EntityId>(rng.uniform_index(num_entities - 1));
    return k >= original ? k + 1 : k;
}

}  // namespace

Triple corrupt(const Triple& t, std::size_t num_entities, Rng& rng) {
    if (num_entities < 2) throw InvalidConfigError("corrupt: need at least two entities");
    Triple out = t;
    if (rng.coin()) {
        out.head = other_entity(t.head, num_entities, rng);
    } else {
        out.tail = other_entity(t.tail, num_entities, rng);
    }
    return out;
}

std::vector<TrainPair> make_batch(std::span<const Triple> triples, std::size_t batch_size,
                                  std::size_t num_entities, Rng& rng,
                                  const BatchOptions& options) {
    if (triples.empty()) throw EmptyDatasetError("make_batch: no triples to sample");
    if (batch_size == 0) throw InvalidConfigError("make_batch: batch size must be >= 1");
    if (options.neg_ratio == 0) throw InvalidConfigError("make_batch: neg_ratio must be >= 1");

    std::vector<std::size_t> picks;
    picks.reserve(batch_size);
    if (batch_size <= triples.size()) {
        // Partial Fisher-Yates: the first b slots are a uniform b-subset.
        std::vector<std::size_t> order(triples.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = 0; i < batch_size; ++i) {
            auto j = i + static_cast<std::size_t>(rng.uniform_index(order.size() - i));
            std::swap(order[i], order[j]);
            picks.push_back(order[i]);
        }
    } else {
        for (std::size_t i = 0; i < batch_size; ++i) {
            picks.push_back(static_cast<std::size_t>(rng.uniform_index(triples.size())));
        }
    }

    std::vector<TrainPair> pairs;
    pairs.reserve(batch_size * options.neg_ratio);
    for (auto idx : picks) {
        const Triple& valid = triples[idx];
        for (std::size_t n = 0; n < options.neg_ratio; ++n) {
            Triple bad = corrupt(valid, num_entities, rng);
            if (options.filter != nullptr) {
                for (int attempt = 1; attempt < kFilterAttempts && options.filter->count(bad); ++attempt) {
                    bad = corrupt(valid, num_entities, rng);
                }
            }
            pairs.push_back({valid, bad});
        }
    }
    return pairs;
}

std::size_t batches_per_epoch(std::size_t num_triples, std::size_t batch_size) {
    if (batch_size == 0) throw InvalidConfigError("batch size must be >= 1");
    return (num_triples + batch_size - 1) / batch_size;
}

}  // namespace gcat
