#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "gcat/graph.hpp"

namespace gcat {

/// Train/valid/test splits coded against one union vocabulary. `graph`
/// holds the union vocabularies and the training triples only, so its
/// adjacency never leaks held-out facts into neighborhood aggregation.
struct DatasetBundle {
    KnowledgeGraph graph;
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;

    std::size_t num_entities() const noexcept { return graph.num_entities(); }
    std::size_t num_relations() const noexcept { return graph.num_relations(); }

    /// train ∪ valid ∪ test, used as the filter set for ranking.
    std::unordered_set<Triple, TripleHash> known_triples() const;
};

struct DatasetStats {
    std::size_t entities = 0;
    std::size_t relations = 0;
    std::size_t train = 0;
    std::size_t valid = 0;
    std::size_t test = 0;
    /// Triples that appear in more than one split (0 for clean benchmarks).
    std::size_t cross_split_duplicates = 0;

    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

/// Reads `head<TAB>relation<TAB>tail` lines. Throws IoError if the file
/// cannot be opened and ParseError (with the 1-based line number) for a
/// line without exactly two tabs or with an empty field. A trailing '\r'
/// line terminator is accepted.
std::vector<RawTriple> read_triple_file(const std::filesystem::path& path);

/// Parses triples from in-memory text with the same rules; `source` names
/// the origin in ParseError messages.
std::vector<RawTriple> parse_triples(const std::string& text, const std::string& source);

/// Union vocabulary in first-appearance order over train, valid, test.
/// Duplicate lines within a split are dropped.
DatasetBundle make_bundle(const std::vector<RawTriple>& train, const std::vector<RawTriple>& valid,
                          const std::vector<RawTriple>& test);

DatasetBundle load_split(const std::filesystem::path& train_path,
                         const std::filesystem::path& valid_path,
                         const std::filesystem::path& test_path);

DatasetStats dataset_stats(const DatasetBundle& bundle);

/// Writes one split back out as TSV using the bundle's vocabularies.
void write_triple_file(const std::filesystem::path& path, const DatasetBundle& bundle,
                       const std::vector<Triple>& triples);

}  // namespace gcat
