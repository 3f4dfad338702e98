#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gcat/graph.hpp"
#include "gcat/scoring.hpp"

namespace gcat {

struct RankPair {
    std::size_t raw = 0;
    std::size_t filtered = 0;
};

/// Pessimistic rank of `true_entity` under ascending scores:
///   1 + #{e != true : score(e) <= score(true)}
/// with the filtered rank skipping `filter_ids`. Throws IndexError when
/// true_entity is out of range and ContractError when it is in filter_ids.
RankPair rank_entity(std::span<const double> scores, EntityId true_entity,
                     const std::unordered_set<EntityId>& filter_ids);

enum class Side { head, tail };

struct RankQuery {
    Triple triple;
    Side side = Side::tail;
    std::size_t rank_raw = 0;
    std::size_t rank_filtered = 0;
};

struct Metrics {
    double mr = 0.0;
    double mrr = 0.0;
    std::map<std::size_t, double> hits;  // K -> fraction of queries with rank <= K
    std::size_t query_count = 0;
};

/// MR, MRR (mean of reciprocal ranks) and Hits@K for each K.
Metrics metrics_from_ranks(std::span<const std::size_t> ranks, std::span<const std::size_t> k_list);

struct Evaluation {
    Metrics raw;
    Metrics filtered;
    std::vector<RankQuery> queries;  // head query then tail query, per test triple
};

/// One head and one tail query per test triple. The filter for a query is
/// every triple in `known` that completes it, other than the query's own.
/// Throws EmptyDatasetError for an empty test list.
Evaluation evaluate(const TripleScorer& scorer, std::size_t num_entities, std::span<const Triple> test,
                    const std::unordered_set<Triple, TripleHash>& known,
                    std::span<const std::size_t> k_list);

enum class ReportFormat { csv, markdown };

/// Columns H@K..., MR, MRR. H@K as percentages with two decimals, MR
/// rounded to an integer, MRR with four decimals. A non-empty label adds a
/// leading "setting" column.
std::string report(std::span<const std::pair<std::string, Metrics>> rows, ReportFormat format);
std::string report(const Metrics& metrics, ReportFormat format);

/// Full-precision long-form CSV (setting,metric,value) and its inverse.
std::string metrics_csv(std::span<const std::pair<std::string, Metrics>> rows);
std::vector<std::pair<std::string, Metrics>> parse_metrics_csv(const std::string& text);

}  // namespace gcat
