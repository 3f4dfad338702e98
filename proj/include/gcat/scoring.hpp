#pragma once

#include <cmath>
#include <functional>

#include "gcat/graph.hpp"

namespace gcat {

/// Every scorer in the toolkit ranks candidates by ascending score: TransE
/// and encoder distances, and ConvKB scores (valid triples carry label 1 and
/// are driven negative by the soft-margin loss).
inline constexpr bool kLowerScoreIsBetter = true;

/// True when candidate score `s` ranks at or ahead of the reference score.
/// NaN candidates count as ahead so they can never improve a rank.
inline bool ranks_at_or_ahead(double s, double reference) {
    if (std::isnan(s) || std::isnan(reference)) return true;
    return kLowerScoreIsBetter ? s <= reference : s >= reference;
}

using TripleScorer = std::function<double(const Triple&)>;

}  // namespace gcat
