#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gcat/gradcheck.hpp"

namespace gcat {

/// A randomized loss instance ready for ad::grad_check.
struct GradInstance {
    ad::Expression expr;
    std::vector<Matrix> inputs;
};

/// Small random instances (at most 6 entities) of each training loss. Every
/// instance draws its own graph, triples, corruptions and parameters.
GradInstance transe_grad_instance(std::uint64_t seed);
GradInstance encoder_grad_instance(std::uint64_t seed);
GradInstance convkb_grad_instance(std::uint64_t seed);

struct GradSuiteResult {
    double transe = 0.0;
    double encoder = 0.0;
    double convkb = 0.0;
    std::size_t kink_retries = 0;

    double worst() const;
};

/// Runs grad_check on one instance of each loss. An instance that lands
/// within `kink_margin` of a non-differentiable point is redrawn from the
/// next sub-seed, up to `max_retries` times per loss.
GradSuiteResult run_gradient_suite(std::uint64_t seed, double epsilon = 1e-5, double kink_margin = 4e-5,
                                   std::size_t max_retries = 400);

}  // namespace gcat
