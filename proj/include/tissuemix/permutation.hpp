#pragma once

#include <cstdint>
#include <span>

namespace tissuemix::metrics {

struct PermutationOptions {
    std::uint64_t max_exact = 1'000'000;  // enumerate when C(n_a + n_b, n_a) is at most this
    std::uint64_t mc_iters = 100'000;
    std::uint64_t seed = 0;
};

struct PermutationResult {
    double p_value = 1.0;
    double statistic = 0.0;          // |mean(a) - mean(b)|
    bool exact = false;
    std::uint64_t permutations = 0;  // denominator of p_value
};

/// Two-tailed test on |mean(a) - mean(b)|. Exhaustive over all reassignments
/// when feasible; otherwise `mc_iters` random reassignments plus the observed
/// one, so p = (1 + hits) / (1 + mc_iters). A reassignment counts as extreme
/// when its statistic reaches the observed one up to a 1e-12 relative slack.
PermutationResult permutation_test(std::span<const double> a, std::span<const double> b,
                                   const PermutationOptions& options = {});

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

}  // namespace tissuemix::metrics
