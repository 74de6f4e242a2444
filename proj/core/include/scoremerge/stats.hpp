#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scoremerge/linalg.hpp"

namespace scoremerge {

double mean(std::span<const double> x);
double sample_sd(std::span<const double> x);
double median(std::vector<double> x);

double normal_cdf(double x);

/// Inverse standard-normal CDF (Wichura's PPND16 rational approximation,
/// |error| < 1e-15 on (0,1)).
double normal_inv_cdf(double p);

struct EnergyDistanceResult {
    double distance = 0.0;   // V-statistic: 2 E|X-Y| - E|X-X'| - E|Y-Y'|
    double p_value = 1.0;    // add-one permutation p, P(perm >= observed)
    std::size_t permutations = 0;
};

/// Two-sample energy distance with a label-permutation test.
///
/// The statistic itself is computed exactly over all pairs (streaming, no
/// matrix). The permutation null caps the pooled set at max_pooled points
/// (deterministic thinning) so the cached pairwise-distance matrix stays
/// small; only the sum over within-group pairs changes per permutation.
EnergyDistanceResult energy_distance(const Matrix& a, const Matrix& b,
                                     std::size_t permutations = 200, std::uint64_t seed = 0,
                                     std::size_t max_pooled = 8192);

/// Spearman rank correlation with midrank tie handling.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// One-sided permutation p-value for a negative monotone trend:
/// P(rho_perm <= rho_observed) under random pairings.
double spearman_negative_trend_p(std::span<const double> x, std::span<const double> y,
                                 std::size_t permutations = 10000, std::uint64_t seed = 0);

/// Exact one-sided sign-flip test on paired differences, H1: mean > 0.
/// Enumerates all 2^k sign assignments; k is capped at 20.
double sign_flip_p_value(std::span<const double> diffs);

}  // namespace scoremerge
