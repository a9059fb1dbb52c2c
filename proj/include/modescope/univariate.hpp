#pragma once

// Univariate multiscale spacing test on all intervals between order
// statistics. Indices are 1-based, as in X_(1) <= ... <= X_(n).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace modescope {

/// sum_{i=j+1}^{k-1} beta((X_(i) - X_(j)) / (X_(k) - X_(j))).
double spacing_statistic(std::span<const double> sorted, std::size_t j, std::size_t k);

/// max over 1 <= j < k <= n, k - j > 1 of
/// sqrt(3 / (k - j - 1)) |T_jk| - Gamma((k - j) / (n - 1)). Sorts a copy.
double multiscale_statistic(std::span<const double> sample);

std::vector<double> univariate_replicate_maxima(std::size_t n, std::size_t reps, std::uint64_t seed,
                                                unsigned workers = 1);

/// (1 - alpha) quantile of the multiscale statistic of n uniforms.
double univariate_quantile(std::size_t n, double alpha, std::size_t reps, std::uint64_t seed, unsigned workers = 1);

enum class IntervalVerdict { not_increasing, not_decreasing, none };
std::string to_string(IntervalVerdict v);

struct IntervalDecision {
    std::size_t j = 0;
    std::size_t k = 0;
    double T = 0.0;
    double c = 0.0;
    IntervalVerdict verdict = IntervalVerdict::none;
};

/// Decisions on every interval (X_(j), X_(k)) with threshold
/// c_jk = sqrt((k - j - 1) / 3) (Gamma((k - j) / (n - 1)) + kappa).
/// Intervals with tied endpoints are skipped.
std::vector<IntervalDecision> univariate_test(std::span<const double> sample, double kappa);

/// Paired replicate values on one sorted uniform sample U of size n: the
/// multiscale maximum T_n(U), and the two-sided wedge-null maximum computed
/// from contiguous blocks, block i spanning (U_(j_i), U_(j_i + N_i)) with
/// j_1 = 1 and j_{i+1} = j_i + N_i. Requires sum N_i <= n - 1.
struct PairedMaxima {
    double univariate = 0.0;
    double blocks = 0.0;
};

std::vector<PairedMaxima> paired_block_maxima(const std::vector<std::size_t>& counts, std::size_t n,
                                              std::size_t reps, std::uint64_t seed, unsigned workers = 1);

}  // namespace modescope
