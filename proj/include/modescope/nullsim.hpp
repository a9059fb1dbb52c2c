#pragma once

// Monte-Carlo null quantiles.
//
// Conditional on the wedge counts N^1..N^M, the wedge statistics of a density
// that is constant on each wedge behave like sums of beta over N^i - 1
// independent uniforms. The quantiles of the maxima of the normalised sums
// are simulated here, either directly (simulate_null) or by running a whole
// procedure on uniform data in a reference box (calibrate).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modescope/geometry.hpp"
#include "modescope/rng.hpp"
#include "modescope/statistics.hpp"

namespace modescope {

enum class NullFlavor {
    two_sided_wedge,         // max_i sqrt(3/(N-1)) |S_i| - Gamma(N/(n-1))
    one_sided_wedge,         // max_i sqrt(3/(N-1)) (-S_i) - Gamma(N/(n-1))
    multiscale_subsections,  // max over wedges and subsections, two-sided
};

enum class QuantileSource { simulated, calibrated };

std::string to_string(NullFlavor flavor);
NullFlavor parse_flavor(const std::string& name);
std::string to_string(QuantileSource source);

struct NullConfig {
    std::vector<std::size_t> counts;  // observations per wedge; counts < 2 are ignored
    std::size_t n = 0;                // total sample size
    double alpha = 0.05;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    NullFlavor flavor = NullFlavor::two_sided_wedge;
    std::size_t full_scales_up_to = 200;  // see subsection_pairs
};

struct CalibrationConfig {
    Box reference_box;
    std::size_t n = 0;
    double alpha = 0.05;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
};

/// A critical constant together with everything needed to reproduce it.
struct NullQuantile {
    double kappa = 0.0;
    QuantileSource source = QuantileSource::simulated;
    NullFlavor flavor = NullFlavor::two_sided_wedge;
    std::size_t n = 0;
    double alpha = 0.05;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::size_t full_scales_up_to = 200;
    std::vector<std::size_t> counts;   // simulated quantiles
    std::optional<Box> reference_box;  // calibrated quantiles
    std::vector<double> replicate_values;  // only when retained
};

/// The ceil((1 - alpha) * reps)-th smallest value (at least the first).
/// alpha must lie in (0, 1].
double empirical_quantile(std::span<const double> values, double alpha);

/// Sum of beta(u) over sorted interior uniforms u_1 <= ... <= u_{N-1}.
double wedge_null_statistic(std::span<const double> sorted_interior);

/// Subsection statistic on u_0 = 0 <= u_1 <= ... <= u_{N-1} <= u_N = 1
/// (`with_ends` holds all N + 1 values). Uses a prefix-sum evaluation for
/// wide subsections unless `prefix` is null.
double subsection_null_statistic(std::span<const double> with_ends, SubsectionIndex idx,
                                 std::span<const double> prefix = {});

/// One maximum per replicate; replicate r draws from make_stream(seed, r).
std::vector<double> simulate_replicate_maxima(const NullConfig& config, unsigned workers = 1);

NullQuantile simulate_null(const NullConfig& config, unsigned workers = 1, bool retain_replicates = false);

Sample sample_uniform_box(const Box& box, std::size_t n, Rng& rng);

/// Maps a sample to the smallest kappa at which the procedure makes no
/// discovery on it (-infinity when it can never discover).
using CriticalValueFn = std::function<double(const Sample&)>;

/// Draws `reps` uniform samples on the reference box, records the critical
/// kappa of each and returns the (1 - alpha) empirical quantile, so that the
/// procedure discovers something on at most alpha of the uniform replicates.
NullQuantile calibrate(const CriticalValueFn& critical, const CalibrationConfig& config, unsigned workers = 1,
                       bool retain_replicates = false);

}  // namespace modescope
