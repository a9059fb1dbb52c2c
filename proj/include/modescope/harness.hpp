#pragma once

// Simulation studies: sampling from test densities, level/power of the local
// test, mode-detection frequencies and the conditional-uniformity oracle.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "modescope/geometry.hpp"
#include "modescope/inference.hpp"
#include "modescope/nullsim.hpp"
#include "modescope/rng.hpp"

namespace modescope {

struct UniformBox {
    Box box;
};

struct Normal {
    Point mean;
    std::vector<double> covariance;  // d x d, row-major
};

struct Mixture {
    std::vector<double> weights;
    std::vector<Normal> components;
};

using DensitySpec = std::variant<UniformBox, Normal, Mixture>;

std::size_t density_dim(const DensitySpec& density);
/// Throws InvalidInput for non-positive or non-normalised weights and for
/// covariances that are not symmetric positive definite.
void validate_density(const DensitySpec& density);
std::string describe(const DensitySpec& density);

Sample draw_sample(const DensitySpec& density, std::size_t n, Rng& rng);

DensitySpec standard_normal(std::size_t d);
/// Eigenvalues (0.5, 1) and (0.5, 1.5), realised as diagonal covariances.
DensitySpec sigma1_normal();
DensitySpec sigma2_normal();
/// Equal-weight mixture of N((-0.05, 2.1), 0.5 I), N((-1.9, -0.07), 0.2 I)
/// and N((2, -0.1), 0.25 I).
DensitySpec trimodal_mixture();

struct Frequency {
    std::size_t runs = 0;
    std::size_t hits = 0;
    double rate = 0.0;       // hits / runs
    double std_error = 0.0;  // binomial, sqrt(rate (1 - rate) / runs)
};

Frequency make_frequency(std::size_t hits, std::size_t runs);

struct LocalScenario {
    std::string name;
    DensitySpec density;
    std::size_t n = 0;
    Point x0;
    LocalTestOptions test;  // reference_box is required for calibrated runs
    std::size_t runs = 0;
    std::uint64_t seed = 0;
};

struct LevelPowerResult {
    std::string name;
    Frequency detected;
    std::optional<NullQuantile> calibration;
};

/// Run r draws its sample from make_stream(seed, r). Calibrated scenarios
/// calibrate once; raw scenarios simulate kappa per run from the run's
/// wedge counts with seed derive_seed(test.seed, r).
LevelPowerResult run_level_power(const LocalScenario& scenario, unsigned workers = 1);

struct DetectionScenario {
    std::string name;
    DensitySpec density;
    std::size_t n = 0;
    Grid grid;
    DetectionOptions detection;
    std::size_t runs = 0;
    std::uint64_t seed = 0;
};

struct VertexFrequency {
    std::size_t vertex = 0;
    Point point;
    Frequency detected;
};

struct DetectionStudy {
    std::string name;
    Frequency any_mode;
    std::vector<VertexFrequency> per_vertex;  // every grid vertex; empty when runs = 0
    std::optional<NullQuantile> calibration;
};

DetectionStudy run_mode_detection_study(const DetectionScenario& scenario, unsigned workers = 1);

/// Isotropic normal point sources over a uniform background.
struct SourceField {
    std::vector<Point> sources;
    double sigma = 0.0;
    std::size_t per_source = 0;
    Box background;
    std::size_t background_count = 0;
};

Sample draw_source_field(const SourceField& field, Rng& rng);
/// Two sources at (35.212, 35.829) and (35.272, 35.937), sigma 0.002, on a
/// uniform background over [35, 35.5] x [35.7, 36.1]; 150 points per
/// source and 2000 background points.
SourceField two_source_field();

enum class OracleDensity { uniform, linear_increasing };

struct OracleSummary {
    std::size_t reps = 0;
    std::size_t rejections = 0;     // KS tests rejecting at 5%
    double rejection_rate = 0.0;
    double mean_distance = 0.0;     // mean KS distance
    double aggregate_p_value = 0.0; // KS test of the per-rep p-values against U(0, 1)
    double acceptance_ratio = 0.0;  // accepted / proposed points in the rejection sampler
};

/// Kolmogorov-Smirnov distance between the empirical law of `values` and U(0, 1).
double ks_distance_uniform(std::vector<double> values);
/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
double kolmogorov_p_value(double distance, std::size_t m);

/// Samples n_points on the wedge (uniformly, or with density proportional to
/// the projected distance) and tests whether (P_e X_(j) / P_e X_(N))^d, j < N,
/// look uniform.
OracleSummary uniformity_oracle(const Wedge& wedge, std::size_t n_points, std::size_t reps, std::uint64_t seed,
                                OracleDensity density = OracleDensity::uniform, unsigned workers = 1);

/// Named study presets: table2, table4, table5, wedge-length,
/// direction-count (local test) and trimodal, uniform-modes (detection).
/// Rows with n = 5000 are included only when `slow` is set.
std::vector<LocalScenario> local_presets(const std::string& name, std::size_t runs, std::uint64_t seed, bool slow,
                                         std::size_t reps = 1000);
std::vector<DetectionScenario> detection_presets(const std::string& name, std::size_t runs, std::uint64_t seed,
                                                 std::size_t n = 2500, std::size_t reps = 1000);
bool is_local_preset(const std::string& name);
bool is_detection_preset(const std::string& name);

}  // namespace modescope
