#pragma once

// The three procedures: a local test for a mode at a candidate point, the
// global monotonicity map over a grid, and grid-based mode detection.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modescope/geometry.hpp"
#include "modescope/nullsim.hpp"
#include "modescope/statistics.hpp"

namespace modescope {

enum class Verdict { increase_rejected, decrease_rejected, none, insufficient_data };
enum class Calibration { raw, calibrated };

std::string to_string(Verdict v);
Verdict parse_verdict(const std::string& name);
std::string to_string(Calibration c);

/// Shape and orientation of the wedges placed at every vertex.
struct WedgeGeometry {
    double length = 0.0;
    double angle = 0.0;
    std::vector<Point> directions;

    std::size_t dim() const { return directions.empty() ? 0 : directions.front().size(); }
    Wedge wedge(const Point& vertex, std::size_t direction) const {
        return Wedge(vertex, directions[direction], angle, length);
    }
};

/// Length and angle from the scale constants, directions from direction_set.
WedgeGeometry make_geometry(const ScaleParams& params, std::uint64_t direction_seed = 0);
/// Explicit length and angle; `direction_count` = 0 picks the packing default.
WedgeGeometry make_geometry(std::size_t d, double length, double angle, std::size_t direction_count = 0,
                            double epsilon = 0.01, std::uint64_t direction_seed = 0);

struct WedgeDecision {
    std::size_t vertex = 0;     // grid vertex index (0 for the local test)
    std::size_t direction = 0;  // index into WedgeGeometry::directions
    std::size_t N = 0;          // observations in the wedge
    SubsectionIndex scale;      // (0, N) for the whole wedge
    double statistic = 0.0;
    double threshold = 0.0;
    Verdict verdict = Verdict::none;

    friend bool operator==(const WedgeDecision&, const WedgeDecision&) = default;
};

/// sqrt((span - 1) / 3) (kappa + Gamma(span / (n - 1))).
double critical_value(std::size_t span, std::size_t n, double kappa);

/// increase_rejected iff T < -threshold, decrease_rejected iff T > threshold.
Verdict decide(double statistic, double threshold);

struct ModeTestResult {
    Point x0;
    bool mode_detected = false;
    std::vector<WedgeDecision> per_wedge;
    std::optional<NullQuantile> kappa;  // empty when no wedge has two observations
};

struct LocalTestOptions {
    WedgeGeometry geometry;
    double alpha = 0.05;
    Calibration mode = Calibration::raw;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    /// Uniform reference box for calibration; defaults to the data's
    /// bounding box.
    std::optional<Box> reference_box;
    /// A previously computed calibrated threshold; skips calibration.
    std::optional<NullQuantile> calibrated_threshold;
    unsigned workers = 1;
};

/// Smallest kappa at which the local test would not declare a mode at x0:
/// the minimum over wedges of the one-sided normalised statistic, or
/// -infinity when some wedge holds fewer than two observations.
double mode_critical_kappa(const Sample& sample, const Point& x0, const WedgeGeometry& geometry);

/// Calibrated one-sided threshold for the local test at x0.
NullQuantile calibrate_local_test(const Point& x0, std::size_t n, const LocalTestOptions& options);

ModeTestResult local_mode_test(const Sample& sample, const Point& x0, const LocalTestOptions& options);

struct MapOptions {
    WedgeGeometry geometry;
    double alpha = 0.05;
    bool use_subsections = false;
    std::size_t full_scales_up_to = 200;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

struct MonotonicityMap {
    Grid grid;
    WedgeGeometry geometry;
    double alpha = 0.05;
    bool use_subsections = false;
    std::optional<NullQuantile> kappa;
    std::vector<WedgeDecision> decisions;
    std::size_t skipped_degenerate = 0;
};

MonotonicityMap monotonicity_map(const Sample& sample, const Grid& grid, const MapOptions& options);

struct DetectionOptions {
    WedgeGeometry geometry;
    double alpha = 0.05;
    Calibration mode = Calibration::raw;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    /// Defaults to the grid box expanded by one wedge length.
    std::optional<Box> reference_box;
    std::optional<NullQuantile> calibrated_threshold;
    unsigned workers = 1;
};

struct DetectedMode {
    std::size_t vertex = 0;
    ModeTestResult test;
};

struct DetectionResult {
    Grid grid;
    WedgeGeometry geometry;
    double alpha = 0.05;
    Calibration mode = Calibration::raw;
    std::optional<NullQuantile> kappa;
    std::vector<DetectedMode> modes;
    double precision = 0.0;  // localisation precision, the grid mesh
};

/// Largest over grid vertices of mode_critical_kappa; the calibration target
/// for mode detection.
double detection_critical_kappa(const Sample& sample, const Grid& grid, const WedgeGeometry& geometry);

NullQuantile calibrate_detection(const Grid& grid, std::size_t n, const DetectionOptions& options);

DetectionResult detect_modes(const Sample& sample, const Grid& grid, const DetectionOptions& options);

/// Constants from the consistency conditions, for choosing C1 and C2.
///   j = 2: local mode test; D in closed form, bound 4 D^2 f(x0) / (c^2 (d + 4)).
///   j = 1: grid detection;  D in closed form, bound D^2 c1 / (c^2 (d + 4)).
/// `curvature` is c and `density_bound` is f(x0) (j = 2) or c1 (j = 1).
struct TheoryConstants {
    std::size_t d = 0;
    int j = 0;
    double D = 0.0;
    double C_bound = 0.0;  // lower bound for C1^{d+4} C2^{d-1}
};

TheoryConstants theory_constants(std::size_t d, int j, double curvature, double density_bound);

/// Lower bound on D for locally increasing densities, order j in {1, 2}.
double increasing_case_D(std::size_t d, int j);
/// Lower bound on D for locally decreasing densities, order j in {1, 2}.
double decreasing_case_D(std::size_t d, int j);

}  // namespace modescope
