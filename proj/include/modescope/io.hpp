#pragma once

// Point ingestion, result documents (schema "modescope/1"), SVG maps and the
// command-line front end.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modescope/geometry.hpp"
#include "modescope/harness.hpp"
#include "modescope/inference.hpp"
#include "modescope/nullsim.hpp"

namespace modescope {

inline constexpr const char* kSchemaVersion = "modescope/1";

/// Comma- or whitespace-separated numeric rows, one point per row. A first
/// line starting with '#' or with a non-numeric token is a header. Blank
/// lines and further '#' lines are ignored.
Sample parse_points(std::istream& in);
Sample parse_points(const std::string& path);

/// Non-finite numbers are stored as the strings "nan", "inf", "-inf".
nlohmann::json number_to_json(double x);
double number_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NullQuantile& q);
NullQuantile quantile_from_json(const nlohmann::json& j);

nlohmann::json decision_to_json(const WedgeDecision& d, const Point& vertex, const Point& direction);
WedgeDecision decision_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModeTestResult& r, const WedgeGeometry& geometry);
nlohmann::json to_json(const MonotonicityMap& m);
nlohmann::json to_json(const DetectionResult& r);
nlohmann::json to_json(const LevelPowerResult& r, const LocalScenario& s);
nlohmann::json to_json(const DetectionStudy& r, const DetectionScenario& s);

/// Wraps a procedure body with the schema version, the procedure name, the
/// configuration echo and the seed.
nlohmann::json make_document(const std::string& procedure, const nlohmann::json& config,
                             std::optional<std::uint64_t> seed, nlohmann::json body);

std::string dump_document(const nlohmann::json& doc);
void write_results(const nlohmann::json& doc, const std::string& path);
nlohmann::json read_results(const std::string& path);
/// All decisions listed in a document, in document order.
std::vector<WedgeDecision> decisions_from_document(const nlohmann::json& doc);

/// SVG 1.1 drawing of the whole-wedge verdicts of a planar map: hatched
/// wedges rejected "increasing", dotted wedges rejected "decreasing".
std::string render_map_svg(const MonotonicityMap& map);
void render_map(const MonotonicityMap& map, const std::string& path);

struct RunConfig {
    std::string procedure;  // local-test | map | detect-modes | calibrate | simulate | univariate
    std::string input;
    std::optional<std::size_t> dim;

    double C1 = 2.0;
    double C2 = 9.65;
    double epsilon = 0.01;
    std::optional<double> length;
    std::optional<double> angle;
    std::size_t directions = 0;
    std::uint64_t direction_seed = 0;

    std::optional<Point> x0;
    std::optional<Box> box;  // grid box
    std::optional<double> mesh;
    std::optional<Box> reference_box;

    double alpha = 0.05;
    bool calibrated = false;
    std::size_t reps = 1000;
    std::optional<std::uint64_t> seed;
    bool subsections = false;
    std::size_t full_scales_up_to = 200;
    std::string kappa_file;

    std::string target;  // calibrate: local-test | detect-modes
    std::size_t n = 0;   // calibrate without input, detection scenarios
    std::string scenario;
    std::size_t runs = 1000;
    bool slow = false;

    std::string output;  // empty: standard output
    std::string svg;
    unsigned workers = 1;  // not echoed; results do not depend on it
};

nlohmann::json config_to_json(const RunConfig& config);

/// Runs one procedure and returns its result document.
nlohmann::json run_procedure(const RunConfig& config);

/// Exit codes: 0 success, 1 usage error, 2 data error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace modescope
