#include "modescope/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>

#include "modescope/errors.hpp"
#include "modescope/parallel.hpp"

namespace modescope {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

void check_geometry(const WedgeGeometry& g, std::size_t d) {
    if (g.directions.empty()) throw InvalidInput("wedge geometry has no directions");
    if (g.dim() != d) throw InvalidInput("wedge geometry dimension does not match the sample");
}

// Counts and whole-wedge statistics at one vertex, in direction order.
struct WedgeSummary {
    std::size_t N = 0;
    double statistic = 0.0;
};

std::vector<WedgeSummary> summarize_vertex(const SampleIndex& index, const Point& vertex,
                                           const WedgeGeometry& geometry) {
    const std::size_t d = index.sample().dim();
    std::vector<WedgeSummary> out(geometry.directions.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const WedgeScan scan = index.scan(geometry.wedge(vertex, i));
        out[i].N = scan.count();
        if (scan.count() >= 2) out[i].statistic = statistic_wedge(scan, d).value;
    }
    return out;
}

double vertex_critical(const std::vector<WedgeSummary>& wedges, std::size_t n) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& w : wedges) {
        if (w.N < 2) return kMinusInf;
        worst = std::min(worst, normalize_one_sided({w.statistic, w.N - 1}, n, w.N));
    }
    return worst;
}

double index_cell(const WedgeGeometry& g) {
    const double t = std::tan(g.angle);
    return g.length * std::sqrt(1.0 + static_cast<double>(g.dim() - 1) * t * t);
}

WedgeDecision decide_wedge(std::size_t vertex, std::size_t direction, const WedgeSummary& w, std::size_t n,
                           const std::optional<NullQuantile>& kappa) {
    WedgeDecision dec;
    dec.vertex = vertex;
    dec.direction = direction;
    dec.N = w.N;
    dec.scale = {0, w.N};
    if (w.N < 2 || !kappa) {
        dec.threshold = kNaN;
        dec.verdict = Verdict::insufficient_data;
        return dec;
    }
    dec.statistic = w.statistic;
    dec.threshold = critical_value(w.N, n, kappa->kappa);
    dec.verdict = decide(dec.statistic, dec.threshold);
    return dec;
}

ModeTestResult assemble_mode_result(const Point& x0, std::size_t vertex, const std::vector<WedgeSummary>& wedges,
                                    std::size_t n, const std::optional<NullQuantile>& kappa) {
    ModeTestResult result;
    result.x0 = x0;
    result.per_wedge.reserve(wedges.size());
    bool all_reject = kappa.has_value() && n >= 3;
    for (std::size_t i = 0; i < wedges.size(); ++i) {
        result.per_wedge.push_back(n >= 3 ? decide_wedge(vertex, i, wedges[i], n, kappa)
                                          : decide_wedge(vertex, i, WedgeSummary{}, n, std::nullopt));
        all_reject = all_reject && result.per_wedge.back().verdict == Verdict::increase_rejected;
    }
    result.mode_detected = all_reject;
    return result;
}

std::vector<std::size_t> counts_of(const std::vector<WedgeSummary>& wedges) {
    std::vector<std::size_t> counts;
    counts.reserve(wedges.size());
    for (const auto& w : wedges) counts.push_back(w.N);
    return counts;
}

bool any_usable(const std::vector<std::size_t>& counts) {
    return std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c >= 2; });
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::increase_rejected: return "increase_rejected";
        case Verdict::decrease_rejected: return "decrease_rejected";
        case Verdict::none: return "none";
        case Verdict::insufficient_data: return "insufficient_data";
    }
    return "unknown";
}

Verdict parse_verdict(const std::string& name) {
    if (name == "increase_rejected") return Verdict::increase_rejected;
    if (name == "decrease_rejected") return Verdict::decrease_rejected;
    if (name == "none") return Verdict::none;
    if (name == "insufficient_data") return Verdict::insufficient_data;
    throw InvalidInput("unknown verdict '" + name + "'");
}

std::string to_string(Calibration c) { return c == Calibration::raw ? "raw" : "calibrated"; }

WedgeGeometry make_geometry(const ScaleParams& params, std::uint64_t direction_seed) {
    const WedgeScales s = default_scales(params);
    return {s.length, s.angle, direction_set(params.d, s.angle, params.epsilon, direction_seed)};
}

WedgeGeometry make_geometry(std::size_t d, double length, double angle, std::size_t direction_count, double epsilon,
                            std::uint64_t direction_seed) {
    if (!(length > 0.0) || !std::isfinite(length)) throw ParameterError("wedge length must be positive");
    if (!(angle > 0.0 && angle < std::numbers::pi / 2)) throw ParameterError("wedge angle must lie in (0, pi/2)");
    WedgeGeometry g{length, angle, {}};
    if (direction_count == 0) {
        g.directions = direction_set(d, angle, epsilon, direction_seed);
    } else if (d == 2) {
        g.directions = planar_directions(direction_count);
    } else if (d == 1) {
        if (direction_count > 2) throw ParameterError("d = 1 admits at most two directions");
        g.directions = direction_count == 1 ? std::vector<Point>{{1.0}} : std::vector<Point>{{1.0}, {-1.0}};
    } else {
        auto packed = direction_set(d, angle, epsilon, direction_seed);
        if (direction_count > packed.size())
            throw ParameterError("requested more directions than the packing admits for this angle");
        packed.resize(direction_count);
        g.directions = std::move(packed);
    }
    return g;
}

double critical_value(std::size_t span, std::size_t n, double kappa) {
    if (span < 2) throw InvalidInput("critical value needs span >= 2");
    if (n < 3) throw InvalidInput("critical value needs n >= 3");
    const double penalty = gamma_penalty(static_cast<double>(span) / static_cast<double>(n - 1));
    return std::sqrt(static_cast<double>(span - 1) / 3.0) * (kappa + penalty);
}

Verdict decide(double statistic, double threshold) {
    if (statistic < -threshold) return Verdict::increase_rejected;
    if (statistic > threshold) return Verdict::decrease_rejected;
    return Verdict::none;
}

double mode_critical_kappa(const Sample& sample, const Point& x0, const WedgeGeometry& geometry) {
    check_geometry(geometry, sample.dim());
    if (sample.size() < 3) return kMinusInf;
    const std::size_t d = sample.dim();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < geometry.directions.size(); ++i) {
        const WedgeScan scan = scan_wedge(sample, geometry.wedge(x0, i));
        if (scan.count() < 2) return kMinusInf;
        worst = std::min(worst, normalize_one_sided(statistic_wedge(scan, d), sample.size(), scan.count()));
    }
    return worst;
}

NullQuantile calibrate_local_test(const Point& x0, std::size_t n, const LocalTestOptions& options) {
    if (!options.reference_box) throw InvalidInput("calibration needs a reference box");
    const WedgeGeometry& geometry = options.geometry;
    CalibrationConfig cfg{*options.reference_box, n, options.alpha, options.reps, options.seed};
    return calibrate([&](const Sample& s) { return mode_critical_kappa(s, x0, geometry); }, cfg, options.workers);
}

ModeTestResult local_mode_test(const Sample& sample, const Point& x0, const LocalTestOptions& options) {
    check_geometry(options.geometry, sample.dim());
    if (x0.size() != sample.dim()) throw InvalidInput("candidate point has the wrong dimension");
    const std::size_t n = sample.size();

    std::vector<WedgeSummary> wedges(options.geometry.directions.size());
    for (std::size_t i = 0; i < wedges.size(); ++i) {
        const WedgeScan scan = scan_wedge(sample, options.geometry.wedge(x0, i));
        wedges[i].N = scan.count();
        if (scan.count() >= 2) wedges[i].statistic = statistic_wedge(scan, sample.dim()).value;
    }

    std::optional<NullQuantile> kappa;
    if (n >= 3) {
        if (options.mode == Calibration::raw) {
            const auto counts = counts_of(wedges);
            if (any_usable(counts)) {
                NullConfig cfg{counts, n, options.alpha, options.reps, options.seed, NullFlavor::one_sided_wedge};
                kappa = simulate_null(cfg, options.workers);
            }
        } else if (options.calibrated_threshold) {
            kappa = options.calibrated_threshold;
        } else {
            LocalTestOptions opts = options;
            if (!opts.reference_box) opts.reference_box = bounding_box(sample);
            kappa = calibrate_local_test(x0, n, opts);
        }
    }
    ModeTestResult result = assemble_mode_result(x0, 0, wedges, n, kappa);
    result.kappa = std::move(kappa);
    return result;
}

MonotonicityMap monotonicity_map(const Sample& sample, const Grid& grid, const MapOptions& options) {
    const WedgeGeometry& g = options.geometry;
    check_geometry(g, sample.dim());
    if (grid.lower().size() != sample.dim()) throw InvalidInput("grid dimension does not match the sample");
    const std::size_t n = sample.size();
    const std::size_t d = sample.dim();
    const std::size_t M = g.directions.size();
    const std::size_t wedge_count = grid.size() * M;

    struct Scale {
        SubsectionIndex idx;
        double statistic;
    };
    struct WedgeStats {
        std::size_t N = 0;
        std::vector<Scale> scales;
        std::size_t degenerate = 0;
    };

    const SampleIndex index(sample, index_cell(g));
    std::vector<WedgeStats> stats(wedge_count);
    parallel_for(wedge_count, options.workers, [&](std::size_t w) {
        const WedgeScan scan = index.scan(g.wedge(grid.vertices()[w / M], w % M));
        WedgeStats& s = stats[w];
        s.N = scan.count();
        if (s.N < 2) return;
        if (!options.use_subsections) {
            s.scales.push_back({{0, s.N}, statistic_wedge(scan, d).value});
            return;
        }
        for (const auto& idx : subsection_pairs(s.N, options.full_scales_up_to)) {
            try {
                s.scales.push_back({idx, statistic_subsection(scan, idx, d).value});
            } catch (const DegenerateScale&) {
                ++s.degenerate;
            }
        }
    });

    MonotonicityMap map{grid, g, options.alpha, options.use_subsections, std::nullopt, {}, 0};
    std::vector<std::size_t> counts;
    counts.reserve(wedge_count);
    for (const auto& s : stats) counts.push_back(s.N);
    if (n >= 3 && any_usable(counts)) {
        NullConfig cfg{counts,
                       n,
                       options.alpha,
                       options.reps,
                       options.seed,
                       options.use_subsections ? NullFlavor::multiscale_subsections : NullFlavor::two_sided_wedge,
                       options.full_scales_up_to};
        map.kappa = simulate_null(cfg, options.workers);
    }

    for (std::size_t w = 0; w < wedge_count; ++w) {
        const WedgeStats& s = stats[w];
        map.skipped_degenerate += s.degenerate;
        if (s.N < 2 || !map.kappa) {
            map.decisions.push_back(
                {w / M, w % M, s.N, {0, s.N}, 0.0, kNaN, Verdict::insufficient_data});
            continue;
        }
        for (const auto& sc : s.scales) {
            const double thr = critical_value(sc.idx.span(), n, map.kappa->kappa);
            map.decisions.push_back({w / M, w % M, s.N, sc.idx, sc.statistic, thr, decide(sc.statistic, thr)});
        }
    }
    if (map.skipped_degenerate > 0)
        std::clog << "modescope: skipped " << map.skipped_degenerate
                  << " subsections with tied endpoint distances\n";
    return map;
}

double detection_critical_kappa(const Sample& sample, const Grid& grid, const WedgeGeometry& geometry) {
    check_geometry(geometry, sample.dim());
    if (sample.size() < 3) return kMinusInf;
    const SampleIndex index(sample, index_cell(geometry));
    double best = kMinusInf;
    for (const auto& v : grid.vertices()) best = std::max(best, vertex_critical(summarize_vertex(index, v, geometry), sample.size()));
    return best;
}

NullQuantile calibrate_detection(const Grid& grid, std::size_t n, const DetectionOptions& options) {
    const Box box = options.reference_box ? *options.reference_box : expand(grid.box(), options.geometry.length);
    const WedgeGeometry& geometry = options.geometry;
    CalibrationConfig cfg{box, n, options.alpha, options.reps, options.seed};
    return calibrate([&](const Sample& s) { return detection_critical_kappa(s, grid, geometry); }, cfg,
                     options.workers);
}

DetectionResult detect_modes(const Sample& sample, const Grid& grid, const DetectionOptions& options) {
    const WedgeGeometry& g = options.geometry;
    check_geometry(g, sample.dim());
    if (grid.lower().size() != sample.dim()) throw InvalidInput("grid dimension does not match the sample");
    const std::size_t n = sample.size();

    const SampleIndex index(sample, index_cell(g));
    std::vector<std::vector<WedgeSummary>> per_vertex(grid.size());
    parallel_for(grid.size(), options.workers,
                 [&](std::size_t v) { per_vertex[v] = summarize_vertex(index, grid.vertices()[v], g); });

    DetectionResult result{grid, g, options.alpha, options.mode, std::nullopt, {}, grid.mesh()};
    if (n >= 3) {
        if (options.mode == Calibration::raw) {
            std::vector<std::size_t> counts;
            for (const auto& wedges : per_vertex)
                for (const auto& w : wedges) counts.push_back(w.N);
            if (any_usable(counts)) {
                NullConfig cfg{counts, n, options.alpha, options.reps, options.seed, NullFlavor::one_sided_wedge};
                result.kappa = simulate_null(cfg, options.workers);
            }
        } else if (options.calibrated_threshold) {
            result.kappa = options.calibrated_threshold;
        } else {
            result.kappa = calibrate_detection(grid, n, options);
        }
    }
    for (std::size_t v = 0; v < grid.size(); ++v) {
        ModeTestResult test = assemble_mode_result(grid.vertices()[v], v, per_vertex[v], n, result.kappa);
        if (test.mode_detected) result.modes.push_back({v, std::move(test)});
    }
    return result;
}

double increasing_case_D(std::size_t d_, int j_) {
    if (d_ < 1 || (j_ != 1 && j_ != 2)) throw InvalidInput("need d >= 1 and j in {1, 2}");
    const double d = static_cast<double>(d_), j = static_cast<double>(j_);
    const double w = 2.0 * d + j;
    const double first = w * (-1.0 + std::sqrt(1.0 + 2.0 * j * j / (w * w)));
    const double second = 1.0 - j * j / (2.0 * w * w) * (-1.0 + std::sqrt(1.0 + 4.0 * w * w / (j * j)));
    return j * (d + j) * 2.0 * std::numbers::sqrt2 / (first * std::sqrt(second));
}

double decreasing_case_D(std::size_t d_, int j_) {
    if (d_ < 1 || (j_ != 1 && j_ != 2)) throw InvalidInput("need d >= 1 and j in {1, 2}");
    const double d = static_cast<double>(d_), j = static_cast<double>(j_);
    const double w = 2.0 * d + j;
    const double shrink = std::pow(1.0 - d / (d + j), (d + j) / d);
    const double root = 1.0 - d * d / (2.0 * w * w) * (-1.0 + std::sqrt(1.0 + 4.0 * (w / d) * (w / d)));
    return 2.0 * std::numbers::sqrt2 * w * (d + j) / (j * shrink * std::sqrt(root));
}

TheoryConstants theory_constants(std::size_t d_, int j, double curvature, double density_bound) {
    if (d_ < 1) throw InvalidInput("dimension must be at least 1");
    if (!(curvature > 0.0) || !(density_bound > 0.0)) throw InvalidInput("curvature and density bound must be positive");
    const double d = static_cast<double>(d_);
    TheoryConstants out{d_, j, 0.0, 0.0};
    if (j == 2) {
        const double a = 2.0 * d + 2.0;
        const double root = 1.0 - d * d / (2.0 * a * a) * (-1.0 + std::sqrt(1.0 + 4.0 * (a / d) * (a / d)));
        out.D = std::numbers::sqrt2 * a * (d + 2.0) / (std::pow(1.0 - d / (d + 2.0), (d + 2.0) / d) * std::sqrt(root));
        out.C_bound = 4.0 * out.D * out.D / (curvature * curvature) * density_bound / (d + 4.0);
    } else if (j == 1) {
        const double a = 2.0 * d + 1.0;
        const double root = 1.0 - d * d / (2.0 * a * a) * (-1.0 + std::sqrt(1.0 + 4.0 * (a / d) * (a / d)));
        out.D = 2.0 * std::numbers::sqrt2 * a * (d + 1.0) /
                (std::pow(1.0 - d / (d + 1.0), (d + 1.0) / d) * std::sqrt(root));
        out.C_bound = out.D * out.D / (curvature * curvature) * density_bound / (d + 4.0);
    } else {
        throw InvalidInput("j must be 1 (detection) or 2 (local test)");
    }
    return out;
}

}  // namespace modescope
