#include "modescope/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "modescope/errors.hpp"
#include "modescope/parallel.hpp"

namespace modescope {

namespace {

// Lower-triangular L with L L^T = cov, or InvalidInput.
std::vector<double> cholesky(const std::vector<double>& cov, std::size_t d) {
    if (cov.size() != d * d) throw InvalidInput("covariance must be a d x d matrix");
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(cov[i * d + j] - cov[j * d + i]) > 1e-12 * (1.0 + std::abs(cov[i * d + j])))
                throw InvalidInput("covariance must be symmetric");
    std::vector<double> L(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = cov[i * d + j];
            for (std::size_t k = 0; k < j; ++k) s -= L[i * d + k] * L[j * d + k];
            if (i == j) {
                if (!(s > 0.0)) throw InvalidInput("covariance must be positive definite");
                L[i * d + i] = std::sqrt(s);
            } else {
                L[i * d + j] = s / L[j * d + j];
            }
        }
    }
    return L;
}

void draw_normal(const Normal& g, const std::vector<double>& L, Rng& rng, double* out) {
    const std::size_t d = g.mean.size();
    std::vector<double> z(d);
    for (auto& v : z) v = rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
        double s = g.mean[i];
        for (std::size_t k = 0; k <= i; ++k) s += L[i * d + k] * z[k];
        out[i] = s;
    }
}

Normal isotropic(Point mean, double variance) {
    const std::size_t d = mean.size();
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) cov[i * d + i] = variance;
    return {std::move(mean), std::move(cov)};
}

}  // namespace

std::size_t density_dim(const DensitySpec& density) {
    if (const auto* u = std::get_if<UniformBox>(&density)) return u->box.dim();
    if (const auto* g = std::get_if<Normal>(&density)) return g->mean.size();
    const auto& m = std::get<Mixture>(density);
    return m.components.empty() ? 0 : m.components.front().mean.size();
}

void validate_density(const DensitySpec& density) {
    if (const auto* u = std::get_if<UniformBox>(&density)) {
        validate_box(u->box);
    } else if (const auto* g = std::get_if<Normal>(&density)) {
        if (g->mean.empty()) throw InvalidInput("normal density needs a mean");
        cholesky(g->covariance, g->mean.size());
    } else {
        const auto& m = std::get<Mixture>(density);
        if (m.components.empty() || m.weights.size() != m.components.size())
            throw InvalidInput("mixture needs one weight per component");
        double total = 0.0;
        for (double w : m.weights) {
            if (!(w > 0.0)) throw InvalidInput("mixture weights must be positive");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("mixture weights must sum to 1");
        for (const auto& c : m.components) {
            if (c.mean.size() != m.components.front().mean.size())
                throw InvalidInput("mixture components differ in dimension");
            cholesky(c.covariance, c.mean.size());
        }
    }
}

std::string describe(const DensitySpec& density) {
    std::ostringstream os;
    auto vec = [&os](const std::vector<double>& v) {
        os << '[';
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
        os << ']';
    };
    if (const auto* u = std::get_if<UniformBox>(&density)) {
        os << "uniform(lower=";
        vec(u->box.lower);
        os << ",upper=";
        vec(u->box.upper);
        os << ')';
    } else if (const auto* g = std::get_if<Normal>(&density)) {
        os << "normal(mean=";
        vec(g->mean);
        os << ",cov=";
        vec(g->covariance);
        os << ')';
    } else {
        const auto& m = std::get<Mixture>(density);
        os << "mixture(";
        for (std::size_t i = 0; i < m.components.size(); ++i) {
            os << (i ? ";" : "") << "w=" << m.weights[i] << ",mean=";
            vec(m.components[i].mean);
            os << ",cov=";
            vec(m.components[i].covariance);
        }
        os << ')';
    }
    return os.str();
}

Sample draw_sample(const DensitySpec& density, std::size_t n, Rng& rng) {
    validate_density(density);
    const std::size_t d = density_dim(density);
    if (const auto* u = std::get_if<UniformBox>(&density)) return sample_uniform_box(u->box, n, rng);

    std::vector<double> coords(n * d);
    if (const auto* g = std::get_if<Normal>(&density)) {
        const auto L = cholesky(g->covariance, d);
        for (std::size_t i = 0; i < n; ++i) draw_normal(*g, L, rng, coords.data() + i * d);
        return Sample(d, std::move(coords));
    }
    const auto& m = std::get<Mixture>(density);
    std::vector<std::vector<double>> factors;
    for (const auto& c : m.components) factors.push_back(cholesky(c.covariance, d));
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        std::size_t c = 0;
        double cum = m.weights[0];
        while (u >= cum && c + 1 < m.components.size()) cum += m.weights[++c];
        draw_normal(m.components[c], factors[c], rng, coords.data() + i * d);
    }
    return Sample(d, std::move(coords));
}

DensitySpec standard_normal(std::size_t d) { return isotropic(Point(d, 0.0), 1.0); }

DensitySpec sigma1_normal() { return Normal{{0.0, 0.0}, {0.5, 0.0, 0.0, 1.0}}; }

DensitySpec sigma2_normal() { return Normal{{0.0, 0.0}, {0.5, 0.0, 0.0, 1.5}}; }

DensitySpec trimodal_mixture() {
    const double w = 1.0 / 3.0;
    return Mixture{{w, w, w},
                   {isotropic({-0.05, 2.1}, 0.5), isotropic({-1.9, -0.07}, 0.2), isotropic({2.0, -0.1}, 0.25)}};
}

Frequency make_frequency(std::size_t hits, std::size_t runs) {
    Frequency f{runs, hits, 0.0, 0.0};
    if (runs > 0) {
        f.rate = static_cast<double>(hits) / static_cast<double>(runs);
        f.std_error = std::sqrt(f.rate * (1.0 - f.rate) / static_cast<double>(runs));
    }
    return f;
}

LevelPowerResult run_level_power(const LocalScenario& scenario, unsigned workers) {
    validate_density(scenario.density);
    LevelPowerResult result{scenario.name, make_frequency(0, scenario.runs), std::nullopt};
    if (scenario.runs == 0) return result;

    LocalTestOptions base = scenario.test;
    base.workers = 1;
    if (base.mode == Calibration::calibrated && !base.calibrated_threshold) {
        if (!base.reference_box) throw InvalidInput("calibrated scenarios need a reference box");
        LocalTestOptions cal = base;
        cal.workers = workers;
        base.calibrated_threshold = calibrate_local_test(scenario.x0, scenario.n, cal);
    }
    result.calibration = base.calibrated_threshold;

    std::vector<char> hit(scenario.runs, 0);
    parallel_for(scenario.runs, workers, [&](std::size_t r) {
        Rng rng = make_stream(scenario.seed, r);
        const Sample sample = draw_sample(scenario.density, scenario.n, rng);
        LocalTestOptions opts = base;
        opts.seed = derive_seed(base.seed, r);
        hit[r] = local_mode_test(sample, scenario.x0, opts).mode_detected ? 1 : 0;
    });
    result.detected = make_frequency(static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1)), scenario.runs);
    return result;
}

DetectionStudy run_mode_detection_study(const DetectionScenario& scenario, unsigned workers) {
    validate_density(scenario.density);
    DetectionStudy study{scenario.name, make_frequency(0, 0), {}, std::nullopt};
    if (scenario.runs == 0) return study;

    DetectionOptions base = scenario.detection;
    base.workers = 1;
    if (base.mode == Calibration::calibrated && !base.calibrated_threshold) {
        DetectionOptions cal = base;
        cal.workers = workers;
        base.calibrated_threshold = calibrate_detection(scenario.grid, scenario.n, cal);
    }
    study.calibration = base.calibrated_threshold;

    const std::size_t V = scenario.grid.size();
    std::vector<std::vector<char>> flags(scenario.runs);
    parallel_for(scenario.runs, workers, [&](std::size_t r) {
        Rng rng = make_stream(scenario.seed, r);
        const Sample sample = draw_sample(scenario.density, scenario.n, rng);
        DetectionOptions opts = base;
        opts.seed = derive_seed(base.seed, r);
        flags[r].assign(V, 0);
        for (const auto& m : detect_modes(sample, scenario.grid, opts).modes) flags[r][m.vertex] = 1;
    });

    std::size_t any = 0;
    std::vector<std::size_t> hits(V, 0);
    for (const auto& f : flags) {
        any += std::count(f.begin(), f.end(), 1) > 0 ? 1 : 0;
        for (std::size_t v = 0; v < V; ++v) hits[v] += static_cast<std::size_t>(f[v]);
    }
    study.any_mode = make_frequency(any, scenario.runs);
    for (std::size_t v = 0; v < V; ++v)
        study.per_vertex.push_back({v, scenario.grid.vertices()[v], make_frequency(hits[v], scenario.runs)});
    return study;
}

Sample draw_source_field(const SourceField& field, Rng& rng) {
    if (field.sources.empty()) throw InvalidInput("source field without sources");
    if (!(field.sigma > 0.0)) throw InvalidInput("source width must be positive");
    validate_box(field.background);
    const std::size_t d = field.background.dim();
    std::vector<Point> points;
    points.reserve(field.sources.size() * field.per_source + field.background_count);
    for (const auto& c : field.sources) {
        if (c.size() != d) throw InvalidInput("source dimension differs from the background");
        for (std::size_t i = 0; i < field.per_source; ++i) {
            Point p(d);
            for (std::size_t k = 0; k < d; ++k) p[k] = c[k] + field.sigma * rng.normal();
            points.push_back(std::move(p));
        }
    }
    for (std::size_t i = 0; i < field.background_count; ++i) {
        Point p(d);
        for (std::size_t k = 0; k < d; ++k) p[k] = rng.uniform(field.background.lower[k], field.background.upper[k]);
        points.push_back(std::move(p));
    }
    return Sample::from_points(points);
}

SourceField two_source_field() {
    return {{{35.212, 35.829}, {35.272, 35.937}}, 0.002, 150, Box{{35.0, 35.7}, {35.5, 36.1}}, 2000};
}

double ks_distance_uniform(std::vector<double> values) {
    if (values.empty()) throw InsufficientData("KS distance of an empty sample");
    std::sort(values.begin(), values.end());
    const double m = static_cast<double>(values.size());
    double D = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double u = std::clamp(values[i], 0.0, 1.0);
        D = std::max({D, static_cast<double>(i + 1) / m - u, u - static_cast<double>(i) / m});
    }
    return D;
}

double kolmogorov_p_value(double distance, std::size_t m) {
    if (m == 0) throw InvalidInput("KS p-value needs at least one value");
    const double root = std::sqrt(static_cast<double>(m));
    const double lambda = (root + 0.12 + 0.11 / root) * distance;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

OracleSummary uniformity_oracle(const Wedge& wedge, std::size_t n_points, std::size_t reps, std::uint64_t seed,
                                OracleDensity density, unsigned workers) {
    if (n_points < 2) throw InvalidInput("oracle needs at least two points");
    if (reps == 0) throw InvalidInput("reps must be positive");
    const std::size_t d = wedge.dim();
    const Box box = wedge.bounds();

    struct Rep {
        double distance = 0.0;
        double p = 0.0;
        std::size_t proposed = 0;
    };
    std::vector<Rep> out(reps);
    parallel_for(reps, workers, [&](std::size_t r) {
        Rng rng = make_stream(seed, r);
        std::vector<double> proj;
        Point x(d);
        std::size_t proposed = 0;
        while (proj.size() < n_points) {
            for (std::size_t c = 0; c < d; ++c) x[c] = rng.uniform(box.lower[c], box.upper[c]);
            ++proposed;
            if (!wedge_contains(wedge, x)) continue;
            const double t = signed_projected_distance(x, wedge.vertex(), wedge.direction());
            if (density == OracleDensity::linear_increasing && rng.uniform() * wedge.length() > t) continue;
            proj.push_back(t);
        }
        std::sort(proj.begin(), proj.end());
        const double top = std::pow(proj.back(), static_cast<double>(d));
        std::vector<double> ratios(n_points - 1);
        for (std::size_t j = 0; j + 1 < n_points; ++j) ratios[j] = std::pow(proj[j], static_cast<double>(d)) / top;
        const double D = ks_distance_uniform(ratios);
        out[r] = {D, kolmogorov_p_value(D, ratios.size()), proposed};
    });

    OracleSummary s;
    s.reps = reps;
    std::vector<double> ps;
    std::size_t proposed = 0;
    for (const auto& r : out) {
        s.mean_distance += r.distance / static_cast<double>(reps);
        s.rejections += r.p < 0.05 ? 1 : 0;
        ps.push_back(r.p);
        proposed += r.proposed;
    }
    s.rejection_rate = static_cast<double>(s.rejections) / static_cast<double>(reps);
    s.aggregate_p_value = kolmogorov_p_value(ks_distance_uniform(ps), ps.size());
    s.acceptance_ratio = static_cast<double>(reps * n_points) / static_cast<double>(proposed);
    return s;
}

namespace {

LocalScenario make_local(std::string name, DensitySpec density, std::size_t n, Point x0, WedgeGeometry geometry,
                         Calibration mode, std::size_t runs, std::uint64_t seed, std::size_t reps) {
    LocalScenario s;
    s.name = std::move(name);
    s.density = std::move(density);
    s.n = n;
    s.x0 = std::move(x0);
    s.test.geometry = std::move(geometry);
    s.test.alpha = 0.05;
    s.test.mode = mode;
    s.test.reps = reps;
    s.test.seed = derive_seed(seed, 0x5eed);
    s.test.reference_box = Box{{-2.5, -2.5}, {2.5, 2.5}};
    s.runs = runs;
    s.seed = seed;
    return s;
}

std::string row_name(const std::string& what, std::size_t n, Calibration mode, const std::string& extra = "") {
    return what + " n=" + std::to_string(n) + (extra.empty() ? "" : " " + extra) +
           (mode == Calibration::calibrated ? " (cal.)" : "");
}

const std::vector<std::string> kLocalPresets{"table2", "table4", "table5", "wedge-length", "direction-count"};
const std::vector<std::string> kDetectionPresets{"trimodal", "uniform-modes"};

}  // namespace

bool is_local_preset(const std::string& name) {
    return std::find(kLocalPresets.begin(), kLocalPresets.end(), name) != kLocalPresets.end();
}

bool is_detection_preset(const std::string& name) {
    return std::find(kDetectionPresets.begin(), kDetectionPresets.end(), name) != kDetectionPresets.end();
}

std::vector<LocalScenario> local_presets(const std::string& name, std::size_t runs, std::uint64_t seed, bool slow,
                                         std::size_t reps) {
    if (!is_local_preset(name)) throw InvalidInput("unknown scenario '" + name + "'");
    std::vector<std::size_t> sizes{100, 500};
    if (slow) sizes.push_back(5000);
    const Point origin{0.0, 0.0};
    const DensitySpec level_density = UniformBox{Box{{-2.5, -2.5}, {2.5, 2.5}}};
    const Calibration modes[] = {Calibration::raw, Calibration::calibrated};
    std::vector<LocalScenario> out;
    std::uint64_t row = 0;
    auto add = [&](std::string label, DensitySpec density, std::size_t n, Point x0, WedgeGeometry g, Calibration m) {
        out.push_back(make_local(std::move(label), std::move(density), n, std::move(x0), std::move(g), m, runs,
                                 derive_seed(seed, row++), reps));
    };

    if (name == "table2" || name == "table4" || name == "table5") {
        for (std::size_t n : sizes) {
            const WedgeGeometry g = make_geometry(ScaleParams{2.0, 9.65, 0.01, n, 2});
            for (Calibration m : modes) {
                if (name == "table2") {
                    add(row_name("level", n, m), level_density, n, origin, g, m);
                    add(row_name("power", n, m), standard_normal(2), n, origin, g, m);
                } else if (name == "table4") {
                    add(row_name("power", n, m, "sigma1"), sigma1_normal(), n, origin, g, m);
                    add(row_name("power", n, m, "sigma2"), sigma2_normal(), n, origin, g, m);
                } else {
                    add(row_name("power", n, m, "x0=(0.2,0.2)"), standard_normal(2), n, {0.2, 0.2}, g, m);
                    add(row_name("power", n, m, "x0=(0.7,0.7)"), standard_normal(2), n, {0.7, 0.7}, g, m);
                }
            }
        }
    } else if (name == "wedge-length") {
        for (double C1 : {2.0, 1.5, 1.0}) {
            const WedgeGeometry g = make_geometry(ScaleParams{C1, 9.65, 0.01, 500, 2});
            std::ostringstream label;
            label << "l=" << std::round(g.length * 100.0) / 100.0;
            for (Calibration m : modes) {
                add(row_name("level", 500, m, label.str()), level_density, 500, origin, g, m);
                add(row_name("power", 500, m, label.str()), standard_normal(2), 500, origin, g, m);
            }
        }
    } else {
        const double length = default_scales(ScaleParams{2.0, 9.65, 0.01, 500, 2}).length;
        for (std::size_t M : {4, 6, 8}) {
            const WedgeGeometry g = make_geometry(2, length, std::numbers::pi / static_cast<double>(M), M);
            for (Calibration m : modes) {
                add(row_name("level", 500, m, "M=" + std::to_string(M)), level_density, 500, origin, g, m);
                add(row_name("power", 500, m, "M=" + std::to_string(M)), standard_normal(2), 500, origin, g, m);
            }
        }
    }
    return out;
}

std::vector<DetectionScenario> detection_presets(const std::string& name, std::size_t runs, std::uint64_t seed,
                                                 std::size_t n, std::size_t reps) {
    if (!is_detection_preset(name)) throw InvalidInput("unknown scenario '" + name + "'");
    DetectionOptions opts;
    opts.geometry = make_geometry(2, 0.5, std::numbers::pi / 4, 4);
    opts.alpha = 0.05;
    opts.mode = Calibration::calibrated;
    opts.reps = reps;
    opts.seed = derive_seed(seed, 0x5eed);
    Grid grid({-3.0, -1.0}, {3.0, 3.0}, 1.0);
    opts.reference_box = expand(grid.box(), opts.geometry.length);
    DensitySpec density = name == "trimodal" ? trimodal_mixture() : DensitySpec{UniformBox{*opts.reference_box}};
    return {DetectionScenario{name + " n=" + std::to_string(n), std::move(density), n, std::move(grid), opts, runs,
                              derive_seed(seed, 1)}};
}

}  // namespace modescope
