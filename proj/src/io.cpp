#include "modescope/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "modescope/errors.hpp"
#include "modescope/univariate.hpp"

namespace modescope {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    if (line.find(',') != std::string::npos) {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    } else {
        std::istringstream ss(line);
        std::string cell;
        while (ss >> cell) out.push_back(cell);
    }
    return out;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

json vec_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number_to_json(x));
    return a;
}

std::vector<double> vec_from_json(const json& j) {
    std::vector<double> v;
    for (const auto& x : j) v.push_back(number_from_json(x));
    return v;
}

json box_json(const Box& b) { return {{"lower", vec_json(b.lower)}, {"upper", vec_json(b.upper)}}; }

Box box_from_json(const json& j) { return {vec_from_json(j.at("lower")), vec_from_json(j.at("upper"))}; }

json geometry_json(const WedgeGeometry& g) {
    json dirs = json::array();
    for (const auto& e : g.directions) dirs.push_back(vec_json(e));
    return {{"length", number_to_json(g.length)}, {"angle", number_to_json(g.angle)}, {"directions", dirs}};
}

json grid_json(const Grid& g) {
    return {{"lower", vec_json(g.lower())},
            {"upper", vec_json(g.upper())},
            {"mesh", number_to_json(g.mesh())},
            {"shape", g.shape()},
            {"vertex_count", g.size()}};
}

json optional_quantile(const std::optional<NullQuantile>& q) { return q ? to_json(*q) : json(nullptr); }

json frequency_json(const Frequency& f) {
    return {{"runs", f.runs}, {"hits", f.hits}, {"rate", number_to_json(f.rate)},
            {"std_error", number_to_json(f.std_error)}};
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    std::string s(buf);
    return s == "-0.000" ? "0.000" : s;
}

}  // namespace

Sample parse_points(std::istream& in) {
    std::vector<double> coords;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    bool first_content = true;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            first_content = first_content && t.empty();
            continue;
        }
        const auto fields = split_fields(t);
        std::vector<double> row;
        bool numeric = true;
        for (const auto& f : fields) {
            double v;
            if (!parse_number(f, v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) {
            if (first_content) {
                first_content = false;
                continue;
            }
            throw ParseError("non-numeric cell", line_no);
        }
        first_content = false;
        if (dim == 0) dim = row.size();
        if (row.size() != dim)
            throw ParseError("expected " + std::to_string(dim) + " values, found " + std::to_string(row.size()),
                             line_no);
        coords.insert(coords.end(), row.begin(), row.end());
    }
    if (coords.empty()) throw ParseError("no data rows", line_no);
    return Sample(dim, std::move(coords));
}

Sample parse_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'", 0);
    return parse_points(in);
}

json number_to_json(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double number_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw ParseError("expected a number", 0);
}

json to_json(const NullQuantile& q) {
    json j{{"kappa", number_to_json(q.kappa)},
           {"source", to_string(q.source)},
           {"flavor", to_string(q.flavor)},
           {"n", q.n},
           {"alpha", number_to_json(q.alpha)},
           {"reps", q.reps},
           {"seed", q.seed},
           {"full_scales_up_to", q.full_scales_up_to},
           {"counts", q.counts},
           {"reference_box", q.reference_box ? box_json(*q.reference_box) : json(nullptr)}};
    if (!q.replicate_values.empty()) j["replicate_values"] = vec_json(q.replicate_values);
    return j;
}

NullQuantile quantile_from_json(const json& j) {
    try {
        NullQuantile q;
        q.kappa = number_from_json(j.at("kappa"));
        q.source = j.at("source").get<std::string>() == "calibrated" ? QuantileSource::calibrated
                                                                      : QuantileSource::simulated;
        q.flavor = parse_flavor(j.at("flavor").get<std::string>());
        q.n = j.at("n").get<std::size_t>();
        q.alpha = number_from_json(j.at("alpha"));
        q.reps = j.at("reps").get<std::size_t>();
        q.seed = j.at("seed").get<std::uint64_t>();
        q.full_scales_up_to = j.at("full_scales_up_to").get<std::size_t>();
        q.counts = j.at("counts").get<std::vector<std::size_t>>();
        if (!j.at("reference_box").is_null()) q.reference_box = box_from_json(j.at("reference_box"));
        if (j.contains("replicate_values")) q.replicate_values = vec_from_json(j.at("replicate_values"));
        return q;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed quantile: ") + e.what(), 0);
    }
}

json decision_to_json(const WedgeDecision& d, const Point& vertex, const Point& direction) {
    return {{"vertex", d.vertex},
            {"point", vec_json(vertex)},
            {"direction", d.direction},
            {"direction_vector", vec_json(direction)},
            {"N", d.N},
            {"scale", {d.scale.j, d.scale.k}},
            {"statistic", number_to_json(d.statistic)},
            {"threshold", number_to_json(d.threshold)},
            {"verdict", to_string(d.verdict)}};
}

WedgeDecision decision_from_json(const json& j) {
    try {
        WedgeDecision d;
        d.vertex = j.at("vertex").get<std::size_t>();
        d.direction = j.at("direction").get<std::size_t>();
        d.N = j.at("N").get<std::size_t>();
        d.scale = {j.at("scale").at(0).get<std::size_t>(), j.at("scale").at(1).get<std::size_t>()};
        d.statistic = number_from_json(j.at("statistic"));
        d.threshold = number_from_json(j.at("threshold"));
        d.verdict = parse_verdict(j.at("verdict").get<std::string>());
        return d;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed decision: ") + e.what(), 0);
    }
}

json to_json(const ModeTestResult& r, const WedgeGeometry& geometry) {
    json decisions = json::array();
    for (const auto& d : r.per_wedge) decisions.push_back(decision_to_json(d, r.x0, geometry.directions[d.direction]));
    return {{"x0", vec_json(r.x0)},
            {"mode_detected", r.mode_detected},
            {"geometry", geometry_json(geometry)},
            {"kappa", optional_quantile(r.kappa)},
            {"decisions", decisions}};
}

json to_json(const MonotonicityMap& m) {
    json decisions = json::array();
    for (const auto& d : m.decisions)
        decisions.push_back(decision_to_json(d, m.grid.vertices()[d.vertex], m.geometry.directions[d.direction]));
    return {{"grid", grid_json(m.grid)},
            {"geometry", geometry_json(m.geometry)},
            {"alpha", number_to_json(m.alpha)},
            {"use_subsections", m.use_subsections},
            {"kappa", optional_quantile(m.kappa)},
            {"skipped_degenerate", m.skipped_degenerate},
            {"decisions", decisions}};
}

json to_json(const DetectionResult& r) {
    json modes = json::array();
    for (const auto& m : r.modes) {
        json decisions = json::array();
        for (const auto& d : m.test.per_wedge)
            decisions.push_back(decision_to_json(d, m.test.x0, r.geometry.directions[d.direction]));
        modes.push_back({{"vertex", m.vertex},
                         {"point", vec_json(m.test.x0)},
                         {"precision", number_to_json(r.precision)},
                         {"decisions", decisions}});
    }
    return {{"grid", grid_json(r.grid)},
            {"geometry", geometry_json(r.geometry)},
            {"alpha", number_to_json(r.alpha)},
            {"calibration", to_string(r.mode)},
            {"kappa", optional_quantile(r.kappa)},
            {"precision", number_to_json(r.precision)},
            {"modes", modes}};
}

json to_json(const LevelPowerResult& r, const LocalScenario& s) {
    return {{"name", r.name},
            {"density", describe(s.density)},
            {"n", s.n},
            {"x0", vec_json(s.x0)},
            {"geometry", geometry_json(s.test.geometry)},
            {"calibration", to_string(s.test.mode)},
            {"alpha", number_to_json(s.test.alpha)},
            {"seed", s.seed},
            {"detected", frequency_json(r.detected)},
            {"kappa", optional_quantile(r.calibration)}};
}

json to_json(const DetectionStudy& r, const DetectionScenario& s) {
    json vertices = json::array();
    for (const auto& v : r.per_vertex)
        vertices.push_back({{"vertex", v.vertex}, {"point", vec_json(v.point)}, {"detected", frequency_json(v.detected)}});
    return {{"name", r.name},
            {"density", describe(s.density)},
            {"n", s.n},
            {"grid", grid_json(s.grid)},
            {"geometry", geometry_json(s.detection.geometry)},
            {"calibration", to_string(s.detection.mode)},
            {"alpha", number_to_json(s.detection.alpha)},
            {"seed", s.seed},
            {"any_mode", frequency_json(r.any_mode)},
            {"per_vertex", vertices},
            {"kappa", optional_quantile(r.calibration)}};
}

json make_document(const std::string& procedure, const json& config, std::optional<std::uint64_t> seed, json body) {
    return {{"schema", kSchemaVersion},
            {"procedure", procedure},
            {"config", config},
            {"seed", seed ? json(*seed) : json(nullptr)},
            {"result", std::move(body)}};
}

std::string dump_document(const json& doc) { return doc.dump(2) + "\n"; }

void write_results(const json& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << dump_document(doc);
    if (!out) throw InvalidInput("failed writing '" + path + "'");
}

json read_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'", 0);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid document: ") + e.what(), 0);
    }
    if (!doc.is_object() || doc.value("schema", "") != kSchemaVersion)
        throw ParseError("not a " + std::string(kSchemaVersion) + " document", 0);
    return doc;
}

std::vector<WedgeDecision> decisions_from_document(const json& doc) {
    std::vector<WedgeDecision> out;
    const json& r = doc.at("result");
    if (r.contains("decisions"))
        for (const auto& d : r.at("decisions")) out.push_back(decision_from_json(d));
    if (r.contains("modes"))
        for (const auto& m : r.at("modes"))
            for (const auto& d : m.at("decisions")) out.push_back(decision_from_json(d));
    return out;
}

std::string render_map_svg(const MonotonicityMap& map) {
    if (map.grid.lower().size() != 2 || map.geometry.dim() != 2)
        throw InvalidInput("maps render only for d = 2");
    const auto& g = map.geometry;
    const double reach = g.length * std::sqrt(1.0 + std::tan(g.angle) * std::tan(g.angle));
    const Box world = expand(map.grid.box(), reach);
    const double width = 800.0;
    const double scale = width / (world.upper[0] - world.lower[0]);
    const double height = (world.upper[1] - world.lower[1]) * scale;
    auto px = [&](double x) { return fmt((x - world.lower[0]) * scale); };
    auto py = [&](double y) { return fmt((world.upper[1] - y) * scale); };

    // Whole-wedge verdict per (vertex, direction); subsection rejections
    // mark the wedge too.
    const std::size_t M = g.directions.size();
    std::vector<int> mark(map.grid.size() * M, 0);  // bit 1: increase rejected, bit 2: decrease rejected
    for (const auto& d : map.decisions) {
        int& m = mark[d.vertex * M + d.direction];
        if (d.verdict == Verdict::increase_rejected) m |= 1;
        if (d.verdict == Verdict::decrease_rejected) m |= 2;
    }

    std::ostringstream os;
    const double legend = 40.0;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(width) << "\" height=\""
       << fmt(height + legend) << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height + legend) << "\">\n"
       << "<defs>\n"
       << "<pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
       << "<path d=\"M0,0 L6,6 M6,0 L0,6\" stroke=\"black\" stroke-width=\"0.8\"/></pattern>\n"
       << "<pattern id=\"dots\" width=\"5\" height=\"5\" patternUnits=\"userSpaceOnUse\">"
       << "<circle cx=\"2.5\" cy=\"2.5\" r=\"1\" fill=\"black\"/></pattern>\n"
       << "</defs>\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\"" << fmt(height + legend)
       << "\" fill=\"white\"/>\n";

    for (std::size_t v = 0; v < map.grid.size(); ++v) {
        const Point& x0 = map.grid.vertices()[v];
        for (std::size_t i = 0; i < M; ++i) {
            const Wedge w = g.wedge(x0, i);
            const auto& e = w.direction();
            const auto& c = w.complement().front();
            const double a = g.length, b = g.length * w.tan_angle();
            const double x1 = x0[0] + a * e[0] + b * c[0], y1 = x0[1] + a * e[1] + b * c[1];
            const double x2 = x0[0] + a * e[0] - b * c[0], y2 = x0[1] + a * e[1] - b * c[1];
            const int m = mark[v * M + i];
            const char* fill = m & 1 ? "url(#hatch)" : (m & 2 ? "url(#dots)" : "none");
            os << "<polygon points=\"" << px(x0[0]) << ',' << py(x0[1]) << ' ' << px(x1) << ',' << py(y1) << ' '
               << px(x2) << ',' << py(y2) << "\" fill=\"" << fill << "\" stroke=\"black\" stroke-width=\"0.6\"/>\n";
            if ((m & 3) == 3)
                os << "<polygon points=\"" << px(x0[0]) << ',' << py(x0[1]) << ' ' << px(x1) << ',' << py(y1) << ' '
                   << px(x2) << ',' << py(y2) << "\" fill=\"url(#dots)\" stroke=\"none\"/>\n";
        }
        os << "<circle cx=\"" << px(x0[0]) << "\" cy=\"" << py(x0[1]) << "\" r=\"1.5\" fill=\"black\"/>\n";
    }

    const double ly = height + 12.0;
    auto key = [&](double x, const char* fill, const char* label) {
        os << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(ly) << "\" width=\"16\" height=\"16\" fill=\"" << fill
           << "\" stroke=\"black\" stroke-width=\"0.6\"/>\n"
           << "<text x=\"" << fmt(x + 22.0) << "\" y=\"" << fmt(ly + 13.0)
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << label << "</text>\n";
    };
    key(10.0, "url(#hatch)", "increase rejected");
    key(190.0, "url(#dots)", "decrease rejected");
    key(370.0, "none", "no rejection");
    os << "</svg>\n";
    return os.str();
}

void render_map(const MonotonicityMap& map, const std::string& path) {
    const std::string svg = render_map_svg(map);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << svg;
}

json config_to_json(const RunConfig& c) {
    auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
    auto optnum = [](const std::optional<double>& o) { return o ? number_to_json(*o) : json(nullptr); };
    return {{"procedure", c.procedure},
            {"input", c.input},
            {"dim", opt(c.dim)},
            {"C1", number_to_json(c.C1)},
            {"C2", number_to_json(c.C2)},
            {"epsilon", number_to_json(c.epsilon)},
            {"length", optnum(c.length)},
            {"angle", optnum(c.angle)},
            {"directions", c.directions},
            {"direction_seed", c.direction_seed},
            {"x0", c.x0 ? vec_json(*c.x0) : json(nullptr)},
            {"box", c.box ? box_json(*c.box) : json(nullptr)},
            {"mesh", optnum(c.mesh)},
            {"reference_box", c.reference_box ? box_json(*c.reference_box) : json(nullptr)},
            {"alpha", number_to_json(c.alpha)},
            {"calibrated", c.calibrated},
            {"reps", c.reps},
            {"seed", opt(c.seed)},
            {"subsections", c.subsections},
            {"full_scales_up_to", c.full_scales_up_to},
            {"kappa_file", c.kappa_file},
            {"target", c.target},
            {"n", c.n},
            {"scenario", c.scenario},
            {"runs", c.runs},
            {"slow", c.slow}};
}

namespace {

Sample load_input(const RunConfig& c) {
    if (c.input.empty()) throw UsageError("--input is required");
    Sample s = parse_points(c.input);
    if (c.dim && *c.dim != s.dim())
        throw InvalidInput("input has dimension " + std::to_string(s.dim()) + ", expected " + std::to_string(*c.dim));
    return s;
}

std::uint64_t need_seed(const RunConfig& c) {
    if (!c.seed) throw UsageError("--seed is required for " + c.procedure);
    return *c.seed;
}

WedgeGeometry geometry_for(const RunConfig& c, std::size_t n, std::size_t d) {
    if (c.length.has_value() != c.angle.has_value()) throw UsageError("--length and --angle go together");
    if (c.length) return make_geometry(d, *c.length, *c.angle, c.directions, c.epsilon, c.direction_seed);
    const ScaleParams p{c.C1, c.C2, c.epsilon, n, d};
    if (c.directions == 0) return make_geometry(p, c.direction_seed);
    const WedgeScales s = default_scales(p);
    return make_geometry(d, s.length, s.angle, c.directions, c.epsilon, c.direction_seed);
}

Grid grid_for(const RunConfig& c, const Sample* sample, const WedgeGeometry& g, std::size_t n) {
    Box box;
    if (c.box) box = *c.box;
    else if (sample) box = expand(bounding_box(*sample), g.length);
    else throw UsageError("--box is required");
    double mesh;
    if (c.mesh) {
        mesh = *c.mesh;
    } else {
        const double d = static_cast<double>(box.dim());
        const double ln = std::log(static_cast<double>(n));
        mesh = (2.0 + c.epsilon) * c.C1 * ln * std::pow(ln / static_cast<double>(n), 1.0 / (d + 4.0));
    }
    return build_grid(box.lower, box.upper, mesh);
}

std::optional<NullQuantile> load_kappa(const RunConfig& c) {
    if (c.kappa_file.empty()) return std::nullopt;
    const json doc = read_results(c.kappa_file);
    const json& r = doc.at("result");
    if (!r.contains("kappa") || r.at("kappa").is_null()) throw ParseError("document holds no kappa", 0);
    return quantile_from_json(r.at("kappa"));
}

json run_local_test(const RunConfig& c) {
    const Sample sample = load_input(c);
    if (!c.x0) throw UsageError("--x0 is required");
    LocalTestOptions o;
    o.geometry = geometry_for(c, sample.size(), sample.dim());
    o.alpha = c.alpha;
    o.mode = c.calibrated ? Calibration::calibrated : Calibration::raw;
    o.reps = c.reps;
    o.reference_box = c.reference_box;
    o.calibrated_threshold = c.calibrated ? load_kappa(c) : std::nullopt;
    if (!o.calibrated_threshold) o.seed = need_seed(c);
    o.workers = c.workers;
    const ModeTestResult r = local_mode_test(sample, *c.x0, o);
    return make_document(c.procedure, config_to_json(c), c.seed, to_json(r, o.geometry));
}

json run_map(const RunConfig& c) {
    const Sample sample = load_input(c);
    MapOptions o;
    o.geometry = geometry_for(c, sample.size(), sample.dim());
    o.alpha = c.alpha;
    o.use_subsections = c.subsections;
    o.full_scales_up_to = c.full_scales_up_to;
    o.reps = c.reps;
    o.seed = need_seed(c);
    o.workers = c.workers;
    const Grid grid = grid_for(c, &sample, o.geometry, sample.size());
    const MonotonicityMap m = monotonicity_map(sample, grid, o);
    if (!c.svg.empty()) render_map(m, c.svg);
    return make_document(c.procedure, config_to_json(c), c.seed, to_json(m));
}

json run_detect(const RunConfig& c) {
    const Sample sample = load_input(c);
    DetectionOptions o;
    o.geometry = geometry_for(c, sample.size(), sample.dim());
    o.alpha = c.alpha;
    o.mode = c.calibrated ? Calibration::calibrated : Calibration::raw;
    o.reps = c.reps;
    o.reference_box = c.reference_box;
    o.calibrated_threshold = c.calibrated ? load_kappa(c) : std::nullopt;
    if (!o.calibrated_threshold) o.seed = need_seed(c);
    o.workers = c.workers;
    const Grid grid = grid_for(c, &sample, o.geometry, sample.size());
    const DetectionResult r = detect_modes(sample, grid, o);
    return make_document(c.procedure, config_to_json(c), c.seed, to_json(r));
}

json run_calibrate(const RunConfig& c) {
    const std::uint64_t seed = need_seed(c);
    std::optional<Sample> sample;
    if (!c.input.empty()) sample = load_input(c);
    const std::size_t n = c.n > 0 ? c.n : (sample ? sample->size() : 0);
    if (n == 0) throw UsageError("--n or --input is required");
    const std::size_t d = c.dim ? *c.dim : (sample ? sample->dim() : (c.box ? c.box->dim() : (c.x0 ? c.x0->size() : 2)));
    const WedgeGeometry g = geometry_for(c, n, d);
    json body{{"target", c.target}, {"geometry", geometry_json(g)}};
    if (c.target == "local-test") {
        if (!c.x0) throw UsageError("--x0 is required");
        LocalTestOptions o;
        o.geometry = g;
        o.alpha = c.alpha;
        o.mode = Calibration::calibrated;
        o.reps = c.reps;
        o.seed = seed;
        o.reference_box = c.reference_box;
        if (!o.reference_box && sample) o.reference_box = bounding_box(*sample);
        if (!o.reference_box) throw UsageError("--reference-box or --input is required");
        o.workers = c.workers;
        body["kappa"] = to_json(calibrate_local_test(*c.x0, n, o));
    } else if (c.target == "detect-modes") {
        DetectionOptions o;
        o.geometry = g;
        o.alpha = c.alpha;
        o.mode = Calibration::calibrated;
        o.reps = c.reps;
        o.seed = seed;
        o.reference_box = c.reference_box;
        o.workers = c.workers;
        const Grid grid = grid_for(c, sample ? &*sample : nullptr, g, n);
        body["grid"] = grid_json(grid);
        body["kappa"] = to_json(calibrate_detection(grid, n, o));
    } else {
        throw UsageError("--target must be local-test or detect-modes");
    }
    return make_document(c.procedure, config_to_json(c), c.seed, body);
}

json run_simulate(const RunConfig& c) {
    const std::uint64_t seed = need_seed(c);
    json rows = json::array();
    if (is_local_preset(c.scenario)) {
        for (const auto& s : local_presets(c.scenario, c.runs, seed, c.slow, c.reps))
            rows.push_back(to_json(run_level_power(s, c.workers), s));
    } else if (is_detection_preset(c.scenario)) {
        for (const auto& s : detection_presets(c.scenario, c.runs, seed, c.n > 0 ? c.n : 2500, c.reps))
            rows.push_back(to_json(run_mode_detection_study(s, c.workers), s));
    } else {
        throw UsageError("unknown scenario '" + c.scenario + "'");
    }
    json body{{"scenario", c.scenario},
              {"rows", rows},
              {"notes",
               {"covariances sigma1 and sigma2 are realised as diag(0.5, 1) and diag(0.5, 1.5)",
                "calibrated rows use one calibration per row; raw rows simulate kappa per run"}}};
    return make_document(c.procedure, config_to_json(c), c.seed, body);
}

json run_univariate(const RunConfig& c) {
    const Sample sample = load_input(c);
    if (sample.dim() != 1) throw InvalidInput("univariate test needs one column");
    const std::uint64_t seed = need_seed(c);
    const auto x = sample.coords();
    const double kappa = univariate_quantile(sample.size(), c.alpha, c.reps, seed, c.workers);
    const auto decisions = univariate_test(x, kappa);
    json rejected = json::array();
    for (const auto& d : decisions) {
        if (d.verdict == IntervalVerdict::none) continue;
        rejected.push_back({{"j", d.j}, {"k", d.k}, {"T", number_to_json(d.T)}, {"c", number_to_json(d.c)},
                            {"verdict", to_string(d.verdict)}});
    }
    json body{{"n", sample.size()},
              {"statistic", number_to_json(multiscale_statistic(x))},
              {"kappa", number_to_json(kappa)},
              {"alpha", number_to_json(c.alpha)},
              {"reps", c.reps},
              {"interval_count", decisions.size()},
              {"rejections", rejected}};
    return make_document(c.procedure, config_to_json(c), c.seed, body);
}

std::vector<double> parse_list(const std::string& s, const char* flag) {
    std::vector<double> v;
    for (const auto& f : split_fields(s)) {
        double x;
        if (!parse_number(f, x)) throw UsageError(std::string(flag) + ": '" + f + "' is not a number");
        v.push_back(x);
    }
    if (v.empty()) throw UsageError(std::string(flag) + " needs values");
    return v;
}

Box parse_box(const std::string& s, const char* flag) {
    const auto v = parse_list(s, flag);
    if (v.size() % 2 != 0) throw UsageError(std::string(flag) + " needs lower corner then upper corner");
    const auto half = static_cast<std::ptrdiff_t>(v.size() / 2);
    return {Point(v.begin(), v.begin() + half), Point(v.begin() + half, v.end())};
}

}  // namespace

json run_procedure(const RunConfig& c) {
    if (c.procedure == "local-test") return run_local_test(c);
    if (c.procedure == "map") return run_map(c);
    if (c.procedure == "detect-modes") return run_detect(c);
    if (c.procedure == "calibrate") return run_calibrate(c);
    if (c.procedure == "simulate") return run_simulate(c);
    if (c.procedure == "univariate") return run_univariate(c);
    throw UsageError("unknown procedure '" + c.procedure + "'");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multiscale inference on monotonicity and modes of a multivariate density", "modescope"};
    app.require_subcommand(1);

    RunConfig c;
    std::string x0, box, reference_box;
    double length = 0.0, angle = 0.0, mesh = 0.0;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    struct Flags {
        CLI::Option* length = nullptr;
        CLI::Option* angle = nullptr;
        CLI::Option* mesh = nullptr;
        CLI::Option* dim = nullptr;
        CLI::Option* seed = nullptr;
    };
    std::vector<std::pair<CLI::App*, Flags>> subs;

    auto common = [&](CLI::App* s, bool input, bool scales) {
        Flags f;
        if (input) {
            s->add_option("--input", c.input, "CSV file of points");
            f.dim = s->add_option("--dim", dim, "Expected dimension");
        }
        if (scales) {
            s->add_option("--C1", c.C1, "Length constant");
            s->add_option("--C2", c.C2, "Angle constant");
            s->add_option("--epsilon", c.epsilon, "Direction packing slack");
            f.length = s->add_option("--length", length, "Wedge length (overrides C1)");
            f.angle = s->add_option("--angle", angle, "Wedge angle in radians (overrides C2)");
            s->add_option("--directions", c.directions, "Number of directions (0: default)");
            s->add_option("--direction-seed", c.direction_seed, "Seed of the d >= 3 direction packing");
            s->add_option("--alpha", c.alpha, "Level");
        }
        s->add_option("--reps", c.reps, "Monte-Carlo replicates");
        f.seed = s->add_option("--seed", seed, "Random seed");
        s->add_option("--output", c.output, "Output document (default: standard output)");
        s->add_option("--workers", c.workers, "Worker threads (0: all cores)");
        return f;
    };

    auto* local = app.add_subcommand("local-test", "Test for a mode at a candidate point");
    subs.push_back({local, common(local, true, true)});
    local->add_option("--x0", x0, "Candidate point, comma separated")->required();
    local->add_flag("--calibrated", c.calibrated, "Calibrate on a uniform reference box");
    local->add_option("--reference-box", reference_box, "Calibration box: lower corner then upper corner");
    local->add_option("--kappa-file", c.kappa_file, "Reuse the kappa of a calibrate document");

    auto* map = app.add_subcommand("map", "Monotonicity map over a grid");
    subs.push_back({map, common(map, true, true)});
    map->add_option("--box", box, "Grid box: lower corner then upper corner");
    subs.back().second.mesh = map->add_option("--mesh", mesh, "Grid mesh");
    map->add_flag("--subsections", c.subsections, "Test every subsection of every wedge");
    map->add_option("--full-scales", c.full_scales_up_to, "Wedges up to this count use all subsections");
    map->add_option("--svg", c.svg, "Also render the map to this SVG file");

    auto* detect = app.add_subcommand("detect-modes", "Grid-based mode detection");
    subs.push_back({detect, common(detect, true, true)});
    detect->add_option("--box", box, "Grid box: lower corner then upper corner");
    subs.back().second.mesh = detect->add_option("--mesh", mesh, "Grid mesh");
    detect->add_flag("--calibrated", c.calibrated, "Calibrate on a uniform reference box");
    detect->add_option("--reference-box", reference_box, "Calibration box (default: grid box plus one length)");
    detect->add_option("--kappa-file", c.kappa_file, "Reuse the kappa of a calibrate document");

    auto* cal = app.add_subcommand("calibrate", "Calibrated kappa for a later local-test or detect-modes run");
    subs.push_back({cal, common(cal, true, true)});
    cal->add_option("--target", c.target, "local-test or detect-modes")->required();
    cal->add_option("--n", c.n, "Sample size (default: size of --input)");
    cal->add_option("--x0", x0, "Candidate point for local-test");
    cal->add_option("--box", box, "Grid box for detect-modes");
    subs.back().second.mesh = cal->add_option("--mesh", mesh, "Grid mesh for detect-modes");
    cal->add_option("--reference-box", reference_box, "Calibration box");

    auto* sim = app.add_subcommand("simulate", "Level, power and detection studies");
    subs.push_back({sim, common(sim, false, false)});
    sim->add_option("--scenario", c.scenario,
                    "table2, table4, table5, wedge-length, direction-count, trimodal or uniform-modes")
        ->required();
    sim->add_option("--runs", c.runs, "Simulation runs per row");
    sim->add_option("--n", c.n, "Sample size for detection scenarios (default 2500)");
    sim->add_flag("--slow", c.slow, "Include n = 5000 rows");

    auto* uni = app.add_subcommand("univariate", "Univariate multiscale test on one column");
    subs.push_back({uni, common(uni, true, false)});
    uni->add_option("--alpha", c.alpha, "Level");

    if (argc <= 1) {
        err << app.help();
        return 1;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "modescope: " << e.what() << "\n";
        if (const auto* s = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) err << s->help();
        else err << app.help();
        return 1;
    }

    try {
        CLI::App* chosen = app.get_subcommands().front();
        c.procedure = chosen->get_name();
        for (const auto& [s, f] : subs) {
            if (s != chosen) continue;
            if (f.length && f.length->count()) c.length = length;
            if (f.angle && f.angle->count()) c.angle = angle;
            if (f.mesh && f.mesh->count()) c.mesh = mesh;
            if (f.dim && f.dim->count()) c.dim = dim;
            if (f.seed && f.seed->count()) c.seed = seed;
        }
        if (!x0.empty()) c.x0 = parse_list(x0, "--x0");
        if (!box.empty()) c.box = parse_box(box, "--box");
        if (!reference_box.empty()) c.reference_box = parse_box(reference_box, "--reference-box");

        const json doc = run_procedure(c);
        if (c.output.empty()) out << dump_document(doc);
        else write_results(doc, c.output);
        return 0;
    } catch (const UsageError& e) {
        err << "modescope: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        err << "modescope: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace modescope
