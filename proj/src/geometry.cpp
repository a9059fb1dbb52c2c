#include "modescope/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "modescope/errors.hpp"
#include "modescope/rng.hpp"

namespace modescope {

namespace {

constexpr double kUnitTolerance = 1e-9;

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Point normalized_direction(Point e) {
    if (e.empty() || !all_finite(e)) throw InvalidInput("direction must be a finite vector");
    const double len = norm(e);
    if (std::abs(len - 1.0) > kUnitTolerance) throw InvalidInput("direction must have unit norm");
    for (double& x : e) x /= len;
    return e;
}

void check_angle_length(double angle, double length) {
    if (!(angle > 0.0 && angle < std::numbers::pi / 2))
        throw InvalidInput("wedge angle must lie in (0, pi/2)");
    if (!(length > 0.0) || !std::isfinite(length)) throw InvalidInput("wedge length must be positive");
}

// Radical inverse in the given base (van der Corput).
double radical_inverse(std::size_t index, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43,
                                47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107};

std::vector<Point> sphere_candidates(std::size_t d, std::size_t count, std::uint64_t seed) {
    const std::size_t dims = 2 * ((d + 1) / 2);
    if (dims > std::size(kPrimes)) throw ParameterError("direction packing supports d <= 28");
    Rng rng(derive_seed(seed, 0xD1EC7105ULL));
    std::vector<double> shift(dims);
    for (double& s : shift) s = rng.uniform();

    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t k = 1; k <= count; ++k) {
        Point v(d);
        for (std::size_t pair = 0; 2 * pair < d; ++pair) {
            double u1 = std::fmod(radical_inverse(k, kPrimes[2 * pair]) + shift[2 * pair], 1.0);
            double u2 = std::fmod(radical_inverse(k, kPrimes[2 * pair + 1]) + shift[2 * pair + 1], 1.0);
            u1 = std::max(u1, 1e-300);
            const double r = std::sqrt(-2.0 * std::log(u1));
            v[2 * pair] = r * std::cos(2 * std::numbers::pi * u2);
            if (2 * pair + 1 < d) v[2 * pair + 1] = r * std::sin(2 * std::numbers::pi * u2);
        }
        const double len = norm(v);
        if (len < 1e-12) continue;
        for (double& x : v) x /= len;
        out.push_back(std::move(v));
    }
    return out;
}

double angle_between(std::span<const double> a, std::span<const double> b) {
    return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

}  // namespace

Sample::Sample(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0) throw InvalidInput("sample dimension must be at least 1");
    if (coords_.size() % dim_ != 0) throw InvalidInput("coordinate count is not a multiple of the dimension");
    if (!all_finite(coords_)) throw InvalidInput("sample coordinates must be finite");
}

Sample Sample::from_points(const std::vector<Point>& points) {
    if (points.empty()) throw InvalidInput("empty point list");
    const std::size_t d = points.front().size();
    std::vector<double> coords;
    coords.reserve(points.size() * d);
    for (const auto& p : points) {
        if (p.size() != d) throw InvalidInput("points have mixed dimensions");
        coords.insert(coords.end(), p.begin(), p.end());
    }
    return Sample(d, std::move(coords));
}

Point Box::center() const {
    Point c(lower.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
    return c;
}

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lower.size(); ++i) v *= upper[i] - lower[i];
    return v;
}

void validate_box(const Box& box) {
    if (box.lower.empty() || box.lower.size() != box.upper.size())
        throw InvalidInput("box corners must have the same nonzero dimension");
    for (std::size_t i = 0; i < box.lower.size(); ++i) {
        if (!std::isfinite(box.lower[i]) || !std::isfinite(box.upper[i]) || !(box.lower[i] < box.upper[i]))
            throw InvalidInput("box requires lower < upper in every coordinate");
    }
}

Box bounding_box(const Sample& sample) {
    if (sample.empty()) throw InvalidInput("bounding box of an empty sample");
    Box box{Point(sample[0].begin(), sample[0].end()), Point(sample[0].begin(), sample[0].end())};
    for (std::size_t i = 1; i < sample.size(); ++i) {
        auto x = sample[i];
        for (std::size_t c = 0; c < sample.dim(); ++c) {
            box.lower[c] = std::min(box.lower[c], x[c]);
            box.upper[c] = std::max(box.upper[c], x[c]);
        }
    }
    return box;
}

Box expand(const Box& box, double margin) {
    Box out = box;
    for (std::size_t c = 0; c < out.dim(); ++c) {
        out.lower[c] -= margin;
        out.upper[c] += margin;
    }
    return out;
}

Wedge::Wedge(Point vertex, Point direction, double angle, double length)
    : vertex_(std::move(vertex)),
      direction_(normalized_direction(std::move(direction))),
      angle_(angle),
      length_(length),
      tan_angle_(std::tan(angle)) {
    if (vertex_.size() != direction_.size()) throw InvalidInput("vertex and direction dimensions differ");
    if (!all_finite(vertex_)) throw InvalidInput("vertex must be finite");
    check_angle_length(angle, length);
    complement_ = orthonormal_complement(direction_);
}

Wedge::Wedge(Point vertex, Point direction, std::vector<Point> complement, double angle, double length)
    : vertex_(std::move(vertex)),
      direction_(normalized_direction(std::move(direction))),
      complement_(std::move(complement)),
      angle_(angle),
      length_(length),
      tan_angle_(std::tan(angle)) {
    const std::size_t d = vertex_.size();
    if (d != direction_.size()) throw InvalidInput("vertex and direction dimensions differ");
    if (!all_finite(vertex_)) throw InvalidInput("vertex must be finite");
    check_angle_length(angle, length);
    if (complement_.size() + 1 != d) throw InvalidInput("complement basis must have d-1 vectors");
    for (std::size_t i = 0; i < complement_.size(); ++i) {
        if (complement_[i].size() != d) throw InvalidInput("complement vector has wrong dimension");
        if (std::abs(dot(complement_[i], direction_)) > 1e-12 || std::abs(norm(complement_[i]) - 1.0) > 1e-12)
            throw InvalidInput("complement basis is not orthonormal to the direction");
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(dot(complement_[i], complement_[j])) > 1e-12)
                throw InvalidInput("complement basis vectors are not orthogonal");
    }
}

double Wedge::reach() const {
    const double side = static_cast<double>(dim() - 1) * tan_angle_ * tan_angle_;
    return length_ * std::sqrt(1.0 + side);
}

Box Wedge::bounds() const {
    Box box{vertex_, vertex_};
    for (std::size_t c = 0; c < dim(); ++c) {
        double half = 0.0;
        for (const auto& ei : complement_) half += std::abs(ei[c]);
        half *= length_ * tan_angle_;
        const double centre = vertex_[c] + length_ * direction_[c];
        box.lower[c] = std::min(vertex_[c], centre - half);
        box.upper[c] = std::max(vertex_[c], centre + half);
    }
    return box;
}

std::vector<Point> orthonormal_complement(std::span<const double> e) {
    const std::size_t d = e.size();
    if (d == 0 || !all_finite(e)) throw InvalidInput("direction must be a finite vector");
    if (std::abs(norm(e) - 1.0) > kUnitTolerance) throw InvalidInput("direction must have unit norm");

    std::size_t dropped = 0;
    for (std::size_t i = 1; i < d; ++i)
        if (std::abs(e[i]) > std::abs(e[dropped])) dropped = i;

    std::vector<Point> basis;
    basis.reserve(d - 1);
    for (std::size_t axis = 0; axis < d; ++axis) {
        if (axis == dropped) continue;
        Point v(d, 0.0);
        v[axis] = 1.0;
        // Two passes of modified Gram-Schmidt keep the result orthonormal to
        // rounding level even for nearly aligned inputs.
        for (int pass = 0; pass < 2; ++pass) {
            const double pe = dot(v, e);
            for (std::size_t c = 0; c < d; ++c) v[c] -= pe * e[c];
            for (const auto& b : basis) {
                const double pb = dot(v, b);
                for (std::size_t c = 0; c < d; ++c) v[c] -= pb * b[c];
            }
        }
        const double len = norm(v);
        for (double& x : v) x /= len;
        basis.push_back(std::move(v));
    }
    return basis;
}

double signed_projected_distance(std::span<const double> x, std::span<const double> x0,
                                 std::span<const double> e) {
    if (x.size() != x0.size() || x.size() != e.size()) throw InvalidInput("dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - x0[i]) * e[i];
    return s;
}

bool wedge_contains(const Wedge& wedge, std::span<const double> x) {
    const double p = signed_projected_distance(x, wedge.vertex(), wedge.direction());
    if (!(p > 0.0 && p <= wedge.length())) return false;
    const double bound = wedge.tan_angle() * p;
    for (const auto& ei : wedge.complement()) {
        if (std::abs(signed_projected_distance(x, wedge.vertex(), ei)) > bound) return false;
    }
    return true;
}

namespace {

WedgeScan finish_scan(std::vector<std::pair<double, std::size_t>>& hits) {
    std::sort(hits.begin(), hits.end());
    WedgeScan scan;
    scan.members.reserve(hits.size());
    scan.distances.reserve(hits.size());
    for (const auto& [dist, idx] : hits) {
        scan.distances.push_back(dist);
        scan.members.push_back(idx);
    }
    return scan;
}

void check_dims(const Sample& sample, const Wedge& wedge) {
    if (!sample.empty() && sample.dim() != wedge.dim()) throw InvalidInput("sample and wedge dimensions differ");
}

}  // namespace

WedgeScan scan_wedge(const Sample& sample, const Wedge& wedge) {
    check_dims(sample, wedge);
    std::vector<std::pair<double, std::size_t>> hits;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (wedge_contains(wedge, sample[i]))
            hits.emplace_back(signed_projected_distance(sample[i], wedge.vertex(), wedge.direction()), i);
    }
    return finish_scan(hits);
}

SampleIndex::SampleIndex(const Sample& sample, double cell_size) : sample_(&sample), cell_(cell_size) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw InvalidInput("index cell size must be positive");
    if (sample.empty()) {
        linear_ = true;
        return;
    }
    const Box box = bounding_box(sample);
    const std::size_t d = sample.dim();
    const double cell_budget = std::max(16.0 * static_cast<double>(sample.size()), 1048576.0);
    for (;;) {
        double cells = 1.0;
        for (std::size_t c = 0; c < d; ++c) cells *= std::floor((box.upper[c] - box.lower[c]) / cell_) + 1.0;
        if (cells <= cell_budget) break;
        cell_ *= 2.0;
    }
    origin_ = box.lower;
    shape_.resize(d);
    for (std::size_t c = 0; c < d; ++c)
        shape_[c] = static_cast<std::size_t>(std::floor((box.upper[c] - box.lower[c]) / cell_)) + 1;
    const std::size_t total = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());

    std::vector<std::size_t> cell_of(sample.size());
    cell_start_.assign(total + 1, 0);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        auto x = sample[i];
        std::size_t id = 0;
        for (std::size_t c = 0; c < d; ++c) {
            auto k = static_cast<std::size_t>(std::floor((x[c] - origin_[c]) / cell_));
            id = id * shape_[c] + std::min(k, shape_[c] - 1);
        }
        cell_of[i] = id;
        ++cell_start_[id + 1];
    }
    std::partial_sum(cell_start_.begin(), cell_start_.end(), cell_start_.begin());
    cell_items_.resize(sample.size());
    std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < sample.size(); ++i) cell_items_[fill[cell_of[i]]++] = i;
}

WedgeScan SampleIndex::scan(const Wedge& wedge) const {
    if (linear_) return scan_wedge(*sample_, wedge);
    check_dims(*sample_, wedge);
    const std::size_t d = shape_.size();
    const Box b = wedge.bounds();
    std::vector<std::size_t> lo(d), hi(d);
    for (std::size_t c = 0; c < d; ++c) {
        const double a = std::floor((b.lower[c] - origin_[c]) / cell_);
        const double z = std::floor((b.upper[c] - origin_[c]) / cell_);
        if (z < 0.0 || a > static_cast<double>(shape_[c] - 1)) return {};
        lo[c] = a < 0.0 ? 0 : static_cast<std::size_t>(a);
        hi[c] = std::min(static_cast<std::size_t>(z), shape_[c] - 1);
    }

    std::vector<std::pair<double, std::size_t>> hits;
    std::vector<std::size_t> idx = lo;
    for (;;) {
        std::size_t id = 0;
        for (std::size_t c = 0; c < d; ++c) id = id * shape_[c] + idx[c];
        for (std::size_t p = cell_start_[id]; p < cell_start_[id + 1]; ++p) {
            const std::size_t i = cell_items_[p];
            auto x = (*sample_)[i];
            if (wedge_contains(wedge, x))
                hits.emplace_back(signed_projected_distance(x, wedge.vertex(), wedge.direction()), i);
        }
        bool done = true;
        for (std::size_t c = d; c-- > 0;) {
            if (idx[c] < hi[c]) {
                ++idx[c];
                done = false;
                break;
            }
            idx[c] = lo[c];
        }
        if (done) break;
    }
    return finish_scan(hits);
}

WedgeScales default_scales(const ScaleParams& p) {
    if (p.n < 3) throw ParameterError("scale selection needs n >= 3");
    if (p.d < 1) throw ParameterError("dimension must be at least 1");
    if (!(p.C1 > 0.0) || !(p.C2 > 0.0)) throw ParameterError("C1 and C2 must be positive");
    if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) throw ParameterError("epsilon must lie in (0, 1)");
    const double d = static_cast<double>(p.d);
    const double logn = std::log(static_cast<double>(p.n));
    const double base = std::pow(logn / static_cast<double>(p.n), 1.0 / (d + 4.0));
    const double length = p.C1 * std::pow(logn, (d - 1.0) / (d + 4.0)) * base;
    const double angle = p.C2 / (2.0 * logn);
    if (angle >= std::numbers::pi / 2) throw ParameterError("C2 too large for this n: wedge angle reaches pi/2");
    return {length, angle};
}

std::vector<Point> planar_directions(std::size_t count, double start_angle) {
    if (count == 0) throw ParameterError("direction count must be positive");
    std::vector<Point> dirs;
    dirs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double a = start_angle + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
        dirs.push_back({std::cos(a), std::sin(a)});
    }
    return dirs;
}

std::vector<Point> direction_set(std::size_t d, double angle, double epsilon, std::uint64_t seed,
                                 double start_angle) {
    if (!(angle > 0.0 && angle < std::numbers::pi / 2)) throw ParameterError("angle must lie in (0, pi/2)");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0, 1)");
    if (d == 0) throw ParameterError("dimension must be at least 1");
    if (d == 1) return {{1.0}, {-1.0}};
    if (d == 2) {
        const double m = std::floor(std::numbers::pi / angle + 1e-2);
        if (m < 1.0) throw ParameterError("angle too large: no direction fits");
        return planar_directions(static_cast<std::size_t>(m), start_angle);
    }

    const double separation =
        (2.0 + epsilon) * std::atan(std::sqrt(static_cast<double>(d - 1)) * std::tan(angle));
    const auto candidates = sphere_candidates(d, 4096 * (d - 1), seed);

    std::vector<Point> accepted;
    Point first(d, 0.0);
    first[0] = 1.0;
    accepted.push_back(first);
    std::vector<double> nearest(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) nearest[c] = angle_between(candidates[c], first);

    for (;;) {
        const auto best = std::max_element(nearest.begin(), nearest.end());
        if (best == nearest.end() || *best < separation) break;
        const Point& pick = candidates[static_cast<std::size_t>(best - nearest.begin())];
        accepted.push_back(pick);
        for (std::size_t c = 0; c < candidates.size(); ++c)
            nearest[c] = std::min(nearest[c], angle_between(candidates[c], pick));
    }
    return accepted;
}

Grid::Grid(Point lower, Point upper, double mesh) : lower_(std::move(lower)), upper_(std::move(upper)), mesh_(mesh) {
    if (!(mesh > 0.0) || !std::isfinite(mesh)) throw InvalidInput("grid mesh must be positive");
    validate_box({lower_, upper_});
    const std::size_t d = lower_.size();
    shape_.resize(d);
    std::size_t total = 1;
    for (std::size_t c = 0; c < d; ++c) {
        shape_[c] = static_cast<std::size_t>(std::floor((upper_[c] - lower_[c]) / mesh_ + 1e-9)) + 1;
        total *= shape_[c];
    }
    if (total > 50'000'000) throw ParameterError("grid has too many vertices");
    vertices_.reserve(total);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t v = 0; v < total; ++v) {
        Point p(d);
        for (std::size_t c = 0; c < d; ++c) p[c] = lower_[c] + static_cast<double>(idx[c]) * mesh_;
        vertices_.push_back(std::move(p));
        for (std::size_t c = d; c-- > 0;) {
            if (++idx[c] < shape_[c]) break;
            idx[c] = 0;
        }
    }
}

Grid build_grid(const Point& lower, const Point& upper, double mesh) { return Grid(lower, upper, mesh); }

}  // namespace modescope
