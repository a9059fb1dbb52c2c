#pragma once

// Wedges, direction sets, scales and grids.
//
// A wedge with vertex x0, unit direction e, angle phi and length l is the set
//
//     { x : 0 < <x - x0, e> <= l  and  |<x - x0, e_i>| <= tan(phi) <x - x0, e> }
//
// where e_1..e_{d-1} is a fixed orthonormal basis of the complement of e. The
// vertex itself is excluded; the far face and the side faces are included.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace modescope {

using Point = std::vector<double>;

/// n points in R^d, stored row-major. Row order is the sample index.
class Sample {
public:
    Sample() = default;
    Sample(std::size_t dim, std::vector<double> coords);

    static Sample from_points(const std::vector<Point>& points);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    bool empty() const noexcept { return coords_.empty(); }

    std::span<const double> operator[](std::size_t i) const {
        return {coords_.data() + i * dim_, dim_};
    }
    std::span<const double> coords() const noexcept { return coords_; }

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
};

/// Axis-aligned box [lower, upper].
struct Box {
    Point lower;
    Point upper;

    std::size_t dim() const noexcept { return lower.size(); }
    Point center() const;
    double volume() const;
};

/// Throws InvalidInput unless lower < upper componentwise and all finite.
void validate_box(const Box& box);
Box bounding_box(const Sample& sample);
Box expand(const Box& box, double margin);

class Wedge {
public:
    /// Complement basis chosen by orthonormal_complement(direction).
    Wedge(Point vertex, Point direction, double angle, double length);
    /// Explicit complement basis; validated for orthonormality within 1e-12.
    Wedge(Point vertex, Point direction, std::vector<Point> complement, double angle, double length);

    std::size_t dim() const noexcept { return vertex_.size(); }
    const Point& vertex() const noexcept { return vertex_; }
    const Point& direction() const noexcept { return direction_; }
    const std::vector<Point>& complement() const noexcept { return complement_; }
    double angle() const noexcept { return angle_; }
    double length() const noexcept { return length_; }
    double tan_angle() const noexcept { return tan_angle_; }

    /// Largest Euclidean distance from the vertex to a point of the wedge.
    double reach() const;
    /// Tight axis-aligned bounding box of the wedge.
    Box bounds() const;

private:
    Point vertex_;
    Point direction_;
    std::vector<Point> complement_;
    double angle_;
    double length_;
    double tan_angle_;
};

/// Observations inside one wedge, sorted by projected distance (ties by
/// sample index).
struct WedgeScan {
    std::vector<std::size_t> members;
    std::vector<double> distances;

    std::size_t count() const noexcept { return distances.size(); }
};

/// d-1 unit vectors completing e to an orthonormal basis. Deterministic: the
/// canonical axis most aligned with e is dropped and the remaining axes are
/// Gram-Schmidt orthogonalised against e in index order.
std::vector<Point> orthonormal_complement(std::span<const double> e);

double signed_projected_distance(std::span<const double> x, std::span<const double> x0,
                                 std::span<const double> e);

bool wedge_contains(const Wedge& wedge, std::span<const double> x);

WedgeScan scan_wedge(const Sample& sample, const Wedge& wedge);

/// Bucket grid over a sample so that wedge scans only visit nearby points.
/// Scans through the index return exactly what the linear scan_wedge returns.
/// The index keeps a reference to the sample, which must outlive it.
class SampleIndex {
public:
    SampleIndex(const Sample& sample, double cell_size);

    const Sample& sample() const noexcept { return *sample_; }
    WedgeScan scan(const Wedge& wedge) const;

private:
    const Sample* sample_;
    double cell_ = 0.0;
    Point origin_;
    std::vector<std::size_t> shape_;
    std::vector<std::size_t> cell_start_;  // CSR layout over cells
    std::vector<std::size_t> cell_items_;
    bool linear_ = false;
};

struct ScaleParams {
    double C1 = 2.0;
    double C2 = 9.65;
    double epsilon = 0.01;
    std::size_t n = 0;
    std::size_t d = 2;
};

struct WedgeScales {
    double length;
    double angle;
};

/// length = C1 (log n)^{(d-1)/(d+4)} (log n / n)^{1/(d+4)}, angle = C2 / (2 log n).
WedgeScales default_scales(const ScaleParams& p);

/// Central directions for wedges of the given angle.
///   d = 1: {+1, -1}.
///   d = 2: M = floor(pi / angle + 1e-2) equally spaced directions starting
///          at `start_angle` (radians from the first axis).
///   d >= 3: greedy farthest-point packing of a seeded Halton candidate set
///          with pairwise angle >= (2 + epsilon) atan(sqrt(d-1) tan(angle)),
///          starting from the first canonical axis.
std::vector<Point> direction_set(std::size_t d, double angle, double epsilon = 0.01,
                                 std::uint64_t seed = 0, double start_angle = 0.0);

/// M equally spaced directions in the plane.
std::vector<Point> planar_directions(std::size_t count, double start_angle = 0.0);

/// Vertices lower + i * mesh (componentwise) up to upper, first coordinate
/// varying slowest.
class Grid {
public:
    Grid(Point lower, Point upper, double mesh);

    const Point& lower() const noexcept { return lower_; }
    const Point& upper() const noexcept { return upper_; }
    double mesh() const noexcept { return mesh_; }
    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    const std::vector<Point>& vertices() const noexcept { return vertices_; }
    std::size_t size() const noexcept { return vertices_.size(); }
    Box box() const { return {lower_, upper_}; }

private:
    Point lower_;
    Point upper_;
    double mesh_;
    std::vector<std::size_t> shape_;
    std::vector<Point> vertices_;
};

Grid build_grid(const Point& lower, const Point& upper, double mesh);

}  // namespace modescope
