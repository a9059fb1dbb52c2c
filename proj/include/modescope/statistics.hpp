#pragma once

// Spacing statistics on wedges and wedge subsections.

#include <cstddef>
#include <span>
#include <vector>

#include "modescope/geometry.hpp"

namespace modescope {

/// (2z - 1) on the open unit interval, 0 elsewhere.
inline double beta(double z) noexcept { return (z > 0.0 && z < 1.0) ? 2.0 * z - 1.0 : 0.0; }

/// Multiscale penalty sqrt(2 log(e / delta)), defined for 0 < delta < e.
double gamma_penalty(double delta);

/// Subsection between the j-th and k-th ordered projected distances;
/// index 0 is the vertex itself (distance 0).
struct SubsectionIndex {
    std::size_t j = 0;
    std::size_t k = 0;

    std::size_t span() const noexcept { return k - j; }
    friend bool operator==(const SubsectionIndex&, const SubsectionIndex&) = default;
};

struct StatisticValue {
    double value = 0.0;
    std::size_t count = 0;  // number of summands
};

/// Sum over j < N of beta((D_j / D_N)^d) for sorted distances D_1..D_N.
StatisticValue statistic_wedge(std::span<const double> distances, std::size_t d);
StatisticValue statistic_wedge(const WedgeScan& scan, std::size_t d);

/// Sum over j < l < k of beta((D_l^d - D_j^d) / (D_k^d - D_j^d)), D_0 = 0.
/// Throws DegenerateScale when D_j == D_k.
StatisticValue statistic_subsection(std::span<const double> distances, SubsectionIndex idx, std::size_t d);
StatisticValue statistic_subsection(const WedgeScan& scan, SubsectionIndex idx, std::size_t d);

/// sqrt(3 / (span - 1)) |T| - Gamma(span / (n - 1)).
double normalize(const StatisticValue& stat, std::size_t n, std::size_t span);
/// sqrt(3 / (span - 1)) (-T) - Gamma(span / (n - 1)); large when T is very negative.
double normalize_one_sided(const StatisticValue& stat, std::size_t n, std::size_t span);

/// Admissible subsections (k - j > 1) of a wedge holding N points. Every pair
/// is returned when N <= full_up_to. Above that, spans follow the ladder
/// N, ceil(N/2), ceil(N/4), ..., 2; for each span s the subsections start at
/// j = 0, s, 2s, ... and one more ends exactly at N.
std::vector<SubsectionIndex> subsection_pairs(std::size_t N, std::size_t full_up_to = 200);

}  // namespace modescope
