#include "modescope/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "modescope/errors.hpp"

namespace modescope {

namespace {

// x^d by repeated multiplication; shared by every statistic so that equal
// inputs produce bit-identical ratios.
double power_d(double x, std::size_t d) {
    double r = x;
    for (std::size_t i = 1; i < d; ++i) r *= x;
    return r;
}

void check_dimension(std::size_t d) {
    if (d == 0) throw InvalidInput("dimension must be at least 1");
}

}  // namespace

double gamma_penalty(double delta) {
    if (!(delta > 0.0 && delta < std::numbers::e))
        throw InvalidInput("Gamma penalty needs 0 < delta < e");
    return std::sqrt(2.0 * std::log(std::numbers::e / delta));
}

StatisticValue statistic_wedge(std::span<const double> distances, std::size_t d) {
    check_dimension(d);
    const std::size_t N = distances.size();
    if (N < 2) throw InsufficientData("wedge statistic needs at least two observations");
    const double top = power_d(distances[N - 1], d);
    double sum = 0.0;
    for (std::size_t l = 0; l + 1 < N; ++l) sum += beta(power_d(distances[l], d) / top);
    return {sum, N - 1};
}

StatisticValue statistic_wedge(const WedgeScan& scan, std::size_t d) { return statistic_wedge(scan.distances, d); }

StatisticValue statistic_subsection(std::span<const double> distances, SubsectionIndex idx, std::size_t d) {
    check_dimension(d);
    const std::size_t N = distances.size();
    if (!(idx.j < idx.k && idx.k <= N && idx.k - idx.j > 1))
        throw InvalidInput("subsection requires 0 <= j < k <= N and k - j > 1");
    const double low = idx.j == 0 ? 0.0 : power_d(distances[idx.j - 1], d);
    const double high = power_d(distances[idx.k - 1], d);
    const double width = high - low;
    if (!(width > 0.0)) throw DegenerateScale("subsection endpoints have equal projected distance");
    double sum = 0.0;
    for (std::size_t l = idx.j + 1; l < idx.k; ++l) sum += beta((power_d(distances[l - 1], d) - low) / width);
    return {sum, idx.k - idx.j - 1};
}

StatisticValue statistic_subsection(const WedgeScan& scan, SubsectionIndex idx, std::size_t d) {
    return statistic_subsection(scan.distances, idx, d);
}

double normalize(const StatisticValue& stat, std::size_t n, std::size_t span) {
    if (span < 2) throw InvalidInput("normalisation needs span >= 2");
    if (n < 3) throw InvalidInput("normalisation needs n >= 3");
    const double penalty = gamma_penalty(static_cast<double>(span) / static_cast<double>(n - 1));
    return std::sqrt(3.0 / static_cast<double>(span - 1)) * std::abs(stat.value) - penalty;
}

double normalize_one_sided(const StatisticValue& stat, std::size_t n, std::size_t span) {
    if (span < 2) throw InvalidInput("normalisation needs span >= 2");
    if (n < 3) throw InvalidInput("normalisation needs n >= 3");
    const double penalty = gamma_penalty(static_cast<double>(span) / static_cast<double>(n - 1));
    return std::sqrt(3.0 / static_cast<double>(span - 1)) * (-stat.value) - penalty;
}

std::vector<SubsectionIndex> subsection_pairs(std::size_t N, std::size_t full_up_to) {
    std::vector<SubsectionIndex> pairs;
    if (N < 2) return pairs;
    if (N <= full_up_to) {
        pairs.reserve(N * (N - 1) / 2);
        for (std::size_t j = 0; j + 2 <= N; ++j)
            for (std::size_t k = j + 2; k <= N; ++k) pairs.push_back({j, k});
        return pairs;
    }
    std::set<std::pair<std::size_t, std::size_t>> chosen;
    for (std::size_t s = N;; s = (s + 1) / 2) {
        for (std::size_t j = 0; j + s <= N; j += s) chosen.emplace(j, j + s);
        chosen.emplace(N - s, N);
        if (s <= 2) break;
    }
    pairs.reserve(chosen.size());
    for (const auto& [j, k] : chosen) pairs.push_back({j, k});
    return pairs;
}

}  // namespace modescope
