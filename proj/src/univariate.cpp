#include "modescope/univariate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modescope/errors.hpp"
#include "modescope/nullsim.hpp"
#include "modescope/parallel.hpp"
#include "modescope/rng.hpp"
#include "modescope/statistics.hpp"

namespace modescope {

namespace {

struct ScaleTable {
    std::vector<double> scale;    // sqrt(3 / (s - 1)) by span s
    std::vector<double> penalty;  // Gamma(s / (n - 1))
};

ScaleTable make_table(std::size_t n) {
    ScaleTable t{std::vector<double>(n + 1, 0.0), std::vector<double>(n + 1, 0.0)};
    for (std::size_t s = 2; s <= n; ++s) {
        t.scale[s] = std::sqrt(3.0 / static_cast<double>(s - 1));
        t.penalty[s] = gamma_penalty(static_cast<double>(s) / static_cast<double>(n - 1));
    }
    return t;
}

// u holds U_(1..n) at u[1..n]; prefix[i] = u[1] + ... + u[i].
void draw_sorted(std::size_t n, Rng& rng, std::vector<double>& u, std::vector<double>& prefix) {
    u.assign(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) u[i] = rng.uniform();
    std::sort(u.begin() + 1, u.end());
    prefix.assign(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) prefix[i] = prefix[i - 1] + u[i];
}

// Interior ratios of continuous uniforms lie in (0, 1), where beta is linear.
double uniform_T(const std::vector<double>& u, const std::vector<double>& prefix, std::size_t j, std::size_t k) {
    const double m = static_cast<double>(k - j - 1);
    return 2.0 * (prefix[k - 1] - prefix[j] - m * u[j]) / (u[k] - u[j]) - m;
}

double uniform_maximum(const std::vector<double>& u, const std::vector<double>& prefix, const ScaleTable& t,
                       std::size_t n) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j + 2 <= n; ++j)
        for (std::size_t k = j + 2; k <= n; ++k)
            best = std::max(best, t.scale[k - j] * std::abs(uniform_T(u, prefix, j, k)) - t.penalty[k - j]);
    return best;
}

void check_n(std::size_t n) {
    if (n < 3) throw InvalidInput("univariate test needs n >= 3");
}

}  // namespace

double spacing_statistic(std::span<const double> sorted, std::size_t j, std::size_t k) {
    if (!(j >= 1 && j < k && k <= sorted.size() && k - j > 1))
        throw InvalidInput("spacing statistic requires 1 <= j < k <= n and k - j > 1");
    const double low = sorted[j - 1];
    const double width = sorted[k - 1] - low;
    if (!(width > 0.0)) throw DegenerateScale("interval endpoints are tied");
    double sum = 0.0;
    for (std::size_t i = j + 1; i < k; ++i) sum += beta((sorted[i - 1] - low) / width);
    return sum;
}

double multiscale_statistic(std::span<const double> sample) {
    const std::size_t n = sample.size();
    check_n(n);
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const ScaleTable t = make_table(n);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j + 2 <= n; ++j) {
        for (std::size_t k = j + 2; k <= n; ++k) {
            if (!(x[k - 1] > x[j - 1])) continue;
            best = std::max(best, t.scale[k - j] * std::abs(spacing_statistic(x, j, k)) - t.penalty[k - j]);
        }
    }
    return best;
}

std::vector<double> univariate_replicate_maxima(std::size_t n, std::size_t reps, std::uint64_t seed,
                                                unsigned workers) {
    check_n(n);
    if (reps == 0) throw InvalidInput("reps must be positive");
    const ScaleTable t = make_table(n);
    std::vector<double> out(reps);
    parallel_for(reps, workers, [&](std::size_t r) {
        Rng rng = make_stream(seed, r);
        std::vector<double> u, prefix;
        draw_sorted(n, rng, u, prefix);
        out[r] = uniform_maximum(u, prefix, t, n);
    });
    return out;
}

double univariate_quantile(std::size_t n, double alpha, std::size_t reps, std::uint64_t seed, unsigned workers) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
    return empirical_quantile(univariate_replicate_maxima(n, reps, seed, workers), alpha);
}

std::string to_string(IntervalVerdict v) {
    switch (v) {
        case IntervalVerdict::not_increasing: return "not_increasing";
        case IntervalVerdict::not_decreasing: return "not_decreasing";
        case IntervalVerdict::none: return "none";
    }
    return "unknown";
}

std::vector<IntervalDecision> univariate_test(std::span<const double> sample, double kappa) {
    const std::size_t n = sample.size();
    check_n(n);
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    std::vector<IntervalDecision> out;
    for (std::size_t j = 1; j + 2 <= n; ++j) {
        for (std::size_t k = j + 2; k <= n; ++k) {
            if (!(x[k - 1] > x[j - 1])) continue;
            IntervalDecision dec{j, k, spacing_statistic(x, j, k), 0.0, IntervalVerdict::none};
            const double s = static_cast<double>(k - j);
            dec.c = std::sqrt((s - 1.0) / 3.0) * (gamma_penalty(s / static_cast<double>(n - 1)) + kappa);
            if (dec.T < -dec.c) dec.verdict = IntervalVerdict::not_increasing;
            else if (dec.T > dec.c) dec.verdict = IntervalVerdict::not_decreasing;
            out.push_back(dec);
        }
    }
    return out;
}

std::vector<PairedMaxima> paired_block_maxima(const std::vector<std::size_t>& counts, std::size_t n,
                                              std::size_t reps, std::uint64_t seed, unsigned workers) {
    check_n(n);
    if (reps == 0) throw InvalidInput("reps must be positive");
    std::size_t total = 0;
    bool any = false;
    for (std::size_t c : counts) {
        total += c;
        any = any || c >= 2;
    }
    if (total + 1 > n) throw InvalidInput("block counts must sum to at most n - 1");
    if (!any) throw InsufficientData("no block holds two or more observations");
    const ScaleTable t = make_table(n);
    std::vector<PairedMaxima> out(reps);
    parallel_for(reps, workers, [&](std::size_t r) {
        Rng rng = make_stream(seed, r);
        std::vector<double> u, prefix;
        draw_sorted(n, rng, u, prefix);
        double blocks = -std::numeric_limits<double>::infinity();
        std::size_t j = 1;
        for (std::size_t N : counts) {
            if (N >= 2) blocks = std::max(blocks, t.scale[N] * std::abs(uniform_T(u, prefix, j, j + N)) - t.penalty[N]);
            j += N;
        }
        out[r] = {uniform_maximum(u, prefix, t, n), blocks};
    });
    return out;
}

}  // namespace modescope
