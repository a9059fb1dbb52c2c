#include "modescope/nullsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "modescope/errors.hpp"
#include "modescope/parallel.hpp"

namespace modescope {

namespace {

// Subsections narrower than this are summed directly; wider ones use the
// prefix-sum closed form.
constexpr std::size_t kDirectSpan = 32;

void check_alpha(double alpha, bool allow_one) {
    if (!(alpha > 0.0 && (alpha < 1.0 || (allow_one && alpha == 1.0))))
        throw InvalidInput("alpha must lie in (0, 1)");
}

// Per-config tables shared read-only by all replicates.
struct NullTables {
    std::size_t max_count = 0;
    std::vector<double> scale;    // sqrt(3 / (span - 1)) by span
    std::vector<double> penalty;  // Gamma(span / (n - 1)) by span
    std::map<std::size_t, std::vector<SubsectionIndex>> ladders;
};

NullTables make_tables(const NullConfig& config) {
    NullTables t;
    for (std::size_t c : config.counts) t.max_count = std::max(t.max_count, c);
    t.scale.assign(t.max_count + 1, 0.0);
    t.penalty.assign(t.max_count + 1, 0.0);
    for (std::size_t s = 2; s <= t.max_count; ++s) {
        t.scale[s] = std::sqrt(3.0 / static_cast<double>(s - 1));
        t.penalty[s] = gamma_penalty(static_cast<double>(s) / static_cast<double>(config.n - 1));
    }
    if (config.flavor == NullFlavor::multiscale_subsections) {
        for (std::size_t c : config.counts)
            if (c > config.full_scales_up_to && !t.ladders.contains(c))
                t.ladders.emplace(c, subsection_pairs(c, config.full_scales_up_to));
    }
    return t;
}

double replicate_maximum(const NullConfig& config, const NullTables& tables, Rng& rng) {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> u;
    std::vector<double> prefix;
    for (std::size_t N : config.counts) {
        if (N < 2) continue;
        u.resize(N + 1);
        u[0] = 0.0;
        for (std::size_t l = 1; l < N; ++l) u[l] = rng.uniform();
        std::sort(u.begin() + 1, u.begin() + static_cast<std::ptrdiff_t>(N));
        u[N] = 1.0;

        switch (config.flavor) {
            case NullFlavor::two_sided_wedge: {
                const double s = wedge_null_statistic(std::span(u).subspan(1, N - 1));
                best = std::max(best, tables.scale[N] * std::abs(s) - tables.penalty[N]);
                break;
            }
            case NullFlavor::one_sided_wedge: {
                const double s = wedge_null_statistic(std::span(u).subspan(1, N - 1));
                best = std::max(best, tables.scale[N] * (-s) - tables.penalty[N]);
                break;
            }
            case NullFlavor::multiscale_subsections: {
                prefix.resize(N + 2);
                prefix[0] = 0.0;
                for (std::size_t i = 0; i <= N; ++i) prefix[i + 1] = prefix[i] + u[i];
                auto visit = [&](SubsectionIndex idx) {
                    const double s = subsection_null_statistic(u, idx, prefix);
                    const std::size_t span = idx.k - idx.j;
                    best = std::max(best, tables.scale[span] * std::abs(s) - tables.penalty[span]);
                };
                if (N <= config.full_scales_up_to) {
                    for (std::size_t j = 0; j + 2 <= N; ++j)
                        for (std::size_t k = j + 2; k <= N; ++k) visit({j, k});
                } else {
                    for (const auto& idx : tables.ladders.at(N)) visit(idx);
                }
                break;
            }
        }
    }
    return best;
}

}  // namespace

std::string to_string(NullFlavor flavor) {
    switch (flavor) {
        case NullFlavor::two_sided_wedge: return "two_sided_wedge";
        case NullFlavor::one_sided_wedge: return "one_sided_wedge";
        case NullFlavor::multiscale_subsections: return "multiscale_subsections";
    }
    return "unknown";
}

NullFlavor parse_flavor(const std::string& name) {
    if (name == "two_sided_wedge") return NullFlavor::two_sided_wedge;
    if (name == "one_sided_wedge") return NullFlavor::one_sided_wedge;
    if (name == "multiscale_subsections") return NullFlavor::multiscale_subsections;
    throw InvalidInput("unknown null flavor '" + name + "'");
}

std::string to_string(QuantileSource source) {
    return source == QuantileSource::simulated ? "simulated" : "calibrated";
}

double empirical_quantile(std::span<const double> values, double alpha) {
    if (values.empty()) throw InsufficientData("quantile of an empty replicate set");
    check_alpha(alpha, true);
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = std::ceil((1.0 - alpha) * static_cast<double>(sorted.size()) - 1e-9);
    const auto r = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(sorted.size())));
    return sorted[r - 1];
}

double wedge_null_statistic(std::span<const double> sorted_interior) {
    double sum = 0.0;
    for (double u : sorted_interior) sum += beta(u);
    return sum;
}

double subsection_null_statistic(std::span<const double> with_ends, SubsectionIndex idx,
                                 std::span<const double> prefix) {
    const double low = with_ends[idx.j];
    const double width = with_ends[idx.k] - low;
    const std::size_t m = idx.k - idx.j - 1;
    if (prefix.empty() || m <= kDirectSpan || (idx.j == 0 && idx.k + 1 == with_ends.size())) {
        double sum = 0.0;
        for (std::size_t l = idx.j + 1; l < idx.k; ++l) sum += beta((with_ends[l] - low) / width);
        return sum;
    }
    // Interior ratios of continuous uniforms lie strictly inside (0, 1).
    const double interior = prefix[idx.k] - prefix[idx.j + 1];
    return 2.0 * (interior - static_cast<double>(m) * low) / width - static_cast<double>(m);
}

std::vector<double> simulate_replicate_maxima(const NullConfig& config, unsigned workers) {
    check_alpha(config.alpha, false);
    if (config.reps == 0) throw InvalidInput("reps must be positive");
    if (config.n < 3) throw InvalidInput("null simulation needs n >= 3");
    bool any = false;
    for (std::size_t c : config.counts) {
        if (c > config.n) throw InvalidInput("wedge count exceeds the sample size");
        any = any || c >= 2;
    }
    if (!any) throw InsufficientData("no wedge holds two or more observations");

    const NullTables tables = make_tables(config);
    std::vector<double> maxima(config.reps);
    parallel_for(config.reps, workers, [&](std::size_t r) {
        Rng rng = make_stream(config.seed, r);
        maxima[r] = replicate_maximum(config, tables, rng);
    });
    return maxima;
}

NullQuantile simulate_null(const NullConfig& config, unsigned workers, bool retain_replicates) {
    auto maxima = simulate_replicate_maxima(config, workers);
    NullQuantile q;
    q.kappa = empirical_quantile(maxima, config.alpha);
    q.source = QuantileSource::simulated;
    q.flavor = config.flavor;
    q.n = config.n;
    q.alpha = config.alpha;
    q.reps = config.reps;
    q.seed = config.seed;
    q.full_scales_up_to = config.full_scales_up_to;
    q.counts = config.counts;
    if (retain_replicates) q.replicate_values = std::move(maxima);
    return q;
}

Sample sample_uniform_box(const Box& box, std::size_t n, Rng& rng) {
    validate_box(box);
    const std::size_t d = box.dim();
    std::vector<double> coords(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) coords[i * d + c] = rng.uniform(box.lower[c], box.upper[c]);
    return Sample(d, std::move(coords));
}

NullQuantile calibrate(const CriticalValueFn& critical, const CalibrationConfig& config, unsigned workers,
                       bool retain_replicates) {
    validate_box(config.reference_box);
    check_alpha(config.alpha, true);
    if (config.reps == 0) throw InvalidInput("reps must be positive");
    if (config.n < 3) throw InvalidInput("calibration needs n >= 3");

    std::vector<double> values(config.reps);
    parallel_for(config.reps, workers, [&](std::size_t r) {
        Rng rng = make_stream(config.seed, r);
        values[r] = critical(sample_uniform_box(config.reference_box, config.n, rng));
    });

    NullQuantile q;
    q.kappa = empirical_quantile(values, config.alpha);
    q.source = QuantileSource::calibrated;
    q.flavor = NullFlavor::one_sided_wedge;
    q.n = config.n;
    q.alpha = config.alpha;
    q.reps = config.reps;
    q.seed = config.seed;
    q.reference_box = config.reference_box;
    if (retain_replicates) q.replicate_values = std::move(values);
    return q;
}

}  // namespace modescope
