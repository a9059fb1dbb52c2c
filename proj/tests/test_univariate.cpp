#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "modescope/errors.hpp"
#include "modescope/nullsim.hpp"
#include "modescope/rng.hpp"
#include "modescope/statistics.hpp"
#include "modescope/univariate.hpp"

using namespace modescope;
using Catch::Approx;

TEST_CASE("spacing statistic examples") {
    CHECK(spacing_statistic(std::vector<double>{0.0, 0.25, 1.0}, 1, 3) == -0.5);
    std::vector<double> even;
    for (int i = 0; i <= 20; ++i) even.push_back(0.1 * i);
    CHECK(spacing_statistic(even, 1, 21) == Approx(0.0).margin(1e-12));
    CHECK(spacing_statistic(even, 3, 12) == Approx(0.0).margin(1e-12));
    CHECK_THROWS_AS(spacing_statistic(std::vector<double>{1.0, 1.0, 1.0}, 1, 3), DegenerateScale);
    CHECK_THROWS_AS(spacing_statistic(even, 2, 3), InvalidInput);
    CHECK_THROWS_AS(spacing_statistic(even, 0, 3), InvalidInput);
    CHECK_THROWS_AS(spacing_statistic(even, 1, 22), InvalidInput);
}

TEST_CASE("spacing statistic is affine invariant") {
    Rng rng(1);
    std::vector<double> x(50);
    for (auto& v : x) v = rng.uniform();
    std::sort(x.begin(), x.end());
    std::vector<double> y;
    for (double v : x) y.push_back(3.5 * v - 7.0);
    for (std::size_t j = 1; j <= 10; ++j)
        for (std::size_t k = j + 2; k <= 50; k += 7)
            CHECK(spacing_statistic(y, j, k) == Approx(spacing_statistic(x, j, k)).margin(1e-12));
}

TEST_CASE("multiscale statistic") {
    const std::vector<double> three{0.3, 0.0, 1.0};
    CHECK(multiscale_statistic(three) == Approx(std::sqrt(3.0) * std::abs(beta(0.3)) - std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(multiscale_statistic(std::vector<double>{0.0, 1.0}), InvalidInput);

    Rng rng(2);
    std::vector<double> x(80);
    for (auto& v : x) v = rng.uniform();
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    const double whole = std::sqrt(3.0 / 78.0) * std::abs(spacing_statistic(s, 1, 80)) - gamma_penalty(79.0 / 79.0);
    CHECK(multiscale_statistic(x) >= whole);
}

TEST_CASE("simulated maxima match the direct statistic on the same draws") {
    const std::size_t n = 60;
    const auto maxima = univariate_replicate_maxima(n, 20, 31);
    for (std::size_t r = 0; r < 20; ++r) {
        Rng rng = make_stream(31, r);
        std::vector<double> u(n);
        for (auto& v : u) v = rng.uniform();
        CHECK(maxima[r] == Approx(multiscale_statistic(u)).margin(1e-9));
    }
}

TEST_CASE("local statistics have mean zero under uniformity") {
    const std::size_t reps = 20000, n = 30;
    double sum = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        Rng rng = make_stream(4, r);
        std::vector<double> u(n);
        for (auto& v : u) v = rng.uniform();
        std::sort(u.begin(), u.end());
        const double t = spacing_statistic(u, 5, 25);
        sum += t;
        sq += t * t;
    }
    const double mean = sum / reps, var = sq / reps - mean * mean;
    CHECK(std::abs(mean) <= 3.0 * std::sqrt(var / reps));
}

TEST_CASE("univariate quantile behaviour") {
    const auto v = univariate_replicate_maxima(100, 4000, 9);
    double last = 1e300;
    for (double a : {0.01, 0.05, 0.1, 0.5}) {
        const double k = empirical_quantile(v, a);
        CHECK(k <= last);
        last = k;
    }
    CHECK(univariate_quantile(100, 0.05, 500, 3, 1) == univariate_quantile(100, 0.05, 500, 3, 8));

}

namespace {

struct SmallSizeQuantiles {
    double k50, k100, k200;
};

const SmallSizeQuantiles& small_size_quantiles() {
    static const SmallSizeQuantiles q{univariate_quantile(50, 0.05, 10000, 1), univariate_quantile(100, 0.05, 10000, 2),
                                      univariate_quantile(200, 0.05, 10000, 3)};
    return q;
}

}  // namespace

TEST_CASE("univariate quantiles approach their bound from below") {
    const auto& q = small_size_quantiles();
    CHECK(std::isfinite(q.k50));
    CHECK(q.k100 > q.k50);
    CHECK(q.k200 > q.k100);
    CHECK(q.k200 - q.k100 < q.k100 - q.k50);
    CHECK(q.k200 < 3.0);
}

// Claimed: nonincreasing in n over {50, 100, 200}. Independent simulation
// gives about 1.55, 1.77, 1.87, so the claim is kept as a known failure.
TEST_CASE("univariate quantiles are nonincreasing in n", "[!shouldfail]") {
    const auto& q = small_size_quantiles();
    // Standard error of the 95% point is about 0.02 at 10^4 replicates.
    CHECK(q.k100 <= q.k50 + 0.06);
    CHECK(q.k200 <= q.k100 + 0.06);
}

TEST_CASE("interval decisions follow the thresholds") {
    Rng rng(5);
    std::vector<double> x(40);
    for (auto& v : x) v = std::sqrt(rng.uniform());  // increasing density on (0, 1)
    const auto dec = univariate_test(x, -0.5);
    CHECK(dec.size() == 38 * 39 / 2);
    std::size_t up = 0;
    for (const auto& d : dec) {
        const double s = static_cast<double>(d.k - d.j);
        CHECK(d.c == Approx(std::sqrt((s - 1.0) / 3.0) * (gamma_penalty(s / 39.0) - 0.5)));
        if (d.verdict == IntervalVerdict::not_increasing) CHECK(d.T < -d.c);
        if (d.verdict == IntervalVerdict::not_decreasing) {
            CHECK(d.T > d.c);
            ++up;
        }
        if (d.verdict == IntervalVerdict::none) CHECK(std::abs(d.T) <= std::abs(d.c) + 1e-12);
    }
    CHECK(up > 0);
}

TEST_CASE("block maxima never exceed the multiscale maximum") {
    const auto pairs = paired_block_maxima({20, 50, 3, 90, 1, 35}, 200, 2000, 6);
    for (const auto& p : pairs) CHECK(p.blocks <= p.univariate);
    CHECK_THROWS_AS(paired_block_maxima({100, 100}, 200, 10, 1), InvalidInput);
    CHECK_THROWS_AS(paired_block_maxima({1, 1}, 200, 10, 1), InsufficientData);
}

TEST_CASE("block maxima follow the wedge null law") {
    // Blocks of one uniform sample and independent wedge draws share a law.
    const std::vector<std::size_t> counts{40, 70, 25};
    const auto pairs = paired_block_maxima(counts, 200, 20000, 8);
    std::vector<double> blocks;
    for (const auto& p : pairs) blocks.push_back(p.blocks);
    const double a = empirical_quantile(blocks, 0.1);
    const double b = simulate_null({counts, 200, 0.1, 20000, 9, NullFlavor::two_sided_wedge}).kappa;
    CHECK(std::abs(a - b) < 0.05);
}
