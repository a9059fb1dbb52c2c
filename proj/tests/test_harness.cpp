#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "modescope/errors.hpp"
#include "modescope/harness.hpp"

using namespace modescope;
using Catch::Approx;

TEST_CASE("density validation") {
    CHECK_NOTHROW(validate_density(trimodal_mixture()));
    CHECK_NOTHROW(validate_density(sigma1_normal()));
    CHECK_THROWS_AS(validate_density(Normal{{0.0, 0.0}, {1.0, 0.5, 0.4, 1.0}}), InvalidInput);
    CHECK_THROWS_AS(validate_density(Normal{{0.0, 0.0}, {1.0, 2.0, 2.0, 1.0}}), InvalidInput);
    CHECK_THROWS_AS(validate_density(Normal{{0.0, 0.0}, {1.0, 0.0, 0.0}}), InvalidInput);
    const Normal g{{0.0}, {1.0}};
    CHECK_THROWS_AS(validate_density(Mixture{{0.5, 0.6}, {g, g}}), InvalidInput);
    CHECK_THROWS_AS(validate_density(Mixture{{1.2, -0.2}, {g, g}}), InvalidInput);
    CHECK_THROWS_AS(validate_density(Mixture{{1.0}, {g, g}}), InvalidInput);
    CHECK_THROWS_AS(validate_density(UniformBox{Box{{0.0}, {0.0}}}), InvalidInput);
}

TEST_CASE("normal sampling matches the covariance") {
    Rng rng(3);
    const Normal g{{1.0, -2.0}, {2.0, 0.6, 0.6, 0.5}};
    const std::size_t n = 200000;
    const Sample s = draw_sample(g, n, rng);
    double m0 = 0, m1 = 0, c00 = 0, c01 = 0, c11 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        m0 += s[i][0] / n;
        m1 += s[i][1] / n;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double a = s[i][0] - m0, b = s[i][1] - m1;
        c00 += a * a / n;
        c01 += a * b / n;
        c11 += b * b / n;
    }
    CHECK(m0 == Approx(1.0).margin(0.015));
    CHECK(m1 == Approx(-2.0).margin(0.01));
    CHECK(c00 == Approx(2.0).epsilon(0.02));
    CHECK(c01 == Approx(0.6).margin(0.02));
    CHECK(c11 == Approx(0.5).epsilon(0.02));
}

TEST_CASE("mixture sampling follows the weights") {
    Rng rng(4);
    const Mixture m{{0.2, 0.8}, {Normal{{-10.0}, {1.0}}, Normal{{10.0}, {1.0}}}};
    const std::size_t n = 50000;
    const Sample s = draw_sample(m, n, rng);
    std::size_t left = 0;
    for (std::size_t i = 0; i < n; ++i) left += s[i][0] < 0.0;
    CHECK(double(left) / n == Approx(0.2).margin(3.0 * std::sqrt(0.16 / n) + 1e-3));
}

TEST_CASE("frequencies carry their standard error") {
    const Frequency f = make_frequency(25, 100);
    CHECK(f.rate == 0.25);
    CHECK(f.std_error == Approx(std::sqrt(0.25 * 0.75 / 100)));
    CHECK(make_frequency(0, 0).rate == 0.0);
}

TEST_CASE("Kolmogorov p-values") {
    CHECK(kolmogorov_p_value(1.3581 / std::sqrt(1e6), 1000000) == Approx(0.05).margin(2e-4));
    CHECK(kolmogorov_p_value(1.6276 / std::sqrt(1e6), 1000000) == Approx(0.01).margin(1e-4));
    CHECK(kolmogorov_p_value(0.0, 50) == 1.0);
    CHECK(kolmogorov_p_value(1.0, 50) < 1e-12);
    CHECK(ks_distance_uniform({0.5}) == 0.5);
    CHECK(ks_distance_uniform({0.125, 0.375, 0.625, 0.875}) == 0.125);
}

TEST_CASE("conditional uniformity holds on a planar wedge") {
    const Wedge K({0.3, -0.2}, {std::cos(0.7), std::sin(0.7)}, 0.6, 1.5);
    const auto s = uniformity_oracle(K, 500, 200, 13, OracleDensity::uniform, 2);
    CHECK(s.rejection_rate >= 0.02);
    CHECK(s.rejection_rate <= 0.09);
    CHECK(s.aggregate_p_value > 0.001);
    CHECK(s.acceptance_ratio > 0.0);
    CHECK(s.acceptance_ratio <= 1.0);
}

TEST_CASE("conditional uniformity on an interval") {
    const Wedge K({0.0}, {1.0}, 0.5, 2.0);
    const auto s = uniformity_oracle(K, 300, 300, 14);
    CHECK(s.rejection_rate <= 0.09);
    CHECK(s.acceptance_ratio == Approx(1.0));
}

TEST_CASE("the oracle detects an increasing density") {
    const Wedge K({0.0, 0.0}, {1.0, 0.0}, std::numbers::pi / 4, 1.0);
    const auto s = uniformity_oracle(K, 500, 100, 15, OracleDensity::linear_increasing);
    CHECK(s.rejection_rate > 0.5);
}

TEST_CASE("level and power studies are deterministic") {
    auto rows = local_presets("table2", 20, 99, false, 200);
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].name == "level n=100");
    CHECK(rows[3].name == "power n=100 (cal.)");
    const auto a = run_level_power(rows[3], 1);
    const auto b = run_level_power(rows[3], 4);
    CHECK(a.detected.hits == b.detected.hits);
    CHECK(a.calibration->kappa == b.calibration->kappa);
    CHECK(a.detected.runs == 20);
    CHECK(local_presets("table2", 1, 1, true).size() == 12);
    CHECK_THROWS_AS(local_presets("nope", 1, 1, false), InvalidInput);
}

TEST_CASE("detection study") {
    auto sc = detection_presets("trimodal", 0, 1).front();
    const auto empty = run_mode_detection_study(sc);
    CHECK(empty.per_vertex.empty());
    CHECK(empty.any_mode.runs == 0);

    sc = detection_presets("trimodal", 6, 1, 2500, 100).front();
    CHECK(sc.grid.size() == 35);
    const auto a = run_mode_detection_study(sc, 1);
    const auto b = run_mode_detection_study(sc, 3);
    REQUIRE(a.per_vertex.size() == 35);
    for (std::size_t v = 0; v < 35; ++v) CHECK(a.per_vertex[v].detected.hits == b.per_vertex[v].detected.hits);
    CHECK(a.any_mode.hits == b.any_mode.hits);
}
