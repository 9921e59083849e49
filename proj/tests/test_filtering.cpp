#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "emgdec/analysis.hpp"
#include "emgdec/filtering.hpp"

using namespace emgdec;

TEST_CASE("spot value: unit speed-period product gives alpha = 2pi/(1+2pi)") {
    // prev 0, input 1, T_e = 0.02 s, beta = 1: v = 50, v*T_e = 1, so
    // alpha = 2*pi/(1+2*pi) ~= 0.8627
    FilterParams p{1.0, 0.02};
    FilterState st;
    REQUIRE(filter_step(0.0, st, p) == 0.0);
    double out = filter_step(1.0, st, p);
    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    double alpha = two_pi / (1.0 + two_pi);
    REQUIRE_THAT(alpha, Catch::Matchers::WithinAbs(0.8627, 1e-4));
    REQUIRE_THAT(out, Catch::Matchers::WithinAbs(alpha * 1.0, 1e-12));
}

TEST_CASE("beta = 0 freezes the output at the first sample") {
    FilterParams p{0.0, 1.0 / 50.0};
    FilterState st;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-30.0, 30.0);
    double first = 12.5;
    REQUIRE(filter_step(first, st, p) == first);
    for (int t = 0; t < 100; ++t) REQUIRE(filter_step(dist(rng), st, p) == first);
}

TEST_CASE("very large beta approaches a pass-through") {
    FilterParams p{1e12, 1.0 / 50.0};
    FilterState st;
    filter_step(0.0, st, p);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-30.0, 30.0);
    for (int t = 0; t < 100; ++t) {
        double x = dist(rng);
        double y = filter_step(x, st, p);
        REQUIRE_THAT(y, Catch::Matchers::WithinAbs(x, 1e-6));
    }
}

TEST_CASE("every output is a convex combination of input and state") {
    FilterParams p{0.7, 1.0 / 50.0};
    FilterState st;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-45.0, 45.0);
    double prev = dist(rng);
    filter_step(prev, st, p);
    for (int t = 0; t < 500; ++t) {
        double x = dist(rng);
        double lo = std::min(x, prev), hi = std::max(x, prev);
        double y = filter_step(x, st, p);
        REQUIRE(y >= lo);
        REQUIRE(y <= hi);
        prev = y;
    }
}

TEST_CASE("three hand-stepped recursion values match") {
    // T_e = 0.5, beta = 2, inputs 0, 2, 1
    FilterParams p{2.0, 0.5};
    FilterState st;
    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    REQUIRE(filter_step(0.0, st, p) == 0.0);
    // v = |2-0|/0.5 = 4; k = 2pi*2*4*0.5 = 8pi; alpha = 8pi/(1+8pi)
    double k1 = two_pi * 2.0 * 4.0 * 0.5;
    double a1 = k1 / (1.0 + k1);
    double y1 = a1 * 2.0;
    REQUIRE_THAT(filter_step(2.0, st, p), Catch::Matchers::WithinAbs(y1, 1e-14));
    // v = |1-y1|/0.5; k = 2pi*2*v*0.5
    double v2 = std::abs(1.0 - y1) / 0.5;
    double k2 = two_pi * 2.0 * v2 * 0.5;
    double a2 = k2 / (1.0 + k2);
    double y2 = a2 * 1.0 + (1.0 - a2) * y1;
    REQUIRE_THAT(filter_step(1.0, st, p), Catch::Matchers::WithinAbs(y2, 1e-14));
}

TEST_CASE("filtering is causal: outputs never depend on later inputs") {
    const int T = 200;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-20.0, 20.0);
    std::vector<double> x(T);
    for (auto& v : x) v = dist(rng);
    std::vector<double> x2 = x;
    for (int t = 120; t < T; ++t) x2[t] += 50.0;

    FilterParams p{0.5, 1.0 / 50.0};
    auto a = filter_trajectory(x, 1, T, p);
    auto b = filter_trajectory(x2, 1, T, p);
    for (int t = 0; t < 120; ++t) REQUIRE(a[t] == b[t]);
    REQUIRE(a[150] != b[150]);
}

TEST_CASE("output mean speed is monotone in beta") {
    const int T = 1000;
    std::mt19937_64 rng(13);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> x(T);
    double phase = 0.0;
    for (int t = 0; t < T; ++t) {
        phase += 0.05;
        x[t] = 20.0 * std::sin(phase) + 2.0 * noise(rng);
    }
    double prev_speed = -1.0;
    for (double beta : default_beta_grid()) {
        FilterParams p{beta, 1.0 / 50.0};
        auto y = filter_trajectory(x, 1, T, p);
        double speed = mean_speed(y, 1, T, 50.0);
        REQUIRE(speed >= prev_speed);
        prev_speed = speed;
    }
    // and the unfiltered signal is the supremum
    REQUIRE(mean_speed(x, 1, T, 50.0) >= prev_speed);
}

TEST_CASE("per-joint filtering treats rows independently") {
    const int J = 3, T = 50;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    std::vector<double> traj(static_cast<size_t>(J) * T);
    for (auto& v : traj) v = dist(rng);
    FilterParams p{0.3, 1.0 / 50.0};
    auto all = filter_trajectory(traj, J, T, p);
    for (int j = 0; j < J; ++j) {
        std::vector<double> row(traj.begin() + static_cast<size_t>(j) * T,
                                traj.begin() + static_cast<size_t>(j + 1) * T);
        auto solo = filter_trajectory(row, 1, T, p);
        for (int t = 0; t < T; ++t) REQUIRE(all[static_cast<size_t>(j) * T + t] == solo[t]);
    }
}

TEST_CASE("parameter validation") {
    REQUIRE_THROWS_AS((FilterParams{-0.1, 0.02}).validate(), std::invalid_argument);
    REQUIRE_THROWS_AS((FilterParams{1.0, 0.0}).validate(), std::invalid_argument);
    FilterParams p{1.0, 0.02};
    FilterState st;
    REQUIRE_THROWS_AS(filter_step(std::numeric_limits<double>::quiet_NaN(), st, p),
                      std::invalid_argument);
}

TEST_CASE("beta sweep covers the grid and preserves shapes") {
    const int J = 2, T = 30;
    std::vector<std::vector<double>> trajs(3, std::vector<double>(static_cast<size_t>(J) * T, 1.0));
    auto swept = beta_sweep(trajs, J, T, default_beta_grid(), 0.02);
    REQUIRE(swept.size() == default_beta_grid().size());
    for (const auto& per_beta : swept) {
        REQUIRE(per_beta.size() == trajs.size());
        for (const auto& tr : per_beta) REQUIRE(tr.size() == static_cast<size_t>(J) * T);
    }
}
