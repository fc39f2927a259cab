#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rkhsid/rng.hpp"
#include "rkhsid/signal.hpp"
#include "rkhsid/simd.hpp"

using namespace rkhsid;

namespace {

Signal make_signal(std::vector<double> samples, std::int64_t start = 0) {
    Signal s;
    s.samples = std::move(samples);
    s.start_index = start;
    return s;
}

Signal white(std::uint64_t seed, std::size_t n, double sd, std::int64_t start = 0) {
    Signal s = make_signal(std::vector<double>(n, 0.0), start);
    Rng rng(seed);
    for (double& v : s.samples) v = rng.gaussian(0.0, sd);
    return s;
}

}  // namespace

TEST_CASE("make_regressors: newest-first ordering") {
    const Signal u = make_signal({1, 2, 3}, 1);
    const auto locs = make_regressors(u, 2, 0, 3, 3);
    REQUIRE(locs.size() == 1);
    CHECK(locs[0].values == std::vector<double>{3, 2});
    CHECK(locs[0].kind == InputLocation::Kind::finite_memory);
}

TEST_CASE("make_regressors: zero input gives zero vectors") {
    const Signal u = make_signal(std::vector<double>(10, 0.0));
    for (int m : {1, 3, 7}) {
        const auto locs = make_regressors(u, m, 0, m - 1, 9);
        for (const auto& loc : locs)
            for (double v : loc.values) CHECK(v == 0.0);
    }
}

TEST_CASE("make_regressors: unit impulse window") {
    Signal u = make_signal(std::vector<double>(11, 0.0));
    u.samples[5] = 1.0;  // impulse at t = 5
    const auto locs = make_regressors(u, 3, 0, 6, 6);
    CHECK(locs[0].values == std::vector<double>{0, 1, 0});
}

TEST_CASE("make_regressors: boundary error names the first valid t") {
    const Signal u = make_signal({1, 2, 3, 4}, 2);
    CHECK_THROWS_WITH_AS(make_regressors(u, 3, 0, 2, 5), doctest::Contains("first valid t is 4"),
                         BoundaryError);
    // zero padding lifts the restriction
    const auto locs = make_regressors(u, 3, 0, 2, 5, true);
    CHECK(locs[0].values == std::vector<double>{1, 0, 0});
}

TEST_CASE("make_regressors: infinite memory uses the horizon") {
    const Signal u = make_signal({1, 2, 3, 4, 5});
    const auto locs = make_regressors(u, std::nullopt, 3, 3, 4);
    REQUIRE(locs.size() == 2);
    CHECK(locs[0].kind == InputLocation::Kind::truncated_infinite);
    CHECK(locs[0].values == std::vector<double>{4, 3, 2});
    CHECK(locs[1].values == std::vector<double>{5, 4, 3});
}

TEST_CASE("sample_past_trajectory: ramp and indicator window") {
    Signal u;
    u.sample_period = 0.5;
    u.start_index = -2;  // times -1, -0.5, 0, ...
    u.samples.resize(10);
    for (std::size_t i = 0; i < u.samples.size(); ++i) u.samples[i] = u.time_of(i);  // u(s) = s

    const InputLocation ramp = sample_past_trajectory(u, 2.0, {0.0, 1.0});
    CHECK(ramp.values[0] == doctest::Approx(2.0));
    CHECK(ramp.values[1] == doctest::Approx(1.0));

    Signal ones;
    ones.samples.assign(9, 1.0);
    ones.start_index = -4;
    const InputLocation win = sample_past_trajectory(ones, 2.0, {0.0, 1.0, 2.0}, 1.0);
    CHECK(win.values == std::vector<double>{1.0, 1.0, 0.0});

    CHECK_THROWS_AS(sample_past_trajectory(ones, 100.0, {0.0}), BoundaryError);
}

TEST_CASE("sample_past_trajectory: sine at exact sample points") {
    Signal u;
    u.sample_period = M_PI / 4.0;
    u.start_index = -2;  // t_0 = -pi/2
    u.samples.resize(5);
    for (std::size_t i = 0; i < u.samples.size(); ++i) u.samples[i] = std::sin(u.time_of(i));

    const InputLocation loc = sample_past_trajectory(u, 0.0, {0.0, M_PI / 2.0});
    CHECK(loc.values[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(loc.values[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("simulate_s1: zero input, zero noise") {
    const Signal u = make_signal(std::vector<double>(20, 0.0));
    const Signal y = simulate_s1(u, 0.0, 1);
    for (double v : y.samples) CHECK(v == 0.0);
    CHECK(y.start_index == 6);
}

TEST_CASE("simulate_s1: constant input sums the polynomial to 4.85") {
    const Signal u = make_signal(std::vector<double>(30, 1.0));
    const Signal y = simulate_s1(u, 0.0, 1);
    for (double v : y.samples) CHECK(v == doctest::Approx(4.85).epsilon(1e-12));
}

TEST_CASE("simulate_s1: insufficient burn-in") {
    const Signal u = make_signal({1, 2, 3});
    CHECK_THROWS_AS(simulate_s1(u, 0.0, 1), BoundaryError);
}

TEST_CASE("simulate_s2 with zero system matches simulate_s1 sample-for-sample") {
    const Signal u = white(7, 200, 2.0);
    LinearSystem zero;
    zero.impulse_response = {0.0, 0.0};
    zero.first_lag = 1;
    const Signal y1 = simulate_s1(u, 4.0, 42);
    const Signal y2 = simulate_s2(u, zero, 4.0, 42);
    REQUIRE(y1.samples.size() == y2.samples.size());
    CHECK(y1.start_index == y2.start_index);
    for (std::size_t i = 0; i < y1.samples.size(); ++i) CHECK(y1.samples[i] == y2.samples[i]);
}

TEST_CASE("simulate_s2: unit delay adds u_{t-1}") {
    const Signal u = white(11, 60, 2.0);
    LinearSystem delay;
    delay.impulse_response = {1.0};
    delay.first_lag = 1;
    const Signal y = simulate_s2(u, delay, 0.0, 5);
    const Signal base = simulate_s1(u, 0.0, 5);
    for (std::size_t i = 0; i < y.samples.size(); ++i) {
        const auto t = static_cast<std::size_t>(y.start_index) + i;
        CHECK(y.samples[i] == doctest::Approx(base.samples[i] + u.samples[t - 1]).epsilon(1e-12));
    }
}

TEST_CASE("random_linear_system: norm, poles, determinism, tail") {
    for (std::uint64_t seed : {1u, 2u, 99u}) {
        const LinearSystem sys = random_linear_system(10, 0.95, 10.0, seed);
        CHECK(std::abs(sys.l2_norm() - 10.0) <= 1e-6);
        CHECK(sys.max_pole_modulus <= 0.95);
        CHECK(sys.first_lag == 1);
        CHECK(sys.truncated_tail_mass < 1e-8);

        const LinearSystem again = random_linear_system(10, 0.95, 10.0, seed);
        CHECK(sys.impulse_response == again.impulse_response);
    }
}

TEST_CASE("convolve: identity, delay, hand result") {
    const Signal u = make_signal({1, 2, 3}, 1);
    CHECK(convolve({1.0}, u).samples == u.samples);

    const Signal delayed = convolve({0.0, 1.0}, u);
    CHECK(delayed.samples == std::vector<double>{0, 1, 2});
    CHECK(delayed.start_index == 1);

    CHECK(convolve({1.0, 1.0}, u).samples == std::vector<double>{1, 3, 5});
}

TEST_CASE("regressor inner product equals convolution at every valid t") {
    const Signal u = white(3, 64, 1.5);
    const std::vector<double> theta{0.7, -0.3, 0.2, 0.05};
    const int m = static_cast<int>(theta.size());
    const Signal y = convolve(theta, u);
    const auto locs = make_regressors(u, m, 0, m - 1, 63);
    for (std::size_t i = 0; i < locs.size(); ++i) {
        const double inner =
            simd::dot(theta.data(), locs[i].values.data(), theta.size());
        CHECK(inner == doctest::Approx(y.samples[i + static_cast<std::size_t>(m) - 1])
                           .epsilon(1e-12));
    }
}

TEST_CASE("fit_metric: endpoints and the hand example") {
    Eigen::VectorXd y(3), yhat(3);
    y << 1, 2, 3;
    yhat << 1, 2, 3;
    CHECK(fit_metric(y, yhat) == doctest::Approx(100.0));

    yhat.setConstant(y.mean());
    CHECK(fit_metric(y, yhat) == doctest::Approx(0.0));

    yhat << 1, 2, 4;
    CHECK(fit_metric(y, yhat) == doctest::Approx(100.0 * (1.0 - 1.0 / std::sqrt(2.0))));
}

TEST_CASE("fit_metric: invariant under common constant shifts") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd y(11), yhat(11);
        for (int i = 0; i < 11; ++i) {
            y(i) = rng.gaussian(0.0, 3.0);
            yhat(i) = rng.gaussian(0.0, 3.0);
        }
        const double c = rng.gaussian(0.0, 10.0);
        const double base = fit_metric(y, yhat);
        const double shifted = fit_metric(y.array() + c, yhat.array() + c);
        CHECK(shifted == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("fit_metric: constant test vector is undefined") {
    Eigen::VectorXd y = Eigen::VectorXd::Constant(5, 2.0);
    Eigen::VectorXd yhat = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(fit_metric(y, yhat), UndefinedFitError);
}
