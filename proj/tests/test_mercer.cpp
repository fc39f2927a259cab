#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rkhsid/mercer.hpp"
#include "rkhsid/rng.hpp"

using namespace rkhsid;

TEST_CASE("stable spline eigenvalues: closed form") {
    CHECK(mercer::ss_zeta(1) == doctest::Approx(4.0 / (M_PI * M_PI)).epsilon(1e-14));
    CHECK(mercer::ss_zeta(1) == doctest::Approx(0.405285).epsilon(1e-5));
    CHECK(mercer::ss_zeta(2) == doctest::Approx(4.0 / (9.0 * M_PI * M_PI)).epsilon(1e-14));
    CHECK(mercer::ss_zeta(2) == doctest::Approx(0.0450316).epsilon(1e-5));
}

TEST_CASE("eigenfunctions are bounded by sqrt(2)") {
    const auto pairs = mercer::ss_eigenpairs(0.7, 50);
    REQUIRE(pairs.size() == 50);
    for (const auto& pair : pairs) {
        for (int i = 0; i <= 40; ++i) {
            const double t = 0.25 * i;
            CHECK(std::abs(pair.psi(t)) <= std::sqrt(2.0) + 1e-12);
        }
    }
}

TEST_CASE("truncated Mercer sum approaches exp(-beta max(t,s))") {
    CHECK(mercer::truncated_ss_kernel(1.0, 2000, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(mercer::truncated_ss_kernel(1.0, 2000, 1.0, 2.0) ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-3));

    // longer truncations improve the worst point
    const double exact = std::exp(-0.5);
    const double err_short = std::abs(mercer::truncated_ss_kernel(1.0, 200, 0.5, 0.5) - exact);
    const double err_long = std::abs(mercer::truncated_ss_kernel(1.0, 400, 0.5, 0.5) - exact);
    CHECK(err_long < err_short);
}

TEST_CASE("grid check stays under tolerance") {
    const auto check = mercer::mercer_grid_check(1.0, 800, 30, 5.0);
    CHECK(check.rows.size() == 900);
    CHECK(check.max_abs_err < 5e-3);
}

TEST_CASE("empirical Mercer: identity and rank-one grams") {
    const int n = 8;
    kernels::GramMatrix id;
    id.entries = static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
    const auto em = mercer::empirical_mercer(id);
    for (int i = 0; i < n; ++i) CHECK(em.eigenvalues(i) == doctest::Approx(1.0));

    Rng rng(1);
    Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng.gaussian(); });
    kernels::GramMatrix rank1;
    rank1.entries = v * v.transpose();
    const auto er = mercer::empirical_mercer(rank1);
    CHECK(er.eigenvalues(0) == doctest::Approx(v.squaredNorm() / n).epsilon(1e-12));
    for (int i = 1; i < n; ++i) CHECK(std::abs(er.eigenvalues(i)) < 1e-10);

    // eigenfunction normalization: sum_k rho_i(x_k)^2 / N = 1
    for (int i = 0; i < n; ++i)
        CHECK(em.eigenfunctions.col(i).squaredNorm() / n == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Nystrom eigenvalues of the stable spline approach the closed form") {
    const double beta = 1.0;
    const auto nystrom_error = [&](int n) {
        const double T = 30.0;
        const double h = T / n;
        kernels::GramMatrix g;
        g.entries.resize(n, n);
        std::vector<double> sqrt_w(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double s = h * i;
            const double w = (i == 0 || i == n - 1 ? 0.5 : 1.0) * h * beta * std::exp(-beta * s);
            sqrt_w[static_cast<std::size_t>(i)] = std::sqrt(w);
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double k = std::exp(-beta * std::max(h * i, h * j));
                g.entries(i, j) = n * sqrt_w[static_cast<std::size_t>(i)] * k *
                                  sqrt_w[static_cast<std::size_t>(j)];
            }
        const auto em = mercer::empirical_mercer(g);
        double worst = 0.0;
        for (int ell = 1; ell <= 3; ++ell)
            worst = std::max(worst, std::abs(em.eigenvalues(ell - 1) - mercer::ss_zeta(ell)) /
                                        mercer::ss_zeta(ell));
        return worst;
    };
    const double coarse = nystrom_error(200);
    const double fine = nystrom_error(400);
    CHECK(fine < coarse);
    CHECK(fine < 2e-2);
}

TEST_CASE("estimate_ck: zero predictor and zero noise give zero c_k") {
    mercer::CkConfig cfg;
    cfg.fir = {0.0, 0.0, 0.0};
    cfg.noise_std = 0.0;
    cfg.ell_max = 20;
    cfg.k_max = 6;
    cfg.series_length = 64;
    cfg.sample_count = 4;
    const auto seq = mercer::estimate_ck(cfg);
    for (double v : seq.values) CHECK(v == 0.0);
    CHECK(seq.zero_variance_warning);
}

TEST_CASE("estimate_ck: FIR with white input decorrelates beyond the window") {
    mercer::CkConfig cfg;
    cfg.fir = {1.0, 0.5, -0.3};
    cfg.lag_window = 8.0;
    cfg.ell_max = 60;
    cfg.k_max = 16;
    cfg.series_length = 400;
    cfg.sample_count = 24;
    cfg.seed = 42;
    const auto seq = mercer::estimate_ck(cfg);

    CHECK(seq.values[0] > 0.0);  // lag-0 weighted variance
    // beyond the dependence window (T = 8 plus predictor memory) the
    // population c_k is exactly zero
    for (int k = 10; k <= 16; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        CHECK(std::abs(seq.values[ku]) <= 3.0 * seq.std_errors[ku]);
    }

    // weight summability: sum of zeta stays under the analytic 1/2
    CHECK(seq.zeta_weight_sum < 0.5);
    CHECK(seq.zeta_weight_sum > 0.49);

    // partial sums of |c_k| are finite and recorded
    CHECK(seq.abs_partial_sums.back() >= seq.abs_partial_sums.front());
}

TEST_CASE("estimate_ck: doubling replicates shrinks standard errors by about sqrt(2)") {
    mercer::CkConfig cfg;
    cfg.fir = {1.0, 0.5, -0.3};
    cfg.ell_max = 40;
    cfg.k_max = 8;
    cfg.series_length = 200;
    cfg.sample_count = 24;
    cfg.seed = 9;
    const auto base = mercer::estimate_ck(cfg);
    cfg.sample_count = 48;
    const auto doubled = mercer::estimate_ck(cfg);

    double ratio_sum = 0.0;
    for (std::size_t k = 0; k <= 8; ++k) ratio_sum += base.std_errors[k] / doubled.std_errors[k];
    const double mean_ratio = ratio_sum / 9.0;
    CHECK(mean_ratio > 1.15);
    CHECK(mean_ratio < 1.75);
}

TEST_CASE("estimate_ck: truncation invariance within the zeta tail bound") {
    mercer::CkConfig cfg;
    cfg.fir = {1.0, 0.5, -0.3};
    cfg.ell_max = 60;
    cfg.k_max = 8;
    cfg.series_length = 250;
    cfg.sample_count = 12;
    cfg.seed = 5;
    const auto narrow = mercer::estimate_ck(cfg);
    cfg.ell_max = 120;
    const auto wide = mercer::estimate_ck(cfg);

    const double tail_mass = wide.zeta_weight_sum - narrow.zeta_weight_sum;
    const double bound = tail_mass * wide.max_v_second_moment * (1.0 + 1e-9) + 1e-15;
    for (std::size_t k = 0; k <= 8; ++k)
        CHECK(std::abs(wide.values[k] - narrow.values[k]) <= bound);
}

TEST_CASE("consistency config validation") {
    mercer::ConsistencyConfig cfg;
    cfg.alpha = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.alpha = 0.25;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("consistency experiment: noiseless in-span truth is reproduced") {
    mercer::ConsistencyConfig cfg;
    cfg.noise_std = 0.0;
    cfg.gamma0 = 1e-7;
    cfg.n_grid = {60};
    cfg.seeds = {1, 2};
    cfg.test_draws = 64;
    const auto curve = mercer::consistency_experiment(cfg);
    for (const auto& cell : curve.cells) {
        REQUIRE(cell.ok);
        CHECK(cell.error < 0.02);
    }
}

TEST_CASE("consistency experiment: reproducible bit-for-bit and error decays") {
    mercer::ConsistencyConfig cfg;
    cfg.n_grid = {48, 160};
    cfg.seeds = {1, 2, 3, 4};
    cfg.test_draws = 96;
    cfg.noise_std = 1.0;
    cfg.gamma0 = 0.05;
    const auto a = mercer::consistency_experiment(cfg);
    const auto b = mercer::consistency_experiment(cfg);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].error == b.cells[i].error);
        CHECK(a.cells[i].n == b.cells[i].n);
        CHECK(a.cells[i].seed == b.cells[i].seed);
    }
    // qualitative decay between the endpoints
    CHECK(a.median_error.back() < a.median_error.front());

    // parallel execution gives the same cells
    mercer::ConsistencyConfig par = cfg;
    par.workers = 3;
    const auto c = mercer::consistency_experiment(par);
    for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].error == c.cells[i].error);
}
