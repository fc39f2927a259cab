#include "rkhsid/mercer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "rkhsid/parallel.hpp"
#include "rkhsid/rn.hpp"
#include "rkhsid/rng.hpp"
#include "rkhsid/simd.hpp"

namespace rkhsid::mercer {

double ss_zeta(int ell) {
    if (ell < 1) throw Error("eigenpair index must be >= 1");
    const double root = ell * M_PI - M_PI / 2.0;
    return 1.0 / (root * root);
}

double EigenPair::psi(double t) const {
    return std::sqrt(2.0) * std::sin(std::exp(-beta * t) / std::sqrt(zeta));
}

std::vector<EigenPair> ss_eigenpairs(double beta, int L) {
    if (!(beta > 0.0)) throw Error("beta must be positive");
    if (L < 1) throw Error("need at least one eigenpair");
    std::vector<EigenPair> pairs(static_cast<std::size_t>(L));
    for (int ell = 1; ell <= L; ++ell)
        pairs[static_cast<std::size_t>(ell - 1)] = EigenPair{ell, ss_zeta(ell), beta};
    return pairs;
}

namespace {

// per-point eigenfunction values weighted for the Mercer sum:
// column k holds sqrt(zeta_l) psi_l(t_k), so the truncated kernel is a
// plain dot product between columns
Eigen::MatrixXd psi_table(double beta, int L, const std::vector<double>& ts) {
    Eigen::MatrixXd table(L, static_cast<Eigen::Index>(ts.size()));
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double x = std::exp(-beta * ts[k]);
        for (int ell = 1; ell <= L; ++ell) {
            const double root = ell * M_PI - M_PI / 2.0;  // 1/sqrt(zeta)
            table(ell - 1, static_cast<Eigen::Index>(k)) =
                std::sqrt(2.0) * std::sin(x * root) / root;
        }
    }
    return table;
}

}  // namespace

double truncated_ss_kernel(double beta, int L, double t, double s) {
    if (t < 0.0 || s < 0.0) throw Error("stable spline kernel needs t, s >= 0");
    std::vector<double> zeta(static_cast<std::size_t>(L));
    std::vector<double> psi_t(static_cast<std::size_t>(L)), psi_s(static_cast<std::size_t>(L));
    const double xt = std::exp(-beta * t);
    const double xs = std::exp(-beta * s);
    for (int ell = 1; ell <= L; ++ell) {
        const double root = ell * M_PI - M_PI / 2.0;
        const auto i = static_cast<std::size_t>(ell - 1);
        zeta[i] = 1.0 / (root * root);
        psi_t[i] = std::sqrt(2.0) * std::sin(xt * root);
        psi_s[i] = std::sqrt(2.0) * std::sin(xs * root);
    }
    return simd::weighted_dot(zeta.data(), psi_t.data(), psi_s.data(),
                              static_cast<std::size_t>(L));
}

MercerCheck mercer_grid_check(double beta, int L, int grid_points, double t_max) {
    if (grid_points < 2) throw Error("grid check needs >= 2 points");
    std::vector<double> ts(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i)
        ts[static_cast<std::size_t>(i)] = t_max * i / (grid_points - 1.0);
    const Eigen::MatrixXd table = psi_table(beta, L, ts);

    MercerCheck check;
    check.rows.reserve(static_cast<std::size_t>(grid_points) *
                       static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) {
        for (int j = 0; j < grid_points; ++j) {
            const double truncated = simd::dot(table.col(i).data(), table.col(j).data(),
                                               static_cast<std::size_t>(L));
            const double exact = std::exp(-beta * std::max(ts[static_cast<std::size_t>(i)],
                                                           ts[static_cast<std::size_t>(j)]));
            const double err = std::abs(truncated - exact);
            check.rows.push_back({ts[static_cast<std::size_t>(i)],
                                  ts[static_cast<std::size_t>(j)], truncated, exact, err});
            check.max_abs_err = std::max(check.max_abs_err, err);
        }
    }
    return check;
}

EmpiricalMercer empirical_mercer(const kernels::GramMatrix& gram) {
    const auto n = gram.entries.rows();
    if (n == 0) throw Error("empty gram matrix");
    const kernels::PsdReport psd = kernels::psd_check(gram, 1e-8);
    if (!psd.psd)
        throw Error("gram matrix is not positive semidefinite (min eigenvalue " +
                    std::to_string(psd.min_eigenvalue) + ")");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram.entries / static_cast<double>(n));
    EmpiricalMercer out;
    out.eigenvalues.resize(n);
    out.eigenfunctions.resize(n, n);
    const double scale = std::sqrt(static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        out.eigenvalues(i) = es.eigenvalues()(n - 1 - i);               // descending
        out.eigenfunctions.col(i) = scale * es.eigenvectors().col(n - 1 - i);
    }
    return out;
}

// --- c_k estimation ---------------------------------------------------------------

namespace {

std::vector<double> ma_weights(double decay, int taps) {
    std::vector<double> w(static_cast<std::size_t>(taps));
    const double q = (2.0 + decay) / 2.0;  // covariance decay 1/tau^(1+decay)
    double norm = 0.0;
    for (int k = 0; k < taps; ++k) {
        w[static_cast<std::size_t>(k)] = std::pow(k + 1.0, -q);
        norm += w[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(k)];
    }
    norm = std::sqrt(norm);
    for (double& v : w) v /= norm;
    return w;
}

std::vector<double> gaussian_series(Rng& rng, std::size_t n, double std_dev) {
    std::vector<double> out(n);
    for (double& v : out) v = rng.gaussian(0.0, std_dev);
    return out;
}

// stationary input series: white, or a long moving average with
// algebraically decaying coefficients
std::vector<double> input_series(Rng& rng, std::size_t n, double std_dev, double ma_decay) {
    if (ma_decay <= 0.0) return gaussian_series(rng, n, std_dev);
    const int taps = 2048;
    const std::vector<double> w = ma_weights(ma_decay, taps);
    const std::vector<double> eps =
        gaussian_series(rng, n + static_cast<std::size_t>(taps), std_dev);
    std::vector<double> full(eps.size());
    simd::convolve(eps.data(), eps.size(), w.data(), w.size(), full.data());
    return {full.begin() + taps, full.end()};
}

}  // namespace

CkSequence estimate_ck(const CkConfig& cfg) {
    if (cfg.ell_max < 1 || cfg.k_max < 1) throw Error("ell_max and k_max must be >= 1");
    if (cfg.sample_count < 2) throw Error("need at least two replicate series");
    if (cfg.fir.empty()) throw Error("predictor FIR must be nonempty");

    // lag grid 0 : step : T
    const int p = static_cast<int>(std::round(cfg.lag_window / cfg.lag_step)) + 1;
    std::vector<double> grid(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) grid[static_cast<std::size_t>(k)] = k * cfg.lag_step;

    // predictor taps must land on the grid
    const double ratio = 1.0 / cfg.lag_step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw Error("lag_step must divide the unit predictor lag spacing");
    const int stride = static_cast<int>(std::round(ratio));
    if (static_cast<int>(cfg.fir.size() - 1) * stride >= p)
        throw Error("predictor memory exceeds the lag window");

    // trapezoid-weighted eigenfunction table: rho_l(x) = sum_k w_k psi_l(tau_k) x_k
    std::vector<double> w(grid.size(), cfg.lag_step);
    w.front() = cfg.lag_step / 2.0;
    w.back() = cfg.lag_step / 2.0;
    Eigen::MatrixXd Psi(cfg.ell_max, p);
    for (int k = 0; k < p; ++k) {
        const double x = std::exp(-cfg.beta * grid[static_cast<std::size_t>(k)]);
        for (int ell = 1; ell <= cfg.ell_max; ++ell) {
            const double root = ell * M_PI - M_PI / 2.0;
            Psi(ell - 1, k) = w[static_cast<std::size_t>(k)] * std::sqrt(2.0) * std::sin(x * root);
        }
    }

    const int n = cfg.series_length;
    const int R = cfg.sample_count;
    const int K = cfg.k_max;
    Eigen::MatrixXd ck_reps(K + 1, R);
    std::vector<double> second_moments(static_cast<std::size_t>(R), 0.0);
    bool zero_variance = false;

    parallel_for(R, cfg.workers, [&](int r) {
        Rng input_rng(derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r)));
        Rng noise_rng(derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 1));

        // u over enough past to cover the window at every i
        const std::size_t nu = static_cast<std::size_t>(n + p + 1);
        const std::vector<double> u =
            input_series(input_rng, nu, cfg.input_std, cfg.input_ma_decay);

        // X: lag windows, newest-first; outputs y_i = f(x_i) + e_i
        Eigen::MatrixXd X(p, n);
        Eigen::VectorXd outputs(n);
        for (int i = 0; i < n; ++i) {
            const std::size_t newest = static_cast<std::size_t>(p + i);
            for (int k = 0; k < p; ++k) X(k, i) = u[newest - static_cast<std::size_t>(k)];
            double f = 0.0;
            for (std::size_t j = 0; j < cfg.fir.size(); ++j)
                f += cfg.fir[j] * X(static_cast<int>(j) * stride, i);
            outputs(i) =
                f + (cfg.noise_std > 0.0 ? noise_rng.gaussian(0.0, cfg.noise_std) : 0.0);
        }

        // V(l, i) = (f(x_i) + e_i) rho_l(x_i)
        Eigen::MatrixXd V = Psi * X;
        for (int i = 0; i < n; ++i) V.col(i) *= outputs(i);

        double max_m2 = 0.0;
        for (int ell = 0; ell < cfg.ell_max; ++ell)
            max_m2 = std::max(max_m2, V.row(ell).squaredNorm() / n);
        second_moments[static_cast<std::size_t>(r)] = max_m2;

        for (int k = 0; k <= K; ++k) {
            double ck = 0.0;
            for (int ell = 0; ell < cfg.ell_max; ++ell) {
                const double mean = V.row(ell).mean();
                double cov = 0.0;
                for (int i = 0; i + k < n; ++i)
                    cov += (V(ell, i) - mean) * (V(ell, i + k) - mean);
                cov /= static_cast<double>(n - k);
                ck += ss_zeta(ell + 1) * cov;
            }
            ck_reps(k, r) = ck;
        }
    });

    CkSequence seq;
    seq.ell_truncation = cfg.ell_max;
    seq.sample_count = R;
    seq.seed = cfg.seed;
    seq.values.resize(static_cast<std::size_t>(K) + 1);
    seq.std_errors.resize(static_cast<std::size_t>(K) + 1);
    seq.abs_partial_sums.resize(static_cast<std::size_t>(K) + 1);
    double running = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double mean = ck_reps.row(k).mean();
        const double var = (ck_reps.row(k).array() - mean).square().sum() / (R - 1.0);
        seq.values[static_cast<std::size_t>(k)] = mean;
        seq.std_errors[static_cast<std::size_t>(k)] = std::sqrt(var / R);
        running += std::abs(mean);
        seq.abs_partial_sums[static_cast<std::size_t>(k)] = running;
        if (var == 0.0) zero_variance = true;
    }
    for (int ell = 1; ell <= cfg.ell_max; ++ell) seq.zeta_weight_sum += ss_zeta(ell);
    seq.max_v_second_moment = *std::max_element(second_moments.begin(), second_moments.end());
    seq.zero_variance_warning = zero_variance;
    return seq;
}

// --- consistency -------------------------------------------------------------------

void ConsistencyConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw ConfigError("gamma exponent alpha must lie in (0, 1/2)");
    if (n_grid.empty() || seeds.empty()) throw ConfigError("empty N grid or seed list");
    for (int n : n_grid)
        if (n < 4) throw ConfigError("N grid entries must be >= 4");
    if (!(gamma0 > 0.0)) throw ConfigError("gamma0 must be positive");
    if (section_centers.size() != section_weights.size() || section_centers.empty())
        throw ConfigError("true-system sections malformed");
    if (!(lag_step > 0.0) || !(lag_window > lag_step)) throw ConfigError("bad lag grid");
    if (test_draws < 8) throw ConfigError("test_draws too small");
}

ConsistencyCurve consistency_experiment(const ConsistencyConfig& cfg) {
    cfg.validate();

    const int p = static_cast<int>(std::round(cfg.lag_window / cfg.lag_step)) + 1;
    std::vector<double> grid(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) grid[static_cast<std::size_t>(k)] = k * cfg.lag_step;

    // true impulse response on the grid: sum_j w_j K(tau, s_j)
    std::vector<double> theta(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k)
        for (std::size_t j = 0; j < cfg.section_centers.size(); ++j)
            theta[k] += cfg.section_weights[j] *
                        std::exp(-cfg.beta * std::max(grid[k], cfg.section_centers[j]));
    // trapezoid weights once
    std::vector<double> qw(grid.size(), cfg.lag_step);
    qw.front() = cfg.lag_step / 2.0;
    qw.back() = cfg.lag_step / 2.0;
    std::vector<double> theta_w(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) theta_w[k] = theta[k] * qw[k];
    const auto f_rho = [&](const InputLocation& x) {
        return simd::dot(theta_w.data(), x.values.data(), theta_w.size());
    };

    const kernels::KernelSpec kernel =
        kernels::KernelSpec::linear_ct(kernels::IRKernelSpec::stable_spline_ct(cfg.beta), grid);

    const int n_max = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());

    ConsistencyCurve curve;
    curve.n_grid = cfg.n_grid;
    curve.alpha = cfg.alpha;
    curve.cells.resize(cfg.n_grid.size() * cfg.seeds.size());

    // One data record per seed; every N on the grid sees the first N samples
    // of the same record (common random numbers), so per-seed error curves
    // compare like against like as N grows.
    parallel_for(static_cast<int>(cfg.seeds.size()), cfg.workers, [&](int si) {
        const std::uint64_t seed = cfg.seeds[static_cast<std::size_t>(si)];
        const std::uint64_t base = derive_seed(seed, 0xC0);
        Rng input_rng(derive_seed(base, 1));
        Rng delta_rng(derive_seed(base, 2));
        Rng noise_rng(derive_seed(base, 3));
        Rng test_rng(derive_seed(base, 4));

        std::string failure;
        Dataset data;
        std::vector<InputLocation> test_locs;
        Eigen::VectorXd truth;
        try {
            // training input covers [-T, n_max Delta + Delta]
            const double t_hi = (n_max + 1) * cfg.sampling_spacing;
            const auto nu = static_cast<std::size_t>(
                std::ceil((t_hi + cfg.lag_window) / cfg.lag_step) + 4);
            Signal u;
            u.sample_period = cfg.lag_step;
            u.start_index =
                -static_cast<std::int64_t>(std::ceil(cfg.lag_window / cfg.lag_step) + 2);
            u.samples = input_series(input_rng, nu, cfg.input_std, cfg.input_ma_decay);

            data.locations.reserve(static_cast<std::size_t>(n_max));
            data.outputs.resize(n_max);
            data.timestamps.resize(static_cast<std::size_t>(n_max));
            for (int i = 0; i < n_max; ++i) {
                const double t =
                    i * cfg.sampling_spacing + delta_rng.uniform(0.0, cfg.sampling_spacing);
                InputLocation x = sample_past_trajectory(u, t, grid);
                data.outputs(i) =
                    f_rho(x) +
                    (cfg.noise_std > 0.0 ? noise_rng.gaussian(0.0, cfg.noise_std) : 0.0);
                data.timestamps[static_cast<std::size_t>(i)] = t;
                data.locations.push_back(std::move(x));
            }

            // fresh locations from an independent stream of the same process
            const auto nt = static_cast<std::size_t>(
                std::ceil((cfg.test_draws * cfg.sampling_spacing + cfg.lag_window) /
                          cfg.lag_step) +
                4);
            Signal ut;
            ut.sample_period = cfg.lag_step;
            ut.start_index = u.start_index;
            ut.samples = input_series(test_rng, nt, cfg.input_std, cfg.input_ma_decay);
            truth.resize(cfg.test_draws);
            for (int i = 0; i < cfg.test_draws; ++i) {
                const double t = i * cfg.sampling_spacing;
                InputLocation x = sample_past_trajectory(ut, t, grid);
                truth(i) = f_rho(x);
                test_locs.push_back(std::move(x));
            }
        } catch (const Error& e) {
            failure = e.what();
        }

        for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
            const int n = cfg.n_grid[ni];
            ConsistencyCell cell;
            cell.n = n;
            cell.seed = seed;
            if (failure.empty()) {
                try {
                    Dataset prefix;
                    prefix.locations.assign(data.locations.begin(), data.locations.begin() + n);
                    prefix.outputs = data.outputs.head(n);
                    prefix.timestamps.assign(data.timestamps.begin(),
                                             data.timestamps.begin() + n);
                    const double gamma =
                        cfg.gamma0 / std::pow(static_cast<double>(n), cfg.alpha);
                    const rn::RNModel model = rn::fit_rn(kernel, prefix, gamma);
                    const Eigen::VectorXd ghat = rn::predict(model, test_locs);
                    cell.error = std::sqrt((ghat - truth).squaredNorm() / cfg.test_draws);
                    cell.ok = true;
                } catch (const Error& e) {
                    cell.ok = false;
                    cell.message = e.what();
                }
            } else {
                cell.ok = false;
                cell.message = failure;
            }
            // cells ordered by (n, seed)
            curve.cells[ni * cfg.seeds.size() + static_cast<std::size_t>(si)] = std::move(cell);
        }
    });

    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
        std::vector<double> errs;
        for (const auto& cell : curve.cells)
            if (cell.ok && cell.n == cfg.n_grid[ni]) errs.push_back(cell.error);
        std::sort(errs.begin(), errs.end());
        const auto quantile = [&](double q) {
            if (errs.empty()) return std::numeric_limits<double>::quiet_NaN();
            const double pos = q * (static_cast<double>(errs.size()) - 1.0);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, errs.size() - 1);
            const double w = pos - static_cast<double>(lo);
            return (1.0 - w) * errs[lo] + w * errs[hi];
        };
        curve.median_error.push_back(quantile(0.5));
        curve.q1_error.push_back(quantile(0.25));
        curve.q3_error.push_back(quantile(0.75));
    }
    return curve;
}

}  // namespace rkhsid::mercer
