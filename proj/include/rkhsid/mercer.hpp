#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rkhsid/kernels.hpp"

namespace rkhsid::mercer {

// Closed-form eigenpair of the continuous-time stable spline kernel
// exp(-beta max(t,s)): zeta_l = 1/(l pi - pi/2)^2 and
// psi_l(t) = sqrt(2) sin(exp(-beta t)/sqrt(zeta_l)).
struct EigenPair {
    int ell = 1;
    double zeta = 0.0;
    double beta = 1.0;

    double psi(double t) const;
};

double ss_zeta(int ell);
std::vector<EigenPair> ss_eigenpairs(double beta, int L);

// Truncated Mercer sum sum_{l<=L} zeta_l psi_l(t) psi_l(s); converges to
// exp(-beta max(t,s)) as L grows.
double truncated_ss_kernel(double beta, int L, double t, double s);

struct MercerCheckRow {
    double t, s, truncated, exact, abs_err;
};
struct MercerCheck {
    std::vector<MercerCheckRow> rows;
    double max_abs_err = 0.0;
};
// Uniform grid_points-by-grid_points check on [0, t_max]^2.
MercerCheck mercer_grid_check(double beta, int L, int grid_points, double t_max = 5.0);

// Eigendecomposition of gram/N: empirical Mercer pairs under the sample
// measure. Eigenvalues descending; eigenfunction columns scaled so
// sum_k rho_i(x_k)^2 / N = 1.
struct EmpiricalMercer {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenfunctions;
};
EmpiricalMercer empirical_mercer(const kernels::GramMatrix& gram);

// --- c_k estimation -----------------------------------------------------------

struct CkConfig {
    std::vector<double> fir{1.0, 0.5, -0.3};  // predictor f over lags 0..memory-1
    double beta = 1.0;
    double lag_window = 8.0;   // trajectory window T
    double lag_step = 1.0;
    int ell_max = 200;
    int k_max = 50;
    int series_length = 512;
    int sample_count = 32;     // independent replicate series
    double input_std = 1.0;
    double noise_std = 1.0;
    // when set, input is a long moving average with coefficients
    // (k+1)^(-(2+decay)/2), giving covariance decay 1/tau^(1+decay);
    // otherwise white
    double input_ma_decay = 0.0;
    std::uint64_t seed = 1;
    int workers = 1;
};

struct CkSequence {
    std::vector<double> values;            // c_0..c_kmax, replicate means
    std::vector<double> std_errors;        // Monte Carlo standard errors
    std::vector<double> abs_partial_sums;  // running sums of |c_k|
    int ell_truncation = 0;
    int sample_count = 0;
    std::uint64_t seed = 0;
    double zeta_weight_sum = 0.0;          // sum of the used zeta_l (<= 1/2)
    double max_v_second_moment = 0.0;      // empirical sup over l of E v^2
    bool zero_variance_warning = false;
};

// Empirical c_k = sum_l zeta_l Cov(v_{l,i}, v_{l,i+k}) with
// v_{l,i} = (f(x_i) + e_i) rho_l(x_i), averaged over replicate series.
CkSequence estimate_ck(const CkConfig& config);

// --- consistency experiment ------------------------------------------------------

struct ConsistencyConfig {
    double beta = 1.0;
    double lag_window = 8.0;
    double lag_step = 0.25;
    double sampling_spacing = 1.0;       // Delta; t_i = i Delta + delta_i
    double input_ma_decay = 0.5;         // covariance decay 1/tau^(1+decay)
    double input_std = 1.0;
    double noise_std = 0.25;
    double gamma0 = 2.5;
    double alpha = 0.25;                 // gamma = gamma0 / N^alpha, alpha in (0, 1/2)
    std::vector<int> n_grid{200, 600, 1200, 2000};
    int test_draws = 400;
    std::vector<std::uint64_t> seeds{1,  2,  3,  4,  5,  6,  7,  8,  9,  10,
                                     11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    int workers = 1;
    // true system: stable spline kernel sections theta = sum_j w_j K(., s_j)
    std::vector<double> section_centers{0.5, 1.5, 3.0};
    std::vector<double> section_weights{1.0, -0.6, 0.3};

    void validate() const;
};

struct ConsistencyCell {
    int n = 0;
    std::uint64_t seed = 0;
    double error = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string message;
};

struct ConsistencyCurve {
    std::vector<int> n_grid;
    double alpha = 0.0;
    std::vector<ConsistencyCell> cells;   // ordered by (n, seed)
    std::vector<double> median_error;     // per n, over successful cells
    std::vector<double> q1_error, q3_error;
};

// For each (N, seed): fit the CT stable spline RN with gamma = gamma0/N^alpha
// and estimate ||g_N - f_rho||_x by Monte Carlo over fresh input locations.
ConsistencyCurve consistency_experiment(const ConsistencyConfig& config);

}  // namespace rkhsid::mercer
