#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rkhsid/kernels.hpp"
#include "rkhsid/signal.hpp"

namespace rkhsid::hyper {

// Negative log marginal likelihood of Y under Z = lambda K + sigma2 I:
//   1/2 logdet(Z) + 1/2 Y' Z^{-1} Y + N/2 log(2 pi)
double nll(const Eigen::VectorXd& Y, const kernels::GramMatrix& gram, double lambda,
           double sigma2);

struct HyperPoint {
    std::map<std::string, double> kernel_params;  // e.g. alpha, eta
    double lambda = 1.0;
    double sigma2 = 1.0;
    bool at_boundary = false;
};

enum class KernelFamily { nss, gaussian };

KernelFamily family_from_name(const std::string& name);

struct Bounds {
    double lo;
    double hi;
};

struct TuneOptions {
    int starts = 8;
    std::uint64_t seed = 0;
    int max_evals_per_start = 200;
    double tol = 1e-7;
    int workers = 1;
    Bounds lambda_bounds{1e-4, 1e4};
    Bounds eta_bounds{1e-4, 1e4};
    Bounds sigma2_bounds{1e-6, 1e4};
    Bounds alpha_bounds{0.5, 0.999};
};

struct StartRecord {
    HyperPoint initial;
    HyperPoint best;
    double nll_value = std::numeric_limits<double>::infinity();
    int evals = 0;
    std::vector<double> best_trace;  // best objective per iteration; nonincreasing
};

struct TuneResult {
    HyperPoint best;
    double nll_value = std::numeric_limits<double>::infinity();
    int starts_tried = 0;
    std::vector<StartRecord> trace;

    // RN configuration: kernel scaled by lambda, gamma = sigma2 / N
    kernels::KernelSpec rn_kernel;
    double rn_gamma = 0.0;
};

// Multistart Nelder-Mead over log-parameters with box bounds; starts are
// low-discrepancy points and run independently (parallel over workers).
TuneResult tune_ml(KernelFamily family, const Dataset& data, const TuneOptions& options = {});

// Generic Nelder-Mead, exposed for tests.
struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int evals = 0;
    std::vector<double> best_trace;
};
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, double step, int max_evals,
                             double tol);

// Oracle baseline: for each regressor dimension m, tune a Gaussian
// kernel on training data only, then use the noiseless test outputs to pick
// the best m. A benchmark device, not implementable in practice.
struct OracleResult {
    int best_m = 0;
    double best_fit = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> m_grid;
    std::vector<double> fits;          // NaN for skipped m
    std::vector<std::string> errors;   // failure reason per m, "" when ok
};

OracleResult oracle_select_m(const Signal& u_train, const Signal& y_train,
                             const Signal& u_test, const Signal& y_test_noiseless,
                             const std::vector<int>& m_grid, const TuneOptions& options = {});

}  // namespace rkhsid::hyper
