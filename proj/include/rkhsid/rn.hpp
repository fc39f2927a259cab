#pragma once

#include <vector>

#include <Eigen/Core>

#include "rkhsid/kernels.hpp"
#include "rkhsid/signal.hpp"

namespace rkhsid::rn {

// Fitted regularization network.
struct RNModel {
    kernels::KernelSpec kernel;
    std::vector<InputLocation> locations;
    Eigen::VectorXd coefficients;  // c_hat, length N
    double gamma = 0.0;
    kernels::GramMatrix gram;      // cached training Gram
    double residual = 0.0;         // ||(K + gamma N I) c - Y|| / ||Y||

    // c^T K c: squared RKHS norm of the fitted function.
    double rkhs_norm_squared() const;
};

// Impulse-response estimate extracted from a linear-kernel model.
struct ImpulseEstimate {
    std::vector<double> coefficients;  // theta_hat; index k acts at lag k
    std::vector<double> grid;          // lag grid, continuous-time form only
    bool continuous = false;

    // Continuous form: value at lag tau, zero beyond the declared grid.
    double value_at(double tau) const;
};

struct SolveOptions {
    // residual target for iterative refinement
    double residual_tol = 1e-12;
    int max_refinements = 3;
    // jitter escalation, as multiples of trace(K)/N, applied only when the
    // factorization fails outright
    double jitter_start = 1e-12;
    double jitter_max = 1e-8;
};

// c_hat = (K + gamma N I)^{-1} Y via Cholesky with iterative refinement.
RNModel fit_rn(const kernels::KernelSpec& kernel, const Dataset& data, double gamma,
               const SolveOptions& options = {});

// As above but with a precomputed Gram (the tuner's path).
RNModel fit_rn_with_gram(const kernels::KernelSpec& kernel, const Dataset& data,
                         kernels::GramMatrix gram, double gamma,
                         const SolveOptions& options = {});

double predict(const RNModel& model, const InputLocation& x);
Eigen::VectorXd predict(const RNModel& model, const std::vector<InputLocation>& xs);

// Regularized FIR estimate: argmin |Y - Phi theta|^2 + gamma theta' K^{-1} theta,
// solved from the m-by-m normal equations (the primal route; fit_rn with a
// linear FIR kernel is the N-by-N dual route).
Eigen::VectorXd fit_fir_regularized(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& Y,
                                    const Eigen::MatrixXd& K, double gamma);

// theta_hat = sum_i c_i K x_i, truncated to p coefficients. Linear
// discrete kernels only.
ImpulseEstimate extract_impulse_response(const RNModel& model, int p);

// Continuous-time theta_hat(tau) = sum_i c_i int K(tau,t) x_i(t) dt on the
// given lag grid, by the kernel's declared quadrature.
ImpulseEstimate extract_ir_ct(const RNModel& model, const std::vector<double>& grid);

}  // namespace rkhsid::rn
