#include "rkhsid/rn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

namespace rkhsid::rn {

double RNModel::rkhs_norm_squared() const {
    return coefficients.dot(gram.entries * coefficients);
}

double ImpulseEstimate::value_at(double tau) const {
    if (!continuous) throw Error("value_at is for the continuous-time form");
    if (grid.empty() || tau < grid.front() - 1e-12 || tau > grid.back() + 1e-12)
        return 0.0;  // support restricted to the declared compact set
    // linear interpolation on the grid
    auto it = std::lower_bound(grid.begin(), grid.end(), tau);
    if (it == grid.begin()) return coefficients.front();
    const auto hi = static_cast<std::size_t>(it - grid.begin());
    if (hi >= grid.size()) return coefficients.back();
    const std::size_t lo = hi - 1;
    const double w = (tau - grid[lo]) / (grid[hi] - grid[lo]);
    return (1.0 - w) * coefficients[lo] + w * coefficients[hi];
}

RNModel fit_rn(const kernels::KernelSpec& kernel, const Dataset& data, double gamma,
               const SolveOptions& options) {
    return fit_rn_with_gram(kernel, data, kernels::gram(kernel, data.locations), gamma, options);
}

RNModel fit_rn_with_gram(const kernels::KernelSpec& kernel, const Dataset& data,
                         kernels::GramMatrix gram, double gamma, const SolveOptions& options) {
    data.validate();
    if (!(gamma > 0.0)) throw Error("regularization gamma must be positive");
    const auto n = static_cast<Eigen::Index>(data.size());
    if (gram.entries.rows() != n) throw DimensionError("gram size does not match the dataset");

    const Eigen::VectorXd& y = data.outputs;
    const double ynorm = std::max(y.norm(), 1e-300);
    const double trace = gram.entries.trace();

    Eigen::MatrixXd A = gram.entries;
    A.diagonal().array() += gamma * static_cast<double>(n);

    Eigen::LLT<Eigen::MatrixXd> llt(A);
    double jitter = options.jitter_start;
    while (llt.info() != Eigen::Success && jitter <= options.jitter_max) {
        Eigen::MatrixXd Aj = A;
        Aj.diagonal().array() += jitter * std::max(trace, 1.0);
        llt.compute(Aj);
        jitter *= 1e2;
    }
    if (llt.info() != Eigen::Success) {
        const double cond = std::max(trace, 1.0) / (gamma * static_cast<double>(n));
        throw ConditioningError(
            "representer system factorization failed after jitter escalation "
            "(condition estimate " + std::to_string(cond) + ")",
            cond);
    }

    Eigen::VectorXd c = llt.solve(y);
    double residual = (A * c - y).norm() / ynorm;
    for (int pass = 0; pass < options.max_refinements && residual > options.residual_tol;
         ++pass) {
        c += llt.solve(y - A * c);
        residual = (A * c - y).norm() / ynorm;
    }

    RNModel model;
    model.kernel = kernel;
    model.locations = data.locations;
    model.coefficients = std::move(c);
    model.gamma = gamma;
    model.gram = std::move(gram);
    model.residual = residual;
    return model;
}

double predict(const RNModel& model, const InputLocation& x) {
    const std::vector<InputLocation> xs{x};
    return predict(model, xs)(0);
}

Eigen::VectorXd predict(const RNModel& model, const std::vector<InputLocation>& xs) {
    // rows: queries, cols: training sections
    const Eigen::MatrixXd K = kernels::cross_gram(model.kernel, xs, model.locations);
    return K * model.coefficients;
}

Eigen::VectorXd fit_fir_regularized(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& Y,
                                    const Eigen::MatrixXd& K, double gamma) {
    if (Phi.rows() != Y.size()) throw DimensionError("Phi rows must match Y");
    if (Phi.cols() != K.rows() || K.rows() != K.cols())
        throw DimensionError("K must be m-by-m with m = Phi columns");
    if (gamma < 0.0) throw Error("gamma must be nonnegative");

    const auto m = K.rows();
    Eigen::MatrixXd normal = Phi.transpose() * Phi;
    if (gamma > 0.0) {
        Eigen::LLT<Eigen::MatrixXd> kllt(K);
        if (kllt.info() != Eigen::Success) {
            Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
            int dim = 0;
            double dmin = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m; ++i)
                if (ldlt.vectorD()(i) < dmin) {
                    dmin = ldlt.vectorD()(i);
                    dim = static_cast<int>(i);
                }
            throw RankError("FIR prior matrix K is singular (dimension " + std::to_string(dim) +
                            ")", dim);
        }
        // gamma K^{-1} without forming K^{-1} against the data: add via solve
        normal += gamma * kllt.solve(Eigen::MatrixXd::Identity(m, m));
    }
    Eigen::LDLT<Eigen::MatrixXd> solver(normal);
    if (solver.info() != Eigen::Success)
        throw ConditioningError("FIR normal equations are singular", 0.0);
    const Eigen::VectorXd rhs = Phi.transpose() * Y;
    Eigen::VectorXd theta = solver.solve(rhs);
    // one refinement pass keeps the primal/dual equivalence tight
    theta += solver.solve(rhs - normal * theta);
    return theta;
}

ImpulseEstimate extract_impulse_response(const RNModel& model, int p) {
    using Family = kernels::KernelSpec::Family;
    const kernels::KernelSpec& k = model.kernel;
    if (k.family != Family::linear_fir && k.family != Family::linear_iir)
        throw UnsupportedExtractionError(
            "impulse-response extraction needs a discrete linear kernel, got " + k.describe());
    if (p < 1) throw Error("extraction length must be >= 1");

    const auto n = static_cast<Eigen::Index>(model.locations.size());
    const double scale = k.scale;
    ImpulseEstimate est;

    if (k.family == Family::linear_fir) {
        const auto m = k.fir_matrix.rows();
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd xi(m);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& loc = model.locations[static_cast<std::size_t>(i)];
            for (Eigen::Index r = 0; r < m; ++r) xi(r) = loc.values[static_cast<std::size_t>(r)];
            theta += model.coefficients(i) * (k.fir_matrix * xi);
        }
        theta *= scale;
        const auto len = std::min<Eigen::Index>(p, m);
        est.coefficients.assign(theta.data(), theta.data() + len);
    } else {
        const int pf = k.truncation;
        std::vector<double> acc(static_cast<std::size_t>(pf), 0.0);
        std::vector<double> tmp(static_cast<std::size_t>(pf));
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& loc = model.locations[static_cast<std::size_t>(i)];
            k.generator.apply(loc.values.data(), tmp.data(), pf);
            const double ci = model.coefficients(i);
            for (int r = 0; r < pf; ++r) acc[static_cast<std::size_t>(r)] += ci * tmp[static_cast<std::size_t>(r)];
        }
        const int len = std::min(p, pf);
        est.coefficients.assign(acc.begin(), acc.begin() + len);
        for (double& v : est.coefficients) v *= scale;
    }
    est.coefficients.resize(static_cast<std::size_t>(p), 0.0);
    return est;
}

ImpulseEstimate extract_ir_ct(const RNModel& model, const std::vector<double>& grid) {
    using Family = kernels::KernelSpec::Family;
    const kernels::KernelSpec& k = model.kernel;
    if (k.family != Family::linear_ct)
        throw UnsupportedExtractionError(
            "continuous-time extraction needs a linear CT kernel, got " + k.describe());

    // trapezoid weights of the kernel's declared quadrature grid
    const std::vector<double>& qg = k.quad_grid;
    std::vector<double> w(qg.size(), 0.0);
    if (qg.size() >= 2) {
        w[0] = 0.5 * (qg[1] - qg[0]);
        for (std::size_t i = 1; i + 1 < qg.size(); ++i) w[i] = 0.5 * (qg[i + 1] - qg[i - 1]);
        w[qg.size() - 1] = 0.5 * (qg[qg.size() - 1] - qg[qg.size() - 2]);
    }

    ImpulseEstimate est;
    est.continuous = true;
    est.grid = grid;
    est.coefficients.assign(grid.size(), 0.0);
    const double scale = k.scale;
    const auto n = static_cast<Eigen::Index>(model.locations.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double tau = grid[g];
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& loc = model.locations[static_cast<std::size_t>(i)];
            double integral = 0.0;
            for (std::size_t t = 0; t < qg.size(); ++t)
                integral += w[t] * k.generator.entry_ct(tau, qg[t]) * loc.values[t];
            acc += model.coefficients(i) * integral;
        }
        est.coefficients[g] = scale * acc;
    }
    return est;
}

}  // namespace rkhsid::rn
