#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rkhsid/errors.hpp"
#include "rkhsid/signal.hpp"

namespace rkhsid::kernels {

// Kernel over lag indices: the prior on impulse responses. Discrete entries
// are addressed by 0-based vector position k, which carries lag-index k+1 in
// the classical 1-based convention (so the stable spline entry at positions
// (i, j) is alpha^(max(i,j)+1)).
struct IRKernelSpec {
    enum class Family {
        stable_spline_discrete,  // K(i,j) = alpha^max(i,j)
        diagonal_ss,             // K(i,i) = alpha^i, zero off the diagonal
        stable_spline_ct,        // K(t,s) = exp(-beta max(t,s))
        explicit_matrix,
        radial_discrete,         // K(i,j) = h(|i-j|), h from shape below
    };
    enum class RadialShape { gaussian, laplacian, cosine };

    Family family = Family::stable_spline_discrete;
    double alpha = 0.9;
    double beta = 1.0;
    double eta = 1.0;
    RadialShape shape = RadialShape::gaussian;
    Eigen::MatrixXd matrix;

    static IRKernelSpec stable_spline(double alpha);
    static IRKernelSpec diagonal(double alpha);
    static IRKernelSpec stable_spline_ct(double beta);
    static IRKernelSpec explicit_matrix(Eigen::MatrixXd m);
    static IRKernelSpec radial(RadialShape shape, double eta);

    void validate() const;

    double entry(int i, int j) const;            // discrete positions
    double entry_ct(double t, double s) const;   // continuous lags
    Eigen::MatrixXd materialize(int p) const;
    Eigen::MatrixXd materialize_ct(const std::vector<double>& grid) const;

    // out = K x for the leading p-by-p block; O(p) for the stable spline
    // families, dense multiply otherwise.
    void apply(const double* x, double* out, int p) const;
    void apply_ct(const std::vector<double>& grid, const double* x, double* out) const;

    bool nonnegative_valued() const;
    std::string describe() const;
};

// Truncation length p with alpha^p below tol; the default embedding length
// for infinite-memory sequences.
int default_truncation(double alpha, double tol = 1e-12);

// Declarative kernel over input locations.
struct KernelSpec {
    enum class Family { linear_fir, linear_iir, linear_ct, gaussian, laplacian, nss, sum, product };

    Family family = Family::gaussian;
    double scale = 1.0;  // multiplies the whole kernel; the tuner's lambda

    Eigen::MatrixXd fir_matrix;      // linear_fir
    IRKernelSpec generator;          // linear_iir / linear_ct
    int truncation = 0;              // linear_iir / nss
    std::vector<double> quad_grid;   // linear_ct trapezoidal lag grid
    double eta = 1.0;                // gaussian / laplacian / nss
    double alpha = 0.9;              // nss
    std::shared_ptr<const KernelSpec> left, right;

    static KernelSpec linear_fir(Eigen::MatrixXd K);
    static KernelSpec linear_iir(IRKernelSpec generator, int truncation);
    static KernelSpec linear_ct(IRKernelSpec generator, std::vector<double> grid);
    static KernelSpec gaussian(double eta);
    static KernelSpec laplacian(double eta);
    static KernelSpec nss(double alpha, double eta, int truncation);
    static KernelSpec sum(KernelSpec left, KernelSpec right);
    static KernelSpec product(KernelSpec left, KernelSpec right);

    KernelSpec scaled(double s) const;
    void validate() const;
    bool is_linear() const;  // linear_fir / linear_iir / linear_ct
    std::string describe() const;
};

struct GramMatrix {
    Eigen::MatrixXd entries;
    std::string source;

    Eigen::Index size() const { return entries.rows(); }
};

// Pointwise kernel evaluation.
double eval(const KernelSpec& kernel, const InputLocation& a, const InputLocation& x);

// Symmetric Gram matrix (upper triangle computed, then mirrored).
GramMatrix gram(const KernelSpec& kernel, const std::vector<InputLocation>& locations);

// Rectangular kernel matrix K(a_i, b_j); the prediction workhorse.
Eigen::MatrixXd cross_gram(const KernelSpec& kernel, const std::vector<InputLocation>& a,
                           const std::vector<InputLocation>& b);

struct PsdReport {
    bool psd = false;
    double min_eigenvalue = 0.0;
    double trace = 0.0;
    double tol = 0.0;
};

// True iff lambda_min >= -tol * trace. Throws StructuralError when the
// matrix is asymmetric beyond 1e-12.
PsdReport psd_check(const GramMatrix& g, double tol = 1e-8);

// theta^T K^{-1} theta on the leading p-by-p block, via Cholesky.
double quadratic_norm(const IRKernelSpec& K, const Eigen::VectorXd& theta);

// --- JSON serialization -------------------------------------------------------

std::string to_json_string(const KernelSpec& spec, int indent = 2);
KernelSpec kernel_from_json_string(const std::string& text);
KernelSpec load_kernel(const std::string& path);
void save_kernel(const KernelSpec& spec, const std::string& path);

}  // namespace rkhsid::kernels
