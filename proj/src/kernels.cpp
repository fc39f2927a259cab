#include "rkhsid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "rkhsid/simd.hpp"

#include <json.hpp>

namespace rkhsid::kernels {

using json = nlohmann::json;

// --- IRKernelSpec ---------------------------------------------------------------

IRKernelSpec IRKernelSpec::stable_spline(double alpha) {
    IRKernelSpec k;
    k.family = Family::stable_spline_discrete;
    k.alpha = alpha;
    k.validate();
    return k;
}

IRKernelSpec IRKernelSpec::diagonal(double alpha) {
    IRKernelSpec k;
    k.family = Family::diagonal_ss;
    k.alpha = alpha;
    k.validate();
    return k;
}

IRKernelSpec IRKernelSpec::stable_spline_ct(double beta) {
    IRKernelSpec k;
    k.family = Family::stable_spline_ct;
    k.beta = beta;
    k.validate();
    return k;
}

IRKernelSpec IRKernelSpec::explicit_matrix(Eigen::MatrixXd m) {
    IRKernelSpec k;
    k.family = Family::explicit_matrix;
    k.matrix = std::move(m);
    k.validate();
    return k;
}

IRKernelSpec IRKernelSpec::radial(RadialShape shape, double eta) {
    IRKernelSpec k;
    k.family = Family::radial_discrete;
    k.shape = shape;
    k.eta = eta;
    k.validate();
    return k;
}

void IRKernelSpec::validate() const {
    switch (family) {
        case Family::stable_spline_discrete:
        case Family::diagonal_ss:
            if (!(alpha > 0.0 && alpha < 1.0)) throw Error("stable spline alpha must be in (0,1)");
            break;
        case Family::stable_spline_ct:
            if (!(beta > 0.0)) throw Error("stable spline beta must be positive");
            break;
        case Family::explicit_matrix:
            if (matrix.rows() == 0 || matrix.rows() != matrix.cols())
                throw Error("explicit IR kernel matrix must be square and nonempty");
            if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() >
                1e-12 * std::max(1.0, matrix.cwiseAbs().maxCoeff()))
                throw StructuralError("explicit IR kernel matrix must be symmetric");
            break;
        case Family::radial_discrete:
            if (!(eta > 0.0)) throw Error("radial IR kernel eta must be positive");
            break;
    }
}

double IRKernelSpec::entry(int i, int j) const {
    switch (family) {
        case Family::stable_spline_discrete:
            return std::pow(alpha, std::max(i, j) + 1);
        case Family::diagonal_ss:
            return i == j ? std::pow(alpha, i + 1) : 0.0;
        case Family::explicit_matrix:
            if (i >= matrix.rows() || j >= matrix.cols()) return 0.0;
            return matrix(i, j);
        case Family::radial_discrete: {
            const double d = std::abs(i - j);
            switch (shape) {
                case RadialShape::gaussian: return std::exp(-d * d / eta);
                case RadialShape::laplacian: return std::exp(-d / eta);
                case RadialShape::cosine: return std::cos(d / eta);
            }
            return 0.0;
        }
        case Family::stable_spline_ct:
            throw Error("continuous-time IR kernel addressed with discrete indices");
    }
    return 0.0;
}

double IRKernelSpec::entry_ct(double t, double s) const {
    if (family != Family::stable_spline_ct)
        throw Error("entry_ct defined only for the continuous-time stable spline");
    return std::exp(-beta * std::max(t, s));
}

Eigen::MatrixXd IRKernelSpec::materialize(int p) const {
    Eigen::MatrixXd m(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) m(i, j) = m(j, i) = entry(i, j);
    return m;
}

Eigen::MatrixXd IRKernelSpec::materialize_ct(const std::vector<double>& grid) const {
    const int p = static_cast<int>(grid.size());
    if (family == Family::explicit_matrix) {
        if (matrix.rows() != p)
            throw DimensionError("explicit CT kernel matrix does not match the lag grid");
        return matrix;
    }
    Eigen::MatrixXd m(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) m(i, j) = m(j, i) = entry_ct(grid[i], grid[j]);
    return m;
}

namespace {

// (K x)_i for the max-decay kernel K(i,j) = d[max(i,j)]:
//   (K x)_i = d[i] * sum_{j<=i} x_j + sum_{j>i} d[j] x_j
void max_kernel_apply(const std::vector<double>& d, const double* x, double* out, int p) {
    double prefix = 0.0;
    std::vector<double> suffix(static_cast<std::size_t>(p) + 1, 0.0);
    for (int i = p - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + d[i] * x[i];
    for (int i = 0; i < p; ++i) {
        prefix += x[i];
        out[i] = d[i] * prefix + suffix[i + 1];
    }
}

std::vector<double> ss_decay(double alpha, int p) {
    std::vector<double> d(static_cast<std::size_t>(p));
    double a = alpha;
    for (int k = 0; k < p; ++k, a *= alpha) d[static_cast<std::size_t>(k)] = a;
    return d;
}

}  // namespace

void IRKernelSpec::apply(const double* x, double* out, int p) const {
    switch (family) {
        case Family::stable_spline_discrete: {
            max_kernel_apply(ss_decay(alpha, p), x, out, p);
            return;
        }
        case Family::diagonal_ss: {
            double a = alpha;
            for (int k = 0; k < p; ++k, a *= alpha) out[k] = a * x[k];
            return;
        }
        case Family::explicit_matrix:
        case Family::radial_discrete: {
            const Eigen::MatrixXd m = materialize(p);
            Eigen::Map<const Eigen::VectorXd> xv(x, p);
            Eigen::Map<Eigen::VectorXd>(out, p) = m * xv;
            return;
        }
        case Family::stable_spline_ct:
            throw Error("continuous-time IR kernel applied to a discrete sequence");
    }
}

void IRKernelSpec::apply_ct(const std::vector<double>& grid, const double* x, double* out) const {
    const int p = static_cast<int>(grid.size());
    if (family == Family::stable_spline_ct) {
        std::vector<double> d(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) d[k] = std::exp(-beta * grid[k]);
        max_kernel_apply(d, x, out, p);
        return;
    }
    const Eigen::MatrixXd m = materialize_ct(grid);
    Eigen::Map<const Eigen::VectorXd> xv(x, p);
    Eigen::Map<Eigen::VectorXd>(out, p) = m * xv;
}

bool IRKernelSpec::nonnegative_valued() const {
    switch (family) {
        case Family::stable_spline_discrete:
        case Family::diagonal_ss:
        case Family::stable_spline_ct:
            return true;
        case Family::radial_discrete:
            return shape != RadialShape::cosine;
        case Family::explicit_matrix:
            return (matrix.array() >= 0.0).all();
    }
    return false;
}

std::string IRKernelSpec::describe() const {
    std::ostringstream os;
    switch (family) {
        case Family::stable_spline_discrete: os << "stable_spline(alpha=" << alpha << ")"; break;
        case Family::diagonal_ss: os << "diagonal_ss(alpha=" << alpha << ")"; break;
        case Family::stable_spline_ct: os << "stable_spline_ct(beta=" << beta << ")"; break;
        case Family::explicit_matrix: os << "explicit(" << matrix.rows() << "x" << matrix.cols() << ")"; break;
        case Family::radial_discrete:
            os << "radial(shape="
               << (shape == RadialShape::gaussian ? "gaussian"
                   : shape == RadialShape::laplacian ? "laplacian" : "cosine")
               << ",eta=" << eta << ")";
            break;
    }
    return os.str();
}

int default_truncation(double alpha, double tol) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must be in (0,1)");
    return std::max(1, static_cast<int>(std::ceil(std::log(tol) / std::log(alpha))));
}

// --- KernelSpec -----------------------------------------------------------------

KernelSpec KernelSpec::linear_fir(Eigen::MatrixXd K) {
    KernelSpec k;
    k.family = Family::linear_fir;
    k.fir_matrix = std::move(K);
    k.validate();
    return k;
}

KernelSpec KernelSpec::linear_iir(IRKernelSpec generator, int truncation) {
    KernelSpec k;
    k.family = Family::linear_iir;
    k.generator = std::move(generator);
    k.truncation = truncation;
    k.validate();
    return k;
}

KernelSpec KernelSpec::linear_ct(IRKernelSpec generator, std::vector<double> grid) {
    KernelSpec k;
    k.family = Family::linear_ct;
    k.generator = std::move(generator);
    k.quad_grid = std::move(grid);
    k.validate();
    return k;
}

KernelSpec KernelSpec::gaussian(double eta) {
    KernelSpec k;
    k.family = Family::gaussian;
    k.eta = eta;
    k.validate();
    return k;
}

KernelSpec KernelSpec::laplacian(double eta) {
    KernelSpec k;
    k.family = Family::laplacian;
    k.eta = eta;
    k.validate();
    return k;
}

KernelSpec KernelSpec::nss(double alpha, double eta, int truncation) {
    KernelSpec k;
    k.family = Family::nss;
    k.alpha = alpha;
    k.eta = eta;
    k.truncation = truncation;
    k.validate();
    return k;
}

KernelSpec KernelSpec::sum(KernelSpec left, KernelSpec right) {
    KernelSpec k;
    k.family = Family::sum;
    k.left = std::make_shared<const KernelSpec>(std::move(left));
    k.right = std::make_shared<const KernelSpec>(std::move(right));
    k.validate();
    return k;
}

KernelSpec KernelSpec::product(KernelSpec left, KernelSpec right) {
    KernelSpec k;
    k.family = Family::product;
    k.left = std::make_shared<const KernelSpec>(std::move(left));
    k.right = std::make_shared<const KernelSpec>(std::move(right));
    k.validate();
    return k;
}

KernelSpec KernelSpec::scaled(double s) const {
    KernelSpec k = *this;
    k.scale = scale * s;
    if (!(k.scale > 0.0)) throw Error("kernel scale must be positive");
    return k;
}

namespace {

enum class LocationCategory { vector_only, trajectory_only, either };

LocationCategory category(const KernelSpec& k) {
    switch (k.family) {
        case KernelSpec::Family::linear_fir:
        case KernelSpec::Family::linear_iir:
        case KernelSpec::Family::nss:
            return LocationCategory::vector_only;
        case KernelSpec::Family::linear_ct:
            return LocationCategory::trajectory_only;
        case KernelSpec::Family::gaussian:
        case KernelSpec::Family::laplacian:
            return LocationCategory::either;
        case KernelSpec::Family::sum:
        case KernelSpec::Family::product: {
            const LocationCategory l = category(*k.left);
            const LocationCategory r = category(*k.right);
            if (l == LocationCategory::either) return r;
            if (r == LocationCategory::either) return l;
            if (l != r)
                throw DimensionError("sum/product operands accept incompatible location kinds");
            return l;
        }
    }
    return LocationCategory::either;
}

}  // namespace

void KernelSpec::validate() const {
    if (!(scale > 0.0)) throw Error("kernel scale must be positive");
    switch (family) {
        case Family::linear_fir: {
            if (fir_matrix.rows() == 0 || fir_matrix.rows() != fir_matrix.cols())
                throw Error("FIR kernel matrix must be square and nonempty");
            const double mag = std::max(1.0, fir_matrix.cwiseAbs().maxCoeff());
            if ((fir_matrix - fir_matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * mag)
                throw StructuralError("FIR kernel matrix must be symmetric");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fir_matrix,
                                                              Eigen::EigenvaluesOnly);
            const double min_eig = es.eigenvalues().minCoeff();
            if (min_eig < -1e-10 * std::max(fir_matrix.trace(), 1.0))
                throw Error("FIR kernel matrix is not positive semidefinite");
            break;
        }
        case Family::linear_iir:
            generator.validate();
            if (truncation < 1) throw Error("IIR kernel truncation must be >= 1");
            break;
        case Family::linear_ct:
            generator.validate();
            if (quad_grid.size() < 2) throw Error("CT kernel needs a quadrature grid (>= 2 lags)");
            if (quad_grid.front() < 0.0 ||
                !std::is_sorted(quad_grid.begin(), quad_grid.end()))
                throw Error("CT quadrature grid must ascend from tau >= 0");
            break;
        case Family::gaussian:
        case Family::laplacian:
            if (!(eta > 0.0)) throw Error("radial kernel eta must be positive");
            break;
        case Family::nss:
            if (!(alpha > 0.0 && alpha < 1.0)) throw Error("NSS alpha must be in (0,1)");
            if (!(eta > 0.0)) throw Error("NSS eta must be positive");
            if (truncation < 1) throw Error("NSS truncation must be >= 1");
            break;
        case Family::sum:
        case Family::product:
            if (!left || !right) throw Error("composed kernel missing an operand");
            left->validate();
            right->validate();
            category(*this);  // throws on incompatible operands
            break;
    }
}

bool KernelSpec::is_linear() const {
    return family == Family::linear_fir || family == Family::linear_iir ||
           family == Family::linear_ct;
}

std::string KernelSpec::describe() const {
    std::ostringstream os;
    switch (family) {
        case Family::linear_fir: os << "linear_fir(m=" << fir_matrix.rows() << ")"; break;
        case Family::linear_iir:
            os << "linear_iir(" << generator.describe() << ",p=" << truncation << ")";
            break;
        case Family::linear_ct:
            os << "linear_ct(" << generator.describe() << ",grid=" << quad_grid.size() << ")";
            break;
        case Family::gaussian: os << "gaussian(eta=" << eta << ")"; break;
        case Family::laplacian: os << "laplacian(eta=" << eta << ")"; break;
        case Family::nss:
            os << "nss(alpha=" << alpha << ",eta=" << eta << ",p=" << truncation << ")";
            break;
        case Family::sum: os << "sum(" << left->describe() << "," << right->describe() << ")"; break;
        case Family::product:
            os << "product(" << left->describe() << "," << right->describe() << ")";
            break;
    }
    if (scale != 1.0) os << "*" << scale;
    return os.str();
}

// --- evaluation engine ------------------------------------------------------------

namespace {

void check_location(const KernelSpec& k, const InputLocation& loc) {
    switch (k.family) {
        case KernelSpec::Family::linear_fir:
            if (loc.kind == InputLocation::Kind::sampled_trajectory)
                throw DimensionError("FIR kernel expects a lag-vector location");
            if (static_cast<Eigen::Index>(loc.dim()) != k.fir_matrix.rows())
                throw DimensionError("location dimension does not match the FIR kernel matrix");
            break;
        case KernelSpec::Family::linear_iir:
        case KernelSpec::Family::nss:
            if (loc.kind == InputLocation::Kind::sampled_trajectory)
                throw DimensionError("discrete linear kernel expects a lag-vector location");
            if (static_cast<int>(loc.dim()) != k.truncation)
                throw DimensionError("location must be truncated at p = " +
                                     std::to_string(k.truncation));
            break;
        case KernelSpec::Family::linear_ct: {
            if (loc.kind != InputLocation::Kind::sampled_trajectory)
                throw DimensionError("CT kernel expects a sampled-trajectory location");
            if (loc.grid.size() != k.quad_grid.size())
                throw DimensionError("location grid does not match the kernel quadrature grid");
            for (std::size_t i = 0; i < loc.grid.size(); ++i)
                if (std::abs(loc.grid[i] - k.quad_grid[i]) > 1e-9)
                    throw DimensionError("location grid does not match the kernel quadrature grid");
            break;
        }
        default:
            break;
    }
}

std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
    const std::size_t p = grid.size();
    std::vector<double> w(p, 0.0);
    if (p < 2) return w;
    w[0] = 0.5 * (grid[1] - grid[0]);
    for (std::size_t k = 1; k + 1 < p; ++k) w[k] = 0.5 * (grid[k + 1] - grid[k - 1]);
    w[p - 1] = 0.5 * (grid[p - 1] - grid[p - 2]);
    return w;
}

// Column matrix of location values.
Eigen::MatrixXd values_matrix(const std::vector<InputLocation>& locs) {
    const auto n = static_cast<Eigen::Index>(locs.size());
    const auto p = static_cast<Eigen::Index>(locs.front().dim());
    Eigen::MatrixXd X(p, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (static_cast<Eigen::Index>(locs[static_cast<std::size_t>(j)].dim()) != p)
            throw DimensionError("locations have inhomogeneous dimensions");
        for (Eigen::Index i = 0; i < p; ++i)
            X(i, j) = locs[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)];
    }
    return X;
}

// Pairwise assembly. When symmetric, a and b are the same set and only the
// upper triangle is computed.
Eigen::MatrixXd assemble(const KernelSpec& k, const std::vector<InputLocation>& a,
                         const std::vector<InputLocation>& b, bool symmetric);

Eigen::MatrixXd assemble_pairwise(Eigen::Index na, Eigen::Index nb, bool symmetric,
                                  const std::function<double(Eigen::Index, Eigen::Index)>& f) {
    Eigen::MatrixXd G(na, nb);
    if (symmetric) {
        for (Eigen::Index i = 0; i < na; ++i)
            for (Eigen::Index j = i; j < nb; ++j) G(i, j) = G(j, i) = f(i, j);
    } else {
        for (Eigen::Index i = 0; i < na; ++i)
            for (Eigen::Index j = 0; j < nb; ++j) G(i, j) = f(i, j);
    }
    return G;
}

Eigen::MatrixXd assemble(const KernelSpec& k, const std::vector<InputLocation>& a,
                         const std::vector<InputLocation>& b, bool symmetric) {
    if (a.empty() || b.empty()) throw Error("kernel matrix needs nonempty location sets");
    for (const auto& loc : a) check_location(k, loc);
    if (!symmetric)
        for (const auto& loc : b) check_location(k, loc);

    const auto na = static_cast<Eigen::Index>(a.size());
    const auto nb = static_cast<Eigen::Index>(b.size());
    const double scale = k.scale;

    switch (k.family) {
        case KernelSpec::Family::linear_fir: {
            const Eigen::MatrixXd Xa = values_matrix(a);
            const Eigen::MatrixXd Xb = symmetric ? Xa : values_matrix(b);
            const Eigen::MatrixXd Wb = k.fir_matrix * Xb;
            const auto p = static_cast<std::size_t>(Xa.rows());
            return assemble_pairwise(na, nb, symmetric, [&](Eigen::Index i, Eigen::Index j) {
                return scale * simd::dot(Xa.col(i).data(), Wb.col(j).data(), p);
            });
        }
        case KernelSpec::Family::linear_iir: {
            const Eigen::MatrixXd Xa = values_matrix(a);
            const Eigen::MatrixXd Xb = symmetric ? Xa : values_matrix(b);
            const int p = k.truncation;
            Eigen::MatrixXd Wb(p, nb);
            for (Eigen::Index j = 0; j < nb; ++j)
                k.generator.apply(Xb.col(j).data(), Wb.col(j).data(), p);
            return assemble_pairwise(na, nb, symmetric, [&](Eigen::Index i, Eigen::Index j) {
                return scale * simd::dot(Xa.col(i).data(), Wb.col(j).data(),
                                         static_cast<std::size_t>(p));
            });
        }
        case KernelSpec::Family::linear_ct: {
            const std::vector<double> w = trapezoid_weights(k.quad_grid);
            const int p = static_cast<int>(k.quad_grid.size());
            const auto weighted = [&](const std::vector<InputLocation>& locs) {
                Eigen::MatrixXd M(p, static_cast<Eigen::Index>(locs.size()));
                for (Eigen::Index j = 0; j < M.cols(); ++j)
                    for (int i = 0; i < p; ++i)
                        M(i, j) = w[static_cast<std::size_t>(i)] *
                                  locs[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)];
                return M;
            };
            const Eigen::MatrixXd Oa = weighted(a);
            const Eigen::MatrixXd Ob = symmetric ? Oa : weighted(b);
            Eigen::MatrixXd Zb(p, nb);
            for (Eigen::Index j = 0; j < nb; ++j)
                k.generator.apply_ct(k.quad_grid, Ob.col(j).data(), Zb.col(j).data());
            return assemble_pairwise(na, nb, symmetric, [&](Eigen::Index i, Eigen::Index j) {
                return scale * simd::dot(Oa.col(i).data(), Zb.col(j).data(),
                                         static_cast<std::size_t>(p));
            });
        }
        case KernelSpec::Family::gaussian:
        case KernelSpec::Family::laplacian: {
            const Eigen::MatrixXd Xa = values_matrix(a);
            const Eigen::MatrixXd Xb = symmetric ? Xa : values_matrix(b);
            if (Xa.rows() != Xb.rows())
                throw DimensionError("radial kernel locations have different dimensions");
            const auto p = static_cast<std::size_t>(Xa.rows());
            const bool squared = k.family == KernelSpec::Family::gaussian;
            const double eta = k.eta;
            return assemble_pairwise(na, nb, symmetric, [&](Eigen::Index i, Eigen::Index j) {
                const double d2 = simd::squared_distance(Xa.col(i).data(), Xb.col(j).data(), p);
                return scale * std::exp(-(squared ? d2 : std::sqrt(d2)) / eta);
            });
        }
        case KernelSpec::Family::nss: {
            const Eigen::MatrixXd Xa = values_matrix(a);
            const Eigen::MatrixXd Xb = symmetric ? Xa : values_matrix(b);
            const int p = k.truncation;
            const IRKernelSpec ss = IRKernelSpec::stable_spline(k.alpha);
            Eigen::MatrixXd Wb(p, nb);
            Eigen::VectorXd qb(nb);
            for (Eigen::Index j = 0; j < nb; ++j) {
                ss.apply(Xb.col(j).data(), Wb.col(j).data(), p);
                qb(j) = simd::dot(Xb.col(j).data(), Wb.col(j).data(), static_cast<std::size_t>(p));
            }
            Eigen::VectorXd qa;
            if (symmetric) {
                qa = qb;
            } else {
                qa.resize(na);
                std::vector<double> tmp(static_cast<std::size_t>(p));
                for (Eigen::Index i = 0; i < na; ++i) {
                    ss.apply(Xa.col(i).data(), tmp.data(), p);
                    qa(i) = simd::dot(Xa.col(i).data(), tmp.data(), static_cast<std::size_t>(p));
                }
            }
            const double eta = k.eta;
            return assemble_pairwise(na, nb, symmetric, [&](Eigen::Index i, Eigen::Index j) {
                const double lin =
                    simd::dot(Xa.col(i).data(), Wb.col(j).data(), static_cast<std::size_t>(p));
                const double quad = qa(i) + qb(j) - 2.0 * lin;
                return scale * lin * std::exp(-quad / eta);
            });
        }
        case KernelSpec::Family::sum: {
            Eigen::MatrixXd G = assemble(*k.left, a, b, symmetric);
            G += assemble(*k.right, a, b, symmetric);
            return scale * G;
        }
        case KernelSpec::Family::product: {
            Eigen::MatrixXd G = assemble(*k.left, a, b, symmetric);
            G = G.cwiseProduct(assemble(*k.right, a, b, symmetric));
            return scale * G;
        }
    }
    throw Error("unhandled kernel family");
}

}  // namespace

double eval(const KernelSpec& kernel, const InputLocation& a, const InputLocation& x) {
    const std::vector<InputLocation> va{a};
    const std::vector<InputLocation> vx{x};
    return assemble(kernel, va, vx, false)(0, 0);
}

GramMatrix gram(const KernelSpec& kernel, const std::vector<InputLocation>& locations) {
    GramMatrix g;
    g.entries = assemble(kernel, locations, locations, true);
    g.source = kernel.describe();
    return g;
}

Eigen::MatrixXd cross_gram(const KernelSpec& kernel, const std::vector<InputLocation>& a,
                           const std::vector<InputLocation>& b) {
    return assemble(kernel, a, b, false);
}

PsdReport psd_check(const GramMatrix& g, double tol) {
    const Eigen::MatrixXd& m = g.entries;
    if (m.rows() != m.cols()) throw StructuralError("gram matrix must be square");
    const double mag = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * mag)
        throw StructuralError("gram matrix asymmetric beyond 1e-12");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    PsdReport report;
    report.min_eigenvalue = es.eigenvalues().minCoeff();
    report.trace = m.trace();
    report.tol = tol;
    report.psd = report.min_eigenvalue >= -tol * std::max(report.trace, 0.0);
    return report;
}

double quadratic_norm(const IRKernelSpec& K, const Eigen::VectorXd& theta) {
    const int p = static_cast<int>(theta.size());
    if (p == 0) return 0.0;
    const Eigen::MatrixXd M = K.materialize(p);
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) {
        // locate the deficient dimension for the error message
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        int dim = 0;
        double dmin = std::numeric_limits<double>::infinity();
        const Eigen::VectorXd d = ldlt.vectorD();
        for (int i = 0; i < p; ++i)
            if (d(i) < dmin) {
                dmin = d(i);
                dim = i;
            }
        throw RankError("IR kernel block is singular (dimension " + std::to_string(dim) + ")",
                        dim);
    }
    const Eigen::VectorXd y = llt.matrixL().solve(theta);
    return y.squaredNorm();
}

// --- JSON ------------------------------------------------------------------------

namespace {

json ir_to_json(const IRKernelSpec& k) {
    json j;
    switch (k.family) {
        case IRKernelSpec::Family::stable_spline_discrete:
            j["family"] = "stable_spline_discrete";
            j["alpha"] = k.alpha;
            break;
        case IRKernelSpec::Family::diagonal_ss:
            j["family"] = "diagonal_ss";
            j["alpha"] = k.alpha;
            break;
        case IRKernelSpec::Family::stable_spline_ct:
            j["family"] = "stable_spline_ct";
            j["beta"] = k.beta;
            break;
        case IRKernelSpec::Family::explicit_matrix: {
            j["family"] = "explicit";
            json rows = json::array();
            for (Eigen::Index i = 0; i < k.matrix.rows(); ++i) {
                json row = json::array();
                for (Eigen::Index c = 0; c < k.matrix.cols(); ++c) row.push_back(k.matrix(i, c));
                rows.push_back(std::move(row));
            }
            j["matrix"] = std::move(rows);
            break;
        }
        case IRKernelSpec::Family::radial_discrete:
            j["family"] = "radial_discrete";
            j["shape"] = k.shape == IRKernelSpec::RadialShape::gaussian    ? "gaussian"
                         : k.shape == IRKernelSpec::RadialShape::laplacian ? "laplacian"
                                                                           : "cosine";
            j["eta"] = k.eta;
            break;
    }
    return j;
}

IRKernelSpec ir_from_json(const json& j) {
    const std::string family = j.at("family").get<std::string>();
    if (family == "stable_spline_discrete")
        return IRKernelSpec::stable_spline(j.at("alpha").get<double>());
    if (family == "diagonal_ss") return IRKernelSpec::diagonal(j.at("alpha").get<double>());
    if (family == "stable_spline_ct")
        return IRKernelSpec::stable_spline_ct(j.at("beta").get<double>());
    if (family == "explicit") {
        const auto& rows = j.at("matrix");
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index c = 0; c < n; ++c)
                m(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]
                              .get<double>();
        return IRKernelSpec::explicit_matrix(std::move(m));
    }
    if (family == "radial_discrete") {
        const std::string shape = j.at("shape").get<std::string>();
        IRKernelSpec::RadialShape s = shape == "gaussian"    ? IRKernelSpec::RadialShape::gaussian
                                      : shape == "laplacian" ? IRKernelSpec::RadialShape::laplacian
                                                             : IRKernelSpec::RadialShape::cosine;
        return IRKernelSpec::radial(s, j.at("eta").get<double>());
    }
    throw ConfigError("unknown IR kernel family: " + family);
}

json kernel_to_json(const KernelSpec& k) {
    json j;
    switch (k.family) {
        case KernelSpec::Family::linear_fir: {
            j["family"] = "linear_fir";
            json rows = json::array();
            for (Eigen::Index i = 0; i < k.fir_matrix.rows(); ++i) {
                json row = json::array();
                for (Eigen::Index c = 0; c < k.fir_matrix.cols(); ++c)
                    row.push_back(k.fir_matrix(i, c));
                rows.push_back(std::move(row));
            }
            j["matrix"] = std::move(rows);
            break;
        }
        case KernelSpec::Family::linear_iir:
            j["family"] = "linear_iir";
            j["generator"] = ir_to_json(k.generator);
            j["truncation"] = k.truncation;
            break;
        case KernelSpec::Family::linear_ct:
            j["family"] = "linear_ct";
            j["generator"] = ir_to_json(k.generator);
            j["grid"] = k.quad_grid;
            break;
        case KernelSpec::Family::gaussian:
            j["family"] = "gaussian";
            j["eta"] = k.eta;
            break;
        case KernelSpec::Family::laplacian:
            j["family"] = "laplacian";
            j["eta"] = k.eta;
            break;
        case KernelSpec::Family::nss:
            j["family"] = "nss";
            j["alpha"] = k.alpha;
            j["eta"] = k.eta;
            j["truncation"] = k.truncation;
            break;
        case KernelSpec::Family::sum:
        case KernelSpec::Family::product:
            j["family"] = k.family == KernelSpec::Family::sum ? "sum" : "product";
            j["left"] = kernel_to_json(*k.left);
            j["right"] = kernel_to_json(*k.right);
            break;
    }
    if (k.scale != 1.0) j["scale"] = k.scale;
    return j;
}

KernelSpec kernel_from_json(const json& j) {
    const std::string family = j.at("family").get<std::string>();
    KernelSpec k;
    if (family == "linear_fir") {
        const auto& rows = j.at("matrix");
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index c = 0; c < n; ++c)
                m(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]
                              .get<double>();
        k = KernelSpec::linear_fir(std::move(m));
    } else if (family == "linear_iir") {
        k = KernelSpec::linear_iir(ir_from_json(j.at("generator")), j.at("truncation").get<int>());
    } else if (family == "linear_ct") {
        k = KernelSpec::linear_ct(ir_from_json(j.at("generator")),
                                  j.at("grid").get<std::vector<double>>());
    } else if (family == "gaussian") {
        k = KernelSpec::gaussian(j.at("eta").get<double>());
    } else if (family == "laplacian") {
        k = KernelSpec::laplacian(j.at("eta").get<double>());
    } else if (family == "nss") {
        k = KernelSpec::nss(j.at("alpha").get<double>(), j.at("eta").get<double>(),
                            j.at("truncation").get<int>());
    } else if (family == "sum") {
        k = KernelSpec::sum(kernel_from_json(j.at("left")), kernel_from_json(j.at("right")));
    } else if (family == "product") {
        k = KernelSpec::product(kernel_from_json(j.at("left")), kernel_from_json(j.at("right")));
    } else {
        throw ConfigError("unknown kernel family: " + family);
    }
    if (j.contains("scale")) k = k.scaled(j.at("scale").get<double>());
    return k;
}

}  // namespace

std::string to_json_string(const KernelSpec& spec, int indent) {
    return kernel_to_json(spec).dump(indent);
}

KernelSpec kernel_from_json_string(const std::string& text) {
    try {
        return kernel_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid kernel JSON: ") + e.what());
    }
}

KernelSpec load_kernel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open kernel file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return kernel_from_json_string(ss.str());
}

void save_kernel(const KernelSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write kernel file: " + path);
    out << to_json_string(spec) << "\n";
}

}  // namespace rkhsid::kernels
