#include "rkhsid/hyper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "rkhsid/parallel.hpp"
#include "rkhsid/rn.hpp"
#include "rkhsid/rng.hpp"

namespace rkhsid::hyper {

double nll(const Eigen::VectorXd& Y, const kernels::GramMatrix& gram, double lambda,
           double sigma2) {
    if (!(lambda > 0.0) || !(sigma2 > 0.0)) throw Error("lambda and sigma2 must be positive");
    const auto n = gram.entries.rows();
    if (Y.size() != n) throw DimensionError("Y does not match the gram matrix");

    Eigen::MatrixXd Z = lambda * gram.entries;
    Z.diagonal().array() += sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt(Z);
    if (llt.info() != Eigen::Success) {
        Z.diagonal().array() += 1e-12 * std::max(Z.trace(), 1.0);
        llt.compute(Z);
        if (llt.info() != Eigen::Success)
            throw ConditioningError("evidence covariance factorization failed",
                                    Z.trace() / sigma2);
    }
    double logdet = 0.0;
    const auto& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(L(i, i));
    logdet *= 2.0;
    const double quad = Y.dot(llt.solve(Y));
    return 0.5 * logdet + 0.5 * quad + 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

KernelFamily family_from_name(const std::string& name) {
    if (name == "nss") return KernelFamily::nss;
    if (name == "gaussian") return KernelFamily::gaussian;
    throw ConfigError("unknown kernel family for tuning: " + name);
}

// --- Nelder-Mead ------------------------------------------------------------------

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, double step, int max_evals,
                             double tol) {
    const int d = static_cast<int>(x0.size());
    NelderMeadResult out;

    std::vector<Eigen::VectorXd> xs;
    std::vector<double> fs;
    xs.reserve(static_cast<std::size_t>(d) + 1);
    xs.push_back(x0);
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXd v = x0;
        v(i) += step;
        xs.push_back(v);
    }
    for (const auto& x : xs) fs.push_back(f(x));
    out.evals = d + 1;

    std::vector<int> order(xs.size());
    const auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[static_cast<std::size_t>(a)] < fs[static_cast<std::size_t>(b)]; });
    };
    sort_simplex();
    out.best_trace.push_back(fs[static_cast<std::size_t>(order[0])]);

    while (out.evals < max_evals) {
        const int best = order[0];
        const int worst = order[static_cast<std::size_t>(d)];
        const int second_worst = order[static_cast<std::size_t>(d - 1)];

        if (std::abs(fs[static_cast<std::size_t>(worst)] - fs[static_cast<std::size_t>(best)]) <=
            tol * (std::abs(fs[static_cast<std::size_t>(best)]) + tol))
            break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (int i = 0; i <= d; ++i)
            if (order[static_cast<std::size_t>(i)] != worst)
                centroid += xs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        centroid /= static_cast<double>(d);

        const Eigen::VectorXd xr = centroid + (centroid - xs[static_cast<std::size_t>(worst)]);
        const double fr = f(xr);
        ++out.evals;

        if (fr < fs[static_cast<std::size_t>(best)]) {
            const Eigen::VectorXd xe =
                centroid + 2.0 * (centroid - xs[static_cast<std::size_t>(worst)]);
            const double fe = f(xe);
            ++out.evals;
            if (fe < fr) {
                xs[static_cast<std::size_t>(worst)] = xe;
                fs[static_cast<std::size_t>(worst)] = fe;
            } else {
                xs[static_cast<std::size_t>(worst)] = xr;
                fs[static_cast<std::size_t>(worst)] = fr;
            }
        } else if (fr < fs[static_cast<std::size_t>(second_worst)]) {
            xs[static_cast<std::size_t>(worst)] = xr;
            fs[static_cast<std::size_t>(worst)] = fr;
        } else {
            const bool outside = fr < fs[static_cast<std::size_t>(worst)];
            Eigen::VectorXd xc;
            if (outside)
                xc = centroid + 0.5 * (xr - centroid);
            else
                xc = centroid - 0.5 * (centroid - xs[static_cast<std::size_t>(worst)]);
            const double fc = f(xc);
            ++out.evals;
            if (fc < std::min(fr, fs[static_cast<std::size_t>(worst)])) {
                xs[static_cast<std::size_t>(worst)] = xc;
                fs[static_cast<std::size_t>(worst)] = fc;
            } else {
                // shrink toward the best vertex
                for (int i = 1; i <= d; ++i) {
                    const int idx = order[static_cast<std::size_t>(i)];
                    xs[static_cast<std::size_t>(idx)] =
                        xs[static_cast<std::size_t>(best)] +
                        0.5 * (xs[static_cast<std::size_t>(idx)] - xs[static_cast<std::size_t>(best)]);
                    fs[static_cast<std::size_t>(idx)] = f(xs[static_cast<std::size_t>(idx)]);
                    ++out.evals;
                }
            }
        }
        sort_simplex();
        out.best_trace.push_back(fs[static_cast<std::size_t>(order[0])]);
    }

    sort_simplex();
    out.x = xs[static_cast<std::size_t>(order[0])];
    out.value = fs[static_cast<std::size_t>(order[0])];
    return out;
}

// --- tune_ml ----------------------------------------------------------------------

namespace {

struct ParamSpace {
    std::vector<std::string> names;
    std::vector<Bounds> log_bounds;  // bounds of log(param)
};

ParamSpace make_space(KernelFamily family, const TuneOptions& opt) {
    ParamSpace s;
    const auto logb = [](const Bounds& b) { return Bounds{std::log(b.lo), std::log(b.hi)}; };
    if (family == KernelFamily::nss) {
        s.names = {"alpha", "eta", "lambda", "sigma2"};
        s.log_bounds = {logb(opt.alpha_bounds), logb(opt.eta_bounds), logb(opt.lambda_bounds),
                        logb(opt.sigma2_bounds)};
    } else {
        s.names = {"eta", "lambda", "sigma2"};
        s.log_bounds = {logb(opt.eta_bounds), logb(opt.lambda_bounds), logb(opt.sigma2_bounds)};
    }
    return s;
}

double halton(int index, int base) {
    double f = 1.0, r = 0.0;
    for (int i = index; i > 0; i /= base) {
        f /= base;
        r += f * (i % base);
    }
    return r;
}

// Objective over log-parameters. The Gram for the current kernel
// hyperparameters is cached, so moves that only change (lambda, sigma2)
// skip the assembly.
class Objective {
  public:
    Objective(KernelFamily family, const Dataset& data, const ParamSpace& space)
        : family_(family), data_(data), space_(space),
          dim_(static_cast<int>(data.locations.front().dim())) {}

    kernels::KernelSpec kernel_for(const std::vector<double>& params) const {
        if (family_ == KernelFamily::nss)
            return kernels::KernelSpec::nss(params[0], params[1], dim_);
        return kernels::KernelSpec::gaussian(params[0]);
    }

    double operator()(const Eigen::VectorXd& xlog) {
        // project into the box; a steep penalty keeps the simplex inside
        Eigen::VectorXd xc = xlog;
        double dist = 0.0;
        for (int i = 0; i < xc.size(); ++i) {
            const auto& b = space_.log_bounds[static_cast<std::size_t>(i)];
            const double clamped = std::clamp(xc(i), b.lo, b.hi);
            dist += std::abs(xc(i) - clamped);
            xc(i) = clamped;
        }
        std::vector<double> params(static_cast<std::size_t>(xc.size()));
        for (int i = 0; i < xc.size(); ++i) params[static_cast<std::size_t>(i)] = std::exp(xc(i));

        const double lambda = params[params.size() - 2];
        const double sigma2 = params[params.size() - 1];
        const std::size_t nk = params.size() - 2;  // kernel hyperparameters

        if (!gram_valid_ || !std::equal(params.begin(), params.begin() + static_cast<long>(nk),
                                        cached_kernel_params_.begin())) {
            cached_kernel_params_.assign(params.begin(), params.begin() + static_cast<long>(nk));
            gram_ = kernels::gram(kernel_for(params), data_.locations);
            gram_valid_ = true;
        }
        double value;
        try {
            value = nll(data_.outputs, gram_, lambda, sigma2);
        } catch (const Error&) {
            return 1e30;
        }
        if (!std::isfinite(value)) return 1e30;
        return value + 1e3 * dist + 1e3 * dist * dist;
    }

  private:
    KernelFamily family_;
    const Dataset& data_;
    const ParamSpace& space_;
    int dim_;
    bool gram_valid_ = false;
    std::vector<double> cached_kernel_params_;
    kernels::GramMatrix gram_;
};

HyperPoint point_from_log(const ParamSpace& space, const Eigen::VectorXd& xlog) {
    // vertices may sit just outside the box (the objective clamps); the
    // reported point is the clamped one
    Eigen::VectorXd xc = xlog;
    HyperPoint p;
    for (Eigen::Index i = 0; i < xc.size(); ++i) {
        const auto& b = space.log_bounds[static_cast<std::size_t>(i)];
        xc(i) = std::clamp(xc(i), b.lo, b.hi);
        if (std::abs(xc(i) - b.lo) < 5e-2 || std::abs(xc(i) - b.hi) < 5e-2) p.at_boundary = true;
    }
    for (std::size_t i = 0; i + 2 < space.names.size(); ++i)
        p.kernel_params[space.names[i]] = std::exp(xc(static_cast<Eigen::Index>(i)));
    p.lambda = std::exp(xc(xc.size() - 2));
    p.sigma2 = std::exp(xc(xc.size() - 1));
    return p;
}

}  // namespace

TuneResult tune_ml(KernelFamily family, const Dataset& data, const TuneOptions& options) {
    data.validate();
    if (options.starts < 1) throw Error("tune_ml needs starts >= 1");
    const ParamSpace space = make_space(family, options);
    const int d = static_cast<int>(space.names.size());
    const auto n = static_cast<double>(data.size());

    // low-discrepancy starting points, rotated by a seed-derived shift
    Rng shift_rng(derive_seed(options.seed, 0x5ee));
    std::vector<double> shift(static_cast<std::size_t>(d));
    for (double& s : shift) s = shift_rng.uniform();
    static const int bases[] = {2, 3, 5, 7, 11, 13};

    std::vector<StartRecord> records(static_cast<std::size_t>(options.starts));
    parallel_for(options.starts, options.workers, [&](int s) {
        Eigen::VectorXd x0(d);
        for (int i = 0; i < d; ++i) {
            double u = halton(s + 1, bases[i]) + shift[static_cast<std::size_t>(i)];
            u -= std::floor(u);
            const auto& b = space.log_bounds[static_cast<std::size_t>(i)];
            // keep starts off the exact box edge
            x0(i) = b.lo + (0.05 + 0.9 * u) * (b.hi - b.lo);
        }
        Objective obj(family, data, space);
        const auto fn = [&obj](const Eigen::VectorXd& x) { return obj(x); };

        // Nelder-Mead with restart rounds: a fresh, smaller simplex at the
        // incumbent recovers progress when the simplex collapses inside a
        // narrow valley.
        StartRecord rec;
        rec.initial = point_from_log(space, x0);
        Eigen::VectorXd x = x0;
        double step = 0.35;
        double value = std::numeric_limits<double>::infinity();
        int budget = options.max_evals_per_start;
        for (int round = 0; round < 4 && budget > 2 * d + 2; ++round) {
            const NelderMeadResult nm = nelder_mead(fn, x, step, budget, options.tol);
            budget -= nm.evals;
            rec.evals += nm.evals;
            rec.best_trace.insert(rec.best_trace.end(), nm.best_trace.begin(),
                                  nm.best_trace.end());
            const bool improved = nm.value < value - 1e-9 * (1.0 + std::abs(nm.value));
            if (nm.value < value) {
                value = nm.value;
                x = nm.x;
            }
            if (round > 0 && !improved) break;
            step = std::max(step / 3.0, 0.05);
        }
        // running best across restart rounds
        for (std::size_t i = 1; i < rec.best_trace.size(); ++i)
            rec.best_trace[i] = std::min(rec.best_trace[i], rec.best_trace[i - 1]);
        rec.best = point_from_log(space, x);
        rec.nll_value = value;
        records[static_cast<std::size_t>(s)] = std::move(rec);
    });

    int best_idx = -1;
    for (int s = 0; s < options.starts; ++s)
        if (std::isfinite(records[static_cast<std::size_t>(s)].nll_value) &&
            (best_idx < 0 || records[static_cast<std::size_t>(s)].nll_value <
                                 records[static_cast<std::size_t>(best_idx)].nll_value))
            best_idx = s;
    if (best_idx < 0) throw TuningError("no tuning start produced a finite marginal likelihood");

    TuneResult result;
    result.best = records[static_cast<std::size_t>(best_idx)].best;
    result.nll_value = records[static_cast<std::size_t>(best_idx)].nll_value;
    result.starts_tried = options.starts;
    result.trace = std::move(records);

    std::vector<double> params;
    for (std::size_t i = 0; i + 2 < space.names.size(); ++i)
        params.push_back(result.best.kernel_params.at(space.names[i]));
    params.push_back(result.best.lambda);
    params.push_back(result.best.sigma2);
    const Objective builder(family, data, space);
    result.rn_kernel = builder.kernel_for(params).scaled(result.best.lambda);
    result.rn_gamma = result.best.sigma2 / n;
    return result;
}

// --- oracle ------------------------------------------------------------------------

OracleResult oracle_select_m(const Signal& u_train, const Signal& y_train,
                             const Signal& u_test, const Signal& y_test_noiseless,
                             const std::vector<int>& m_grid, const TuneOptions& options) {
    if (m_grid.empty()) throw Error("oracle needs a nonempty m grid");

    OracleResult out;
    out.m_grid = m_grid;
    out.fits.assign(m_grid.size(), std::numeric_limits<double>::quiet_NaN());
    out.errors.assign(m_grid.size(), "");

    Eigen::VectorXd y_test(static_cast<Eigen::Index>(y_test_noiseless.size()));
    for (Eigen::Index i = 0; i < y_test.size(); ++i)
        y_test(i) = y_test_noiseless.samples[static_cast<std::size_t>(i)];

    for (std::size_t gi = 0; gi < m_grid.size(); ++gi) {
        const int m = m_grid[gi];
        try {
            Dataset train;
            train.locations = make_regressors(u_train, m, 0, y_train.start_index,
                                              y_train.start_index +
                                                  static_cast<std::int64_t>(y_train.size()) - 1);
            train.outputs.resize(static_cast<Eigen::Index>(y_train.size()));
            for (Eigen::Index i = 0; i < train.outputs.size(); ++i)
                train.outputs(i) = y_train.samples[static_cast<std::size_t>(i)];

            TuneOptions per_m = options;
            per_m.seed = derive_seed(options.seed, 1000 + static_cast<std::uint64_t>(m));
            const TuneResult tuned = tune_ml(KernelFamily::gaussian, train, per_m);

            const rn::RNModel model = rn::fit_rn(tuned.rn_kernel, train, tuned.rn_gamma);
            const std::vector<InputLocation> test_locs = make_regressors(
                u_test, m, 0, y_test_noiseless.start_index,
                y_test_noiseless.start_index + static_cast<std::int64_t>(y_test_noiseless.size()) -
                    1);
            const Eigen::VectorXd y_hat = rn::predict(model, test_locs);
            out.fits[gi] = fit_metric(y_test, y_hat);
        } catch (const Error& e) {
            out.errors[gi] = e.what();  // recorded, m skipped
        }
    }

    int best = -1;
    for (std::size_t gi = 0; gi < m_grid.size(); ++gi)
        if (std::isfinite(out.fits[gi]) &&
            (best < 0 || out.fits[gi] > out.fits[static_cast<std::size_t>(best)]))
            best = static_cast<int>(gi);
    if (best < 0) throw TuningError("oracle: every m failed");
    out.best_m = m_grid[static_cast<std::size_t>(best)];
    out.best_fit = out.fits[static_cast<std::size_t>(best)];
    return out;
}

}  // namespace rkhsid::hyper
