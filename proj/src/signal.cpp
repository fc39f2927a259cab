#include "rkhsid/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "rkhsid/rng.hpp"
#include "rkhsid/simd.hpp"

namespace rkhsid {

// --- Signal ------------------------------------------------------------------

void Signal::validate() const {
    if (samples.empty()) throw Error("signal must have at least one sample");
    if (!(sample_period > 0.0)) throw Error("sample period must be positive");
    for (double v : samples)
        if (!std::isfinite(v)) throw Error("signal contains a non-finite sample");
}

double Signal::value_at(double t) const {
    const double pos = t / sample_period - static_cast<double>(start_index);
    const double eps = 1e-9;
    if (pos < -eps || pos > static_cast<double>(samples.size() - 1) + eps)
        throw BoundaryError("time " + std::to_string(t) + " outside signal support [" +
                            std::to_string(first_time()) + ", " + std::to_string(last_time()) +
                            "]");
    const double r = std::round(pos);
    if (std::abs(pos - r) < eps) {
        const auto i = static_cast<std::size_t>(std::clamp(
            r, 0.0, static_cast<double>(samples.size() - 1)));
        return samples[i];
    }
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * samples[lo] + w * samples[lo + 1];
}

// --- LinearSystem --------------------------------------------------------------

double LinearSystem::l2_norm() const {
    return std::sqrt(simd::dot(impulse_response.data(), impulse_response.data(),
                               impulse_response.size()));
}

std::vector<double> LinearSystem::lag0_coefficients() const {
    std::vector<double> out(static_cast<std::size_t>(first_lag), 0.0);
    out.insert(out.end(), impulse_response.begin(), impulse_response.end());
    return out;
}

void Dataset::validate() const {
    if (locations.empty()) throw Error("dataset must be nonempty");
    if (static_cast<Eigen::Index>(locations.size()) != outputs.size())
        throw Error("dataset locations/outputs length mismatch");
    if (!timestamps.empty() && timestamps.size() != locations.size())
        throw Error("dataset timestamps length mismatch");
}

// --- regressors ----------------------------------------------------------------

std::vector<InputLocation> make_regressors(const Signal& u, std::optional<int> memory,
                                           int horizon, std::int64_t t_begin,
                                           std::int64_t t_end, bool zero_pad) {
    u.validate();
    const int len = memory ? *memory : horizon;
    if (len < 1) throw Error("regressor length must be >= 1");
    if (t_end < t_begin) throw Error("empty regressor window");

    const std::int64_t n = static_cast<std::int64_t>(u.size());
    const std::int64_t first_full = u.start_index + len - 1;
    if (!zero_pad && t_begin < first_full)
        throw BoundaryError("window needs lags before the signal start; first valid t is " +
                            std::to_string(first_full));
    if (t_begin < u.start_index || t_end > u.start_index + n - 1)
        throw BoundaryError("window [" + std::to_string(t_begin) + ", " + std::to_string(t_end) +
                            "] outside signal range");

    const auto kind =
        memory ? InputLocation::Kind::finite_memory : InputLocation::Kind::truncated_infinite;
    std::vector<InputLocation> out;
    out.reserve(static_cast<std::size_t>(t_end - t_begin + 1));
    for (std::int64_t t = t_begin; t <= t_end; ++t) {
        InputLocation loc;
        loc.kind = kind;
        loc.values.resize(static_cast<std::size_t>(len));
        const std::int64_t newest = t - u.start_index;
        for (int k = 0; k < len; ++k) {
            const std::int64_t idx = newest - k;
            loc.values[static_cast<std::size_t>(k)] =
                idx >= 0 ? u.samples[static_cast<std::size_t>(idx)] : 0.0;
        }
        out.push_back(std::move(loc));
    }
    return out;
}

InputLocation sample_past_trajectory(const Signal& u, double t, const std::vector<double>& grid,
                                     std::optional<double> window) {
    u.validate();
    if (grid.empty() || grid.front() < 0.0) throw Error("lag grid must start at tau >= 0");
    if (!std::is_sorted(grid.begin(), grid.end())) throw Error("lag grid must be ascending");

    InputLocation loc;
    loc.kind = InputLocation::Kind::sampled_trajectory;
    loc.grid = grid;
    loc.values.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (window && grid[k] > *window + 1e-12) {
            loc.values[k] = 0.0;  // indicator of [0, T]
            continue;
        }
        loc.values[k] = u.value_at(t - grid[k]);
    }
    return loc;
}

// --- benchmark systems ----------------------------------------------------------

double benchmark_nonlinearity(const double* u) {
    // u[k] = u_{t-k}, k = 0..6
    return u[0] + 0.6 * u[1] + 0.35 * (u[2] + u[4]) - 0.25 * u[3] * u[3] +
           0.2 * (u[5] + u[6]) + 0.9 * u[3] + 0.25 * u[0] * u[1] + 0.75 * u[2] * u[2] * u[2] -
           u[1] * u[2] + 0.5 * (u[0] * u[0] + u[0] * u[2] + u[1] * u[3]);
}

namespace {

Signal simulate_nonlinear(const Signal& u, const std::vector<double>& lin_lag0,
                          double noise_variance, std::uint64_t rng_seed) {
    u.validate();
    if (noise_variance < 0.0) throw Error("noise variance must be nonnegative");
    const std::int64_t lags_needed =
        std::max<std::int64_t>(6, lin_lag0.empty() ? 0
                                                   : static_cast<std::int64_t>(lin_lag0.size()) - 1);
    const std::int64_t n = static_cast<std::int64_t>(u.size());
    if (n <= lags_needed)
        throw BoundaryError("input too short: needs " + std::to_string(lags_needed) +
                            " burn-in samples");

    Signal lin;
    if (!lin_lag0.empty()) lin = convolve(lin_lag0, u);

    Signal y;
    y.start_index = u.start_index + lags_needed;
    y.sample_period = u.sample_period;
    y.samples.resize(static_cast<std::size_t>(n - lags_needed));
    Rng rng(rng_seed);
    const double sd = std::sqrt(noise_variance);
    double window[7];
    for (std::int64_t i = lags_needed; i < n; ++i) {
        for (int k = 0; k < 7; ++k) window[k] = u.samples[static_cast<std::size_t>(i - k)];
        double v = benchmark_nonlinearity(window);
        if (!lin_lag0.empty()) v += lin.samples[static_cast<std::size_t>(i)];
        v += sd > 0.0 ? rng.gaussian(0.0, sd) : 0.0;
        y.samples[static_cast<std::size_t>(i - lags_needed)] = v;
    }
    return y;
}

}  // namespace

Signal simulate_s1(const Signal& u, double noise_variance, std::uint64_t rng_seed) {
    return simulate_nonlinear(u, {}, noise_variance, rng_seed);
}

Signal simulate_s2(const Signal& u, const LinearSystem& sys, double noise_variance,
                   std::uint64_t rng_seed) {
    std::vector<double> lag0 = sys.lag0_coefficients();
    const bool all_zero = std::all_of(lag0.begin(), lag0.end(), [](double v) { return v == 0.0; });
    if (all_zero) lag0.clear();  // theta = 0 must agree with simulate_s1 sample-for-sample
    return simulate_nonlinear(u, lag0, noise_variance, rng_seed);
}

// --- random systems --------------------------------------------------------------

namespace {

// multiply polynomial (in q^-1) by (1 - 2 Re(root) q^-1 + |root|^2 q^-2)
void multiply_conjugate_pair(std::vector<double>& poly, std::complex<double> root) {
    const double b1 = -2.0 * root.real();
    const double b2 = std::norm(root);
    std::vector<double> out(poly.size() + 2, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
        out[i] += poly[i];
        out[i + 1] += b1 * poly[i];
        out[i + 2] += b2 * poly[i];
    }
    poly = std::move(out);
}

}  // namespace

LinearSystem random_linear_system(int order, double pole_radius, double target_l2,
                                  std::uint64_t rng_seed) {
    if (order < 1) throw Error("system order must be >= 1");
    const int pole_pairs = std::max(order / 2, 1);
    const int zero_pairs = std::max(order / 2 - 1, 0);

    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(rng_seed, attempt));

        double max_pole = 0.0;
        std::vector<double> den{1.0};
        for (int i = 0; i < pole_pairs; ++i) {
            const double r = pole_radius * std::sqrt(rng.uniform());
            const double phi = rng.uniform(0.0, M_PI);
            max_pole = std::max(max_pole, r);
            multiply_conjugate_pair(den, std::polar(r, phi));
        }
        std::vector<double> num{1.0};
        for (int i = 0; i < zero_pairs; ++i) {
            const double r = std::sqrt(rng.uniform());
            const double phi = rng.uniform(0.0, M_PI);
            multiply_conjugate_pair(num, std::polar(r, phi));
        }
        // one unit of delay: strictly causal per the S2 model
        num.insert(num.begin(), 0.0);

        // impulse response by the ARMA recursion
        const std::size_t n = 2048;
        std::vector<double> h(n, 0.0);
        bool finite = true;
        for (std::size_t t = 0; t < n; ++t) {
            double v = t < num.size() ? num[t] : 0.0;
            for (std::size_t j = 1; j < den.size() && j <= t; ++j) v -= den[j] * h[t - j];
            h[t] = v;
            if (!std::isfinite(v)) {
                finite = false;
                break;
            }
        }
        if (!finite) continue;

        const double total_sq = simd::dot(h.data(), h.data(), n);
        if (total_sq < 1e-24) continue;

        // truncate where the remaining tail has l2 mass < 1e-8 of the total
        double tail_sq = 0.0;
        double dropped_sq = 0.0;
        std::size_t cut = n;
        for (std::size_t t = n; t-- > 1;) {
            tail_sq += h[t] * h[t];
            if (std::sqrt(tail_sq / total_sq) >= 1e-8) {
                cut = t + 1;
                break;
            }
            dropped_sq = tail_sq;
        }
        h.resize(std::max<std::size_t>(cut, 1));

        const double scale = target_l2 / std::sqrt(simd::dot(h.data(), h.data(), h.size()));
        for (double& v : h) v *= scale;

        LinearSystem sys;
        // h[0] = 0 by construction (the inserted delay); store from lag 1
        sys.impulse_response.assign(h.begin() + 1, h.end());
        sys.first_lag = 1;
        sys.order = order;
        sys.max_pole_modulus = max_pole;
        sys.truncated_tail_mass = std::sqrt(dropped_sq / total_sq);
        return sys;
    }
}

// --- convolution and fit -----------------------------------------------------------

Signal convolve(const std::vector<double>& theta, const Signal& u) {
    u.validate();
    if (theta.empty()) throw Error("empty impulse response");
    for (double v : theta)
        if (!std::isfinite(v)) throw Error("impulse response contains a non-finite value");
    Signal y;
    y.start_index = u.start_index;
    y.sample_period = u.sample_period;
    y.samples.resize(u.size());
    simd::convolve(u.samples.data(), u.size(), theta.data(), theta.size(), y.samples.data());
    return y;
}

double fit_metric(const Eigen::VectorXd& y_test, const Eigen::VectorXd& y_hat) {
    if (y_test.size() != y_hat.size()) throw Error("fit_metric: length mismatch");
    if (y_test.size() < 2) throw Error("fit_metric: need at least two samples");
    const double mean = y_test.mean();
    const double denom = (y_test.array() - mean).matrix().norm();
    if (denom <= 1e-12 * std::max(1.0, y_test.norm()))
        throw UndefinedFitError("fit undefined: test outputs are constant");
    return 100.0 * (1.0 - (y_test - y_hat).norm() / denom);
}

}  // namespace rkhsid
