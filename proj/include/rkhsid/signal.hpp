#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "rkhsid/errors.hpp"

namespace rkhsid {

// A discrete-time sequence or a sampled continuous-time trajectory.
// Sample i lives at time (start_index + i) * sample_period; discrete-time
// code uses sample_period = 1 so times are the integers.
struct Signal {
    std::vector<double> samples;
    std::int64_t start_index = 0;
    double sample_period = 1.0;

    std::size_t size() const { return samples.size(); }
    double time_of(std::size_t i) const {
        return (static_cast<double>(start_index) + static_cast<double>(i)) * sample_period;
    }
    double first_time() const { return time_of(0); }
    double last_time() const { return time_of(samples.size() - 1); }

    // Value at an arbitrary time. Exact when t hits a sample (to 1e-9 of a
    // period), linearly interpolated between samples otherwise.
    double value_at(double t) const;

    void validate() const;  // finite samples, length >= 1, period > 0
};

// A lagged regressor: the piece of input trajectory a dynamic-system
// functional is evaluated at. values are newest-first, values[k] = u(t - lag_k).
struct InputLocation {
    enum class Kind { finite_memory, truncated_infinite, sampled_trajectory };

    Kind kind = Kind::finite_memory;
    std::vector<double> values;
    std::vector<double> grid;  // lags, ascending from 0; sampled_trajectory only

    std::size_t dim() const { return values.size(); }
};

// Impulse response of a linear time-invariant system, truncated to a
// negligible tail. Coefficient k acts at lag first_lag + k.
struct LinearSystem {
    std::vector<double> impulse_response;
    int first_lag = 0;
    int order = 0;
    double max_pole_modulus = 0.0;
    // relative l2 mass of the discarded tail (generated systems)
    double truncated_tail_mass = 0.0;

    double l2_norm() const;
    // Coefficients re-indexed from lag 0 (leading zeros inserted).
    std::vector<double> lag0_coefficients() const;
};

// Training or test set: input locations, outputs, sampling instants.
struct Dataset {
    std::vector<InputLocation> locations;
    Eigen::VectorXd outputs;
    std::vector<double> timestamps;

    std::size_t size() const { return locations.size(); }
    void validate() const;
};

// --- regressor construction -------------------------------------------------

// Lagged windows x_t = [u_t, u_{t-1}, ...] for integer t in [t_begin, t_end].
// memory set: finite-memory windows of that length; memory empty: truncated
// infinite-memory windows of length `horizon`. Without zero_pad, every t must
// have all its lags inside the signal; the first valid t is reported otherwise.
std::vector<InputLocation> make_regressors(const Signal& u, std::optional<int> memory,
                                           int horizon, std::int64_t t_begin,
                                           std::int64_t t_end, bool zero_pad = false);

// Sampled past trajectory x_t(tau) = u(t - tau) on the given lag grid.
// When window T is set, lags beyond T are zeroed (compact-support model).
InputLocation sample_past_trajectory(const Signal& u, double t,
                                     const std::vector<double>& grid,
                                     std::optional<double> window = std::nullopt);

// --- benchmark systems ------------------------------------------------------

// Nonlinear FIR used by the benchmark scenarios; needs lags u_{t-1..t-6}.
double benchmark_nonlinearity(const double* u_newest_first);

// y_t = f(x_t) + e_t with f the benchmark nonlinearity and e white Gaussian.
Signal simulate_s1(const Signal& u, double noise_variance, std::uint64_t rng_seed);

// y_t = (theta (x) u)_t + f(x_t) + e_t.
Signal simulate_s2(const Signal& u, const LinearSystem& sys, double noise_variance,
                   std::uint64_t rng_seed);

// Random stable rational transfer function: order/2 conjugate pole pairs
// uniform in the disk of radius pole_radius, zeros in the unit disk, impulse
// response truncated to tail l2 mass < 1e-8 and scaled to target_l2.
LinearSystem random_linear_system(int order = 10, double pole_radius = 0.95,
                                  double target_l2 = 10.0, std::uint64_t rng_seed = 0);

// Causal convolution y_t = sum_k theta[k] u_{t-k}; theta[k] acts at lag k
// and samples before the signal start count as zero.
Signal convolve(const std::vector<double>& theta, const Signal& u);

// Percentage fit 100 (1 - |y - yhat| / |y - ybar|).
double fit_metric(const Eigen::VectorXd& y_test, const Eigen::VectorXd& y_hat);

}  // namespace rkhsid
