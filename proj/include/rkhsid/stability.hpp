#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rkhsid/kernels.hpp"

namespace rkhsid::stability {

enum class Verdict { stable, unstable, inconclusive };

const char* to_string(Verdict v);

// Numeric record backing a verdict. Fields are filled by whichever test
// produced them; unused ones stay NaN/empty.
struct Evidence {
    double partial_sum = std::numeric_limits<double>::quiet_NaN();
    double tail_bound = std::numeric_limits<double>::quiet_NaN();
    double total = std::numeric_limits<double>::quiet_NaN();  // partial_sum + tail_bound
    int truncation = 0;

    int probes = 0;
    double max_probe_value = std::numeric_limits<double>::quiet_NaN();
    // probe mass at P, 2P, 4P for the growth diagnosis
    std::vector<double> probe_growth;

    std::vector<double> radii;
    std::vector<double> diagonal_bound;   // analytic C_r per radius (when available)
    std::vector<double> empirical_sup;    // sampled sup of K(x,x) per radius

    std::string note;
};

// Certificate: stable / unstable only when the cited rule's hypothesis was
// numerically confirmed, inconclusive otherwise.
struct StabilityVerdict {
    Verdict verdict = Verdict::inconclusive;
    std::string rule;
    Evidence evidence;
};

// Kernel-summability test (sufficiency; also necessity for
// nonnegative-valued kernels). For generators with geometric structure the
// partial double sum is completed with an analytic tail; for sign-indefinite
// generators random sign probes a in {-1,+1}^P stand in for the l-infinity
// condition and only a clearly diverging probe yields "unstable".
StabilityVerdict summability_test(const kernels::IRKernelSpec& K, int P, int probes = 32,
                                  std::uint64_t rng_seed = 17);

// Bounded-diagonal test: sup over the infinity-norm ball of radius r of
// K(x,x). Stable when an analytic bound exists for the family; otherwise the
// sampled sup is reported as evidence with verdict inconclusive.
StabilityVerdict diagonal_bound_test(const kernels::KernelSpec& kernel,
                                     const std::vector<double>& radii, int samples_per_radius = 64,
                                     std::uint64_t rng_seed = 17);

// Recursive certification through sum/product composition: stable operands
// give a stable composite; no converse is claimed.
StabilityVerdict composed_stability(const kernels::KernelSpec& kernel);

// Worst-case bounded-input response sum |theta|_1 = theta . sign(theta),
// with theta truncated at P.
double sign_probe_bound(const kernels::IRKernelSpec& K, const std::vector<double>& theta, int P);

std::string to_json_string(const StabilityVerdict& verdict, int indent = 2);

}  // namespace rkhsid::stability
