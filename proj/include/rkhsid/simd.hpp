#pragma once

#include <cstddef>
#include <string_view>

namespace rkhsid::simd {

// Dispatch table for the arithmetic inner loops behind Gram assembly,
// convolution and Mercer partial sums. Pointers need not be aligned.
// Every backend must agree with the scalar reference to floating-point
// reassociation error; this is equivalence-tested.
struct Ops {
    const char* name;

    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);

    // sum_i w[i] * a[i] * b[i]
    double (*weighted_dot)(const double* w, const double* a, const double* b, std::size_t n);

    // sum_i (a[i] - b[i])^2
    double (*squared_distance)(const double* a, const double* b, std::size_t n);

    // sum_i |a[i] - b[i]|
    double (*l1_distance)(const double* a, const double* b, std::size_t n);

    // Causal FIR: y[t] = sum_{j <= min(t, nk-1)} k[j] * u[t-j], t in [0, nu).
    // Samples before u[0] are treated as zero.
    void (*convolve)(const double* u, std::size_t nu, const double* k, std::size_t nk, double* y);
};

const Ops& scalar_ops();

// Returns nullptr when the CPU lacks AVX2+FMA (or the build has no AVX2
// translation unit).
const Ops* avx2_ops();

// Active backend: the widest supported one, unless overridden by the
// RKHSID_SIMD environment variable ("scalar" or "avx2") or by
// select_backend(). Resolved once and then fixed, so all results in a
// process come from a single backend.
const Ops& active();

// Force a backend by name; returns false if unavailable. Test hook.
bool select_backend(std::string_view name);

inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
    return active().weighted_dot(w, a, b, n);
}
inline double squared_distance(const double* a, const double* b, std::size_t n) {
    return active().squared_distance(a, b, n);
}
inline double l1_distance(const double* a, const double* b, std::size_t n) {
    return active().l1_distance(a, b, n);
}
inline void convolve(const double* u, std::size_t nu, const double* k, std::size_t nk, double* y) {
    active().convolve(u, nu, k, nk, y);
}

}  // namespace rkhsid::simd
