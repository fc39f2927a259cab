#include "rkhsid/simd.hpp"

#include <algorithm>
#include <cmath>

namespace rkhsid::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double weighted_dot_scalar(const double* w, const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
    return s;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double l1_distance_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i] - b[i]);
    return s;
}

void convolve_scalar(const double* u, std::size_t nu, const double* k, std::size_t nk,
                     double* y) {
    for (std::size_t t = 0; t < nu; ++t) {
        const std::size_t jmax = std::min(t, nk - 1);
        double s = 0.0;
        for (std::size_t j = 0; j <= jmax; ++j) s += k[j] * u[t - j];
        y[t] = s;
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{"scalar",        dot_scalar,         weighted_dot_scalar,
                         squared_distance_scalar, l1_distance_scalar, convolve_scalar};
    return ops;
}

}  // namespace rkhsid::simd
