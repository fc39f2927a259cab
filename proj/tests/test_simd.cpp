#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rkhsid/rng.hpp"
#include "rkhsid/simd.hpp"

using namespace rkhsid;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.gaussian(0.0, scale);
    return v;
}

}  // namespace

TEST_CASE("scalar kernels match hand results") {
    const auto& ops = simd::scalar_ops();
    const std::vector<double> a{1.0, 2.0, 3.0};
    const std::vector<double> b{4.0, -5.0, 6.0};
    const std::vector<double> w{1.0, 0.5, 2.0};
    CHECK(ops.dot(a.data(), b.data(), 3) == doctest::Approx(4.0 - 10.0 + 18.0));
    CHECK(ops.weighted_dot(w.data(), a.data(), b.data(), 3) ==
          doctest::Approx(4.0 - 5.0 + 36.0));
    CHECK(ops.squared_distance(a.data(), b.data(), 3) == doctest::Approx(9.0 + 49.0 + 9.0));
    CHECK(ops.l1_distance(a.data(), b.data(), 3) == doctest::Approx(3.0 + 7.0 + 3.0));
}

TEST_CASE("convolution: identity, delay, hand example") {
    const auto& ops = simd::scalar_ops();
    const std::vector<double> u{1.0, 2.0, 3.0};
    std::vector<double> y(3);

    const std::vector<double> identity{1.0};
    ops.convolve(u.data(), 3, identity.data(), 1, y.data());
    CHECK(y == u);

    const std::vector<double> delay{0.0, 1.0};
    ops.convolve(u.data(), 3, delay.data(), 2, y.data());
    CHECK(y == std::vector<double>{0.0, 1.0, 2.0});

    const std::vector<double> sum2{1.0, 1.0};
    ops.convolve(u.data(), 3, sum2.data(), 2, y.data());
    CHECK(y == std::vector<double>{1.0, 3.0, 5.0});
}

TEST_CASE("avx2 backend agrees with the scalar reference") {
    const simd::Ops* avx2 = simd::avx2_ops();
    if (!avx2) {
        MESSAGE("AVX2 backend not available on this machine; skipping");
        return;
    }
    const auto& ref = simd::scalar_ops();
    Rng rng(20240817);
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 17u, 64u, 129u, 1000u}) {
        const auto a = random_vec(rng, n, 2.0);
        const auto b = random_vec(rng, n, 3.0);
        const auto w = random_vec(rng, n, 1.0);
        const double tol = 1e-12 * static_cast<double>(n);

        CHECK(avx2->dot(a.data(), b.data(), n) ==
              doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(tol));
        CHECK(avx2->weighted_dot(w.data(), a.data(), b.data(), n) ==
              doctest::Approx(ref.weighted_dot(w.data(), a.data(), b.data(), n)).epsilon(tol));
        CHECK(avx2->squared_distance(a.data(), b.data(), n) ==
              doctest::Approx(ref.squared_distance(a.data(), b.data(), n)).epsilon(tol));
        CHECK(avx2->l1_distance(a.data(), b.data(), n) ==
              doctest::Approx(ref.l1_distance(a.data(), b.data(), n)).epsilon(tol));

        for (std::size_t nk : {1u, 2u, 5u, 33u}) {
            if (nk > n) continue;
            const auto k = random_vec(rng, nk);
            std::vector<double> y_ref(n), y_avx(n);
            ref.convolve(a.data(), n, k.data(), nk, y_ref.data());
            avx2->convolve(a.data(), n, k.data(), nk, y_avx.data());
            for (std::size_t i = 0; i < n; ++i)
                CHECK(y_avx[i] == doctest::Approx(y_ref[i]).epsilon(1e-12 * (1.0 + nk)));
        }
    }
}

TEST_CASE("backend selection") {
    CHECK(simd::select_backend("scalar"));
    CHECK(std::string(simd::active().name) == "scalar");
    if (simd::avx2_ops()) {
        CHECK(simd::select_backend("avx2"));
        CHECK(std::string(simd::active().name) == "avx2");
    }
    CHECK_FALSE(simd::select_backend("no-such-backend"));
}
