#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "corrlab/rng.hpp"
#include "corrlab/simd.hpp"

using corrlab::simd::detail::KernelTable;

namespace {

std::vector<double> random_vec(std::size_t n, corrlab::rng::Stream& stream) {
    std::vector<double> v(n);
    for (double& x : v) x = 2.0 * stream.uniform01() - 1.0;
    return v;
}

bool close(double a, double b, double rel = 1e-11, double abs = 1e-12) {
    return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

const KernelTable& scalar() { return corrlab::simd::detail::scalar_table(); }
const KernelTable& avx2() { return corrlab::simd::detail::avx2_table(); }

}  // namespace

TEST_CASE("backend dispatch") {
    CHECK(std::string(corrlab::simd::backend_name(corrlab::simd::Backend::Scalar)) == "scalar");
    CHECK(std::string(corrlab::simd::backend_name(corrlab::simd::Backend::Avx2)) == "avx2");
    const corrlab::simd::Backend initial = corrlab::simd::active();
    corrlab::simd::force(corrlab::simd::Backend::Scalar);
    CHECK(corrlab::simd::active() == corrlab::simd::Backend::Scalar);
    corrlab::simd::force(initial);
}

TEST_CASE("scalar and avx2 kernels agree") {
    if (!corrlab::simd::avx2_supported()) {
        MESSAGE("AVX2 unavailable; equivalence suite skipped");
        return;
    }
    corrlab::rng::Stream stream(0x5eed5eedULL);

    // Ragged lengths exercise both the vector body and the remainder loops.
    for (std::size_t n : {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 31, 64, 100, 257}) {
        const auto a = random_vec(n, stream);
        const auto b = random_vec(n, stream);
        CHECK(close(scalar().dot(a.data(), b.data(), n), avx2().dot(a.data(), b.data(), n)));

        auto y1 = random_vec(n, stream);
        auto y2 = y1;
        scalar().axpy(0.37, a.data(), y1.data(), n);
        avx2().axpy(0.37, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i]));
    }

    for (auto [an, bn, k] : std::vector<std::array<std::size_t, 3>>{
             {1, 1, 1}, {2, 3, 5}, {4, 4, 16}, {3, 7, 33}, {8, 5, 64}, {5, 17, 130}}) {
        const auto a = random_vec(an * k, stream);
        const auto b = random_vec(bn * k, stream);
        const auto bias = random_vec(bn, stream);
        std::vector<double> c1(an * bn), c2(an * bn);
        scalar().gemm_nt(a.data(), an, b.data(), bn, k, bias.data(), c1.data());
        avx2().gemm_nt(a.data(), an, b.data(), bn, k, bias.data(), c2.data());
        for (std::size_t i = 0; i < c1.size(); ++i) CHECK(close(c1[i], c2[i]));

        // C += A * B with A: an x k, B: k x bn
        auto acc1 = random_vec(an * bn, stream);
        auto acc2 = acc1;
        scalar().gemm_nn_acc(a.data(), an, k, b.data(), bn, acc1.data());
        avx2().gemm_nn_acc(a.data(), an, k, b.data(), bn, acc2.data());
        for (std::size_t i = 0; i < acc1.size(); ++i) CHECK(close(acc1[i], acc2[i]));

        // C += A^T * B with A: k x an, B: k x bn
        auto t1 = random_vec(an * bn, stream);
        auto t2 = t1;
        scalar().gemm_tn_acc(a.data(), k, an, b.data(), bn, t1.data());
        avx2().gemm_tn_acc(a.data(), k, an, b.data(), bn, t2.data());
        for (std::size_t i = 0; i < t1.size(); ++i) CHECK(close(t1[i], t2[i]));
    }
}

TEST_CASE("adam kernel is bitwise identical across backends") {
    if (!corrlab::simd::avx2_supported()) return;
    corrlab::rng::Stream stream(77);
    for (std::size_t n : {1, 3, 4, 9, 64, 127}) {
        auto p1 = random_vec(n, stream);
        auto m1 = random_vec(n, stream);
        auto v1 = random_vec(n, stream);
        for (double& x : v1) x = std::abs(x);
        const auto g = random_vec(n, stream);
        auto p2 = p1;
        auto m2 = m1;
        auto v2 = v1;
        scalar().adam_update(p1.data(), m1.data(), v1.data(), g.data(), n, 1e-3, 0.9, 0.999,
                             1e-8, 0.1, 0.001999);
        avx2().adam_update(p2.data(), m2.data(), v2.data(), g.data(), n, 1e-3, 0.9, 0.999, 1e-8,
                           0.1, 0.001999);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(p1[i] == p2[i]);
            CHECK(m1[i] == m2[i]);
            CHECK(v1[i] == v2[i]);
        }
    }
}

TEST_CASE("gemm_nt against a naive triple loop") {
    corrlab::rng::Stream stream(123);
    const std::size_t an = 6, bn = 9, k = 21;
    const auto a = random_vec(an * k, stream);
    const auto b = random_vec(bn * k, stream);
    std::vector<double> c(an * bn);
    corrlab::simd::gemm_nt(a.data(), an, b.data(), bn, k, nullptr, c.data());
    for (std::size_t r = 0; r < an; ++r) {
        for (std::size_t o = 0; o < bn; ++o) {
            double expect = 0.0;
            for (std::size_t i = 0; i < k; ++i) expect += a[r * k + i] * b[o * k + i];
            CHECK(close(c[r * bn + o], expect));
        }
    }
}
