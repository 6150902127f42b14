#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "corrlab/simd.hpp"

// AVX2+FMA kernels, 4 doubles per lane. Compiled in its own translation unit
// with -mavx2 -mfma; only reached after the runtime CPU check in simd.cpp.

namespace corrlab::simd::detail {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    double total = hsum(acc0);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        _mm256_storeu_pd(y + i, y0);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

// One A row against four B rows at a time; four independent accumulators keep
// the FMA pipes busy.
void gemm_nt_avx2(const double* a, std::size_t an, const double* b, std::size_t bn, std::size_t k,
                  const double* bias, double* c) {
    for (std::size_t r = 0; r < an; ++r) {
        const double* arow = a + r * k;
        double* crow = c + r * bn;
        std::size_t o = 0;
        for (; o + 4 <= bn; o += 4) {
            const double* b0 = b + (o + 0) * k;
            const double* b1 = b + (o + 1) * k;
            const double* b2 = b + (o + 2) * k;
            const double* b3 = b + (o + 3) * k;
            __m256d acc0 = _mm256_setzero_pd();
            __m256d acc1 = _mm256_setzero_pd();
            __m256d acc2 = _mm256_setzero_pd();
            __m256d acc3 = _mm256_setzero_pd();
            std::size_t i = 0;
            for (; i + 4 <= k; i += 4) {
                const __m256d va = _mm256_loadu_pd(arow + i);
                acc0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + i), acc0);
                acc1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + i), acc1);
                acc2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + i), acc2);
                acc3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + i), acc3);
            }
            double s0 = hsum(acc0), s1 = hsum(acc1), s2 = hsum(acc2), s3 = hsum(acc3);
            for (; i < k; ++i) {
                const double av = arow[i];
                s0 += av * b0[i];
                s1 += av * b1[i];
                s2 += av * b2[i];
                s3 += av * b3[i];
            }
            if (bias) {
                s0 += bias[o];
                s1 += bias[o + 1];
                s2 += bias[o + 2];
                s3 += bias[o + 3];
            }
            crow[o] = s0;
            crow[o + 1] = s1;
            crow[o + 2] = s2;
            crow[o + 3] = s3;
        }
        for (; o < bn; ++o) {
            const double base = bias ? bias[o] : 0.0;
            crow[o] = base + dot_avx2(arow, b + o * k, k);
        }
    }
}

void gemm_nn_acc_avx2(const double* a, std::size_t an, std::size_t ak, const double* b,
                      std::size_t bc, double* c) {
    for (std::size_t r = 0; r < an; ++r) {
        const double* arow = a + r * ak;
        double* crow = c + r * bc;
        for (std::size_t p = 0; p < ak; ++p) {
            axpy_avx2(arow[p], b + p * bc, crow, bc);
        }
    }
}

void gemm_tn_acc_avx2(const double* a, std::size_t ar, std::size_t ac, const double* b,
                      std::size_t bc, double* c) {
    for (std::size_t r = 0; r < ar; ++r) {
        const double* arow = a + r * ac;
        const double* brow = b + r * bc;
        for (std::size_t p = 0; p < ac; ++p) {
            axpy_avx2(arow[p], brow, c + p * bc, bc);
        }
    }
}

// Elementwise; bitwise-identical to the scalar kernel.
void adam_update_avx2(double* p, double* m, double* v, const double* g, std::size_t n, double lr,
                      double beta1, double beta2, double eps, double bias1, double bias2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vcb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vcb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vibias1 = _mm256_set1_pd(bias1);
    const __m256d vibias2 = _mm256_set1_pd(bias2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gv = _mm256_loadu_pd(g + i);
        __m256d mv = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        // mul+add kept separate (no FMA) so results match the scalar kernel
        // bit for bit.
        mv = _mm256_add_pd(_mm256_mul_pd(vb1, mv), _mm256_mul_pd(vcb1, gv));
        vv = _mm256_add_pd(_mm256_mul_pd(vb2, vv), _mm256_mul_pd(vcb2, _mm256_mul_pd(gv, gv)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_div_pd(mv, vibias1);
        const __m256d vhat = _mm256_div_pd(vv, vibias2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        __m256d pv = _mm256_loadu_pd(p + i);
        pv = _mm256_sub_pd(pv, _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom));
        _mm256_storeu_pd(p + i, pv);
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bias1;
        const double vhat = v[i] / bias2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table = {
        dot_avx2,    axpy_avx2,        gemm_nt_avx2,
        gemm_nn_acc_avx2, gemm_tn_acc_avx2, adam_update_avx2,
    };
    return table;
}

}  // namespace corrlab::simd::detail
