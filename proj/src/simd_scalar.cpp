#include <cmath>
#include <cstddef>

#include "corrlab/simd.hpp"

// Scalar reference kernels. These define the semantics; vector variants must
// match them up to floating-point reassociation.

namespace corrlab::simd::detail {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt_scalar(const double* a, std::size_t an, const double* b, std::size_t bn,
                    std::size_t k, const double* bias, double* c) {
    for (std::size_t r = 0; r < an; ++r) {
        const double* arow = a + r * k;
        double* crow = c + r * bn;
        for (std::size_t o = 0; o < bn; ++o) {
            const double base = bias ? bias[o] : 0.0;
            crow[o] = base + dot_scalar(arow, b + o * k, k);
        }
    }
}

void gemm_nn_acc_scalar(const double* a, std::size_t an, std::size_t ak, const double* b,
                        std::size_t bc, double* c) {
    for (std::size_t r = 0; r < an; ++r) {
        const double* arow = a + r * ak;
        double* crow = c + r * bc;
        for (std::size_t p = 0; p < ak; ++p) {
            axpy_scalar(arow[p], b + p * bc, crow, bc);
        }
    }
}

void gemm_tn_acc_scalar(const double* a, std::size_t ar, std::size_t ac, const double* b,
                        std::size_t bc, double* c) {
    for (std::size_t r = 0; r < ar; ++r) {
        const double* arow = a + r * ac;
        const double* brow = b + r * bc;
        for (std::size_t p = 0; p < ac; ++p) {
            axpy_scalar(arow[p], brow, c + p * bc, bc);
        }
    }
}

void adam_update_scalar(double* p, double* m, double* v, const double* g, std::size_t n,
                        double lr, double beta1, double beta2, double eps, double bias1,
                        double bias2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bias1;
        const double vhat = v[i] / bias2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table = {
        dot_scalar,    axpy_scalar,        gemm_nt_scalar,
        gemm_nn_acc_scalar, gemm_tn_acc_scalar, adam_update_scalar,
    };
    return table;
}

}  // namespace corrlab::simd::detail
