#pragma once

#include <cstddef>

namespace corrlab::simd {

// Runtime-dispatched arithmetic kernels. Every kernel has a scalar reference
// implementation and, on x86-64 with AVX2+FMA, a vectorized variant. The two
// are equivalence-tested; vector variants may differ from scalar in the last
// bits because partial sums accumulate in a different order.
enum class Backend { Scalar, Avx2 };

// Backend selected at startup (vector when the CPU supports it, otherwise
// scalar). The CORRLAB_BACKEND environment variable ("scalar" / "avx2")
// overrides detection.
Backend active();

// Force a backend, e.g. to pin golden tests to the scalar reference.
// Throws std::runtime_error if the backend is unavailable on this machine.
void force(Backend backend);

bool avx2_supported();
const char* backend_name(Backend backend);

// ---------------------------------------------------------------------------
// Kernels. All matrices are dense row-major.
// ---------------------------------------------------------------------------

// Inner product of two length-n vectors.
double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// C = A * B^T (+ bias broadcast along rows).
//   A: an x k,  B: bn x k,  C: an x bn,  bias: length bn or nullptr.
// Both operands are traversed along contiguous rows.
void gemm_nt(const double* a, std::size_t an, const double* b, std::size_t bn, std::size_t k,
             const double* bias, double* c);

// C += A * B.  A: an x ak,  B: ak x bc,  C: an x bc.
void gemm_nn_acc(const double* a, std::size_t an, std::size_t ak, const double* b, std::size_t bc,
                 double* c);

// C += A^T * B.  A: ar x ac,  B: ar x bc,  C: ac x bc.
void gemm_tn_acc(const double* a, std::size_t ar, std::size_t ac, const double* b, std::size_t bc,
                 double* c);

// Adam update on a flat parameter array (elementwise; identical results on
// every backend since no reductions are involved).
//   m = b1*m + (1-b1)*g,  v = b2*v + (1-b2)*g^2,
//   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
void adam_update(double* p, double* m, double* v, const double* g, std::size_t n, double lr,
                 double beta1, double beta2, double eps, double bias1, double bias2);

namespace detail {

struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*gemm_nt)(const double*, std::size_t, const double*, std::size_t, std::size_t,
                    const double*, double*);
    void (*gemm_nn_acc)(const double*, std::size_t, std::size_t, const double*, std::size_t,
                        double*);
    void (*gemm_tn_acc)(const double*, std::size_t, std::size_t, const double*, std::size_t,
                        double*);
    void (*adam_update)(double*, double*, double*, const double*, std::size_t, double, double,
                        double, double, double, double);
};

const KernelTable& scalar_table();
const KernelTable& avx2_table();  // only valid when avx2_supported()

}  // namespace detail

}  // namespace corrlab::simd
