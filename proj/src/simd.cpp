#include "corrlab/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace corrlab::simd {

namespace {

bool cpu_has_avx2() {
#if defined(CORRLAB_BUILD_AVX2) && (defined(__x86_64__) || defined(_M_X64))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect_initial() {
    if (const char* env = std::getenv("CORRLAB_BACKEND")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Backend::Avx2;
    }
    return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& backend_slot() {
    static std::atomic<Backend> slot{detect_initial()};
    return slot;
}

const detail::KernelTable& table() {
    return backend_slot().load(std::memory_order_relaxed) == Backend::Avx2
               ? detail::avx2_table()
               : detail::scalar_table();
}

}  // namespace

Backend active() { return backend_slot().load(std::memory_order_relaxed); }

void force(Backend backend) {
    if (backend == Backend::Avx2 && !cpu_has_avx2()) {
        throw std::runtime_error("simd: AVX2 backend unavailable on this machine");
    }
    backend_slot().store(backend, std::memory_order_relaxed);
}

bool avx2_supported() { return cpu_has_avx2(); }

const char* backend_name(Backend backend) {
    switch (backend) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
    }
    return "unknown";
}

double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    table().axpy(alpha, x, y, n);
}

void gemm_nt(const double* a, std::size_t an, const double* b, std::size_t bn, std::size_t k,
             const double* bias, double* c) {
    table().gemm_nt(a, an, b, bn, k, bias, c);
}

void gemm_nn_acc(const double* a, std::size_t an, std::size_t ak, const double* b, std::size_t bc,
                 double* c) {
    table().gemm_nn_acc(a, an, ak, b, bc, c);
}

void gemm_tn_acc(const double* a, std::size_t ar, std::size_t ac, const double* b, std::size_t bc,
                 double* c) {
    table().gemm_tn_acc(a, ar, ac, b, bc, c);
}

void adam_update(double* p, double* m, double* v, const double* g, std::size_t n, double lr,
                 double beta1, double beta2, double eps, double bias1, double bias2) {
    table().adam_update(p, m, v, g, n, lr, beta1, beta2, eps, bias1, bias2);
}

#if !defined(CORRLAB_BUILD_AVX2)
namespace detail {
// Stub so the dispatcher links when the vector TU is not built; never called
// because cpu_has_avx2() is false in that configuration.
const KernelTable& avx2_table() { return scalar_table(); }
}  // namespace detail
#endif

}  // namespace corrlab::simd
