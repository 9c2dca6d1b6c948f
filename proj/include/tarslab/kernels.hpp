#pragma once

#include <cstddef>

// Double-precision inner-loop kernels. Two backends: a scalar reference
// implementation and an AVX2 one, selected once at startup. The elementwise
// kernels and matmul accumulate in the same order in both backends and are
// bit-identical; the reductions (dot/sum/sumsq) use lane-split accumulation
// under AVX2 and agree with the scalar path to roundoff only.
namespace tarslab::kern {

struct Kernels {
    const char* name;

    // dst[i] = a[i] op b[i]
    void (*add)(double* dst, const double* a, const double* b, std::size_t n);
    void (*sub)(double* dst, const double* a, const double* b, std::size_t n);
    void (*mul)(double* dst, const double* a, const double* b, std::size_t n);

    // y[i] += alpha * x[i]
    void (*axpy)(double* y, double alpha, const double* x, std::size_t n);
    // x[i] *= alpha
    void (*scale)(double* x, double alpha, std::size_t n);

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
    double (*sumsq)(const double* a, std::size_t n);
    double (*max)(const double* a, std::size_t n);  // n >= 1

    // c[m x n] = a[m x k] * b[k x n], row-major, c overwritten
    void (*matmul)(double* c, const double* a, const double* b,
                   std::size_t m, std::size_t k, std::size_t n);
};

const Kernels& scalar_kernels();

// Null when the build or the CPU lacks AVX2.
const Kernels* avx2_kernels();

bool cpu_has_avx2();

// Backend chosen at first use: AVX2 when available, scalar otherwise.
// TARSLAB_KERNELS=scalar|avx2 overrides (avx2 falls back if unsupported).
const Kernels& active();

}  // namespace tarslab::kern
