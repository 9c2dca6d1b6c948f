#include "tarslab/kernels.hpp"

#include <algorithm>

namespace tarslab::kern {
namespace {

void add_s(double* dst, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_s(double* dst, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_s(double* dst, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void axpy_s(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_s(double* x, double alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double dot_s(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_s(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

double sumsq_s(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

double max_s(const double* a, std::size_t n) {
    double m = a[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, a[i]);
    return m;
}

// ikj order: each c[i][j] accumulates over k sequentially, which keeps the
// AVX2 variant (vectorized over j) bit-identical.
void matmul_s(double* c, const double* a, const double* b,
              std::size_t m, std::size_t k, std::size_t n) {
    std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = a[i * k + kk];
            const double* brow = b + kk * n;
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {
        "scalar", add_s,   sub_s, mul_s,   axpy_s, scale_s,
        dot_s,    sum_s,   sumsq_s, max_s, matmul_s,
    };
    return k;
}

}  // namespace tarslab::kern
