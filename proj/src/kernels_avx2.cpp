// AVX2 variants of the f64 kernels. Compiled with -mavx2 (no FMA: fusing
// a*b+c would change rounding vs the scalar reference). Entered only after
// the runtime CPU check in kernels_dispatch.cpp.

#include "tarslab/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <algorithm>

namespace tarslab::kern {
namespace {

void add_v(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_v(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_v(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void axpy_v(double* y, double alpha, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_v(double* x, double alpha, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_v(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                               _mm256_loadu_pd(b + i)));
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

double sum_v(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i];
    return r;
}

double sumsq_v(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(a + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(x, x));
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i] * a[i];
    return r;
}

double max_v(const double* a, std::size_t n) {
    std::size_t i = 0;
    double r = a[0];
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(a);
        i = 4;
        for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(a + i));
        const __m128d lo = _mm256_castpd256_pd128(acc);
        const __m128d hi = _mm256_extractf128_pd(acc, 1);
        const __m128d m = _mm_max_pd(lo, hi);
        r = _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
    } else {
        i = 1;
    }
    for (; i < n; ++i) r = std::max(r, a[i]);
    return r;
}

void matmul_v(double* c, const double* a, const double* b,
              std::size_t m, std::size_t k, std::size_t n) {
    std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = a[i * k + kk];
            const double* brow = b + kk * n;
            const __m256d va = _mm256_set1_pd(aik);
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(brow + j));
                _mm256_storeu_pd(crow + j,
                                 _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
            }
            for (; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

}  // namespace

const Kernels* avx2_kernels() {
    static const Kernels k = {
        "avx2", add_v,   sub_v, mul_v,   axpy_v, scale_v,
        dot_v,  sum_v,   sumsq_v, max_v, matmul_v,
    };
    return &k;
}

}  // namespace tarslab::kern

#else

namespace tarslab::kern {
const Kernels* avx2_kernels() { return nullptr; }
}  // namespace tarslab::kern

#endif
