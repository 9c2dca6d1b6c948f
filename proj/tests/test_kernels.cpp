#include "tarslab/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tarslab/rng.hpp"

using tarslab::Rng;
namespace kern = tarslab::kern;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = 4.0 * rng.uniform() - 2.0;
    return v;
}

}  // namespace

TEST(Kernels, DispatchPicksSomething) {
    const kern::Kernels& k = kern::active();
    ASSERT_NE(k.name, nullptr);
    if (kern::cpu_has_avx2()) {
        ASSERT_NE(kern::avx2_kernels(), nullptr);
    }
}

TEST(Kernels, ElementwiseMatchScalarBitExact) {
    const kern::Kernels* avx2 = kern::cpu_has_avx2() ? kern::avx2_kernels() : nullptr;
    if (!avx2) GTEST_SKIP() << "no AVX2 on this host";
    const kern::Kernels& ref = kern::scalar_kernels();
    Rng rng(11);
    for (const std::size_t n : {1u, 3u, 4u, 7u, 64u, 129u}) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);
        std::vector<double> r1(n), r2(n);
        ref.add(r1.data(), a.data(), b.data(), n);
        avx2->add(r2.data(), a.data(), b.data(), n);
        EXPECT_EQ(r1, r2);
        ref.sub(r1.data(), a.data(), b.data(), n);
        avx2->sub(r2.data(), a.data(), b.data(), n);
        EXPECT_EQ(r1, r2);
        ref.mul(r1.data(), a.data(), b.data(), n);
        avx2->mul(r2.data(), a.data(), b.data(), n);
        EXPECT_EQ(r1, r2);
        r1 = a;
        r2 = a;
        ref.axpy(r1.data(), 0.37, b.data(), n);
        avx2->axpy(r2.data(), 0.37, b.data(), n);
        EXPECT_EQ(r1, r2);
        r1 = a;
        r2 = a;
        ref.scale(r1.data(), -1.25, n);
        avx2->scale(r2.data(), -1.25, n);
        EXPECT_EQ(r1, r2);
        EXPECT_EQ(ref.max(a.data(), n), avx2->max(a.data(), n));
    }
}

TEST(Kernels, ReductionsMatchScalarToRoundoff) {
    const kern::Kernels* avx2 = kern::cpu_has_avx2() ? kern::avx2_kernels() : nullptr;
    if (!avx2) GTEST_SKIP() << "no AVX2 on this host";
    const kern::Kernels& ref = kern::scalar_kernels();
    Rng rng(12);
    for (const std::size_t n : {1u, 5u, 16u, 255u, 1024u}) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);
        EXPECT_NEAR(ref.dot(a.data(), b.data(), n), avx2->dot(a.data(), b.data(), n),
                    1e-12 * static_cast<double>(n));
        EXPECT_NEAR(ref.sum(a.data(), n), avx2->sum(a.data(), n),
                    1e-12 * static_cast<double>(n));
        EXPECT_NEAR(ref.sumsq(a.data(), n), avx2->sumsq(a.data(), n),
                    1e-12 * static_cast<double>(n));
    }
}

TEST(Kernels, MatmulMatchesScalarBitExact) {
    const kern::Kernels* avx2 = kern::cpu_has_avx2() ? kern::avx2_kernels() : nullptr;
    if (!avx2) GTEST_SKIP() << "no AVX2 on this host";
    const kern::Kernels& ref = kern::scalar_kernels();
    Rng rng(13);
    for (const auto [m, k, n] :
         std::vector<std::array<std::size_t, 3>>{{1, 1, 1}, {3, 4, 2}, {5, 7, 9}, {16, 16, 16}}) {
        const auto a = random_vec(m * k, rng);
        const auto b = random_vec(k * n, rng);
        std::vector<double> c1(m * n), c2(m * n);
        ref.matmul(c1.data(), a.data(), b.data(), m, k, n);
        avx2->matmul(c2.data(), a.data(), b.data(), m, k, n);
        EXPECT_EQ(c1, c2) << m << "x" << k << "x" << n;
    }
}
