#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tarslab/objective.hpp"
#include "tarslab/rng.hpp"

using namespace tarslab;

namespace {

// Independent O(L^2) oracle: textbook DFT sum, norms over the real parts.
std::vector<double> dft_magnitude_oracle(const Tensor& z) {
    const std::size_t len = z.rows(), dim = z.cols();
    std::vector<double> out(len);
    for (std::size_t k = 0; k < len; ++k) {
        double sq = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            double re = 0.0;
            for (std::size_t l = 0; l < len; ++l) {
                const double ang = -2.0 * M_PI * static_cast<double>(k) *
                                   static_cast<double>(l) / static_cast<double>(len);
                re += z.at(l, d) * std::cos(ang);
            }
            sq += re * re;
        }
        out[k] = std::sqrt(sq);
    }
    return out;
}

}  // namespace

TEST(Spectral, ConstantSequence) {
    // constant z_l = c, L=4, D=1: all energy in frequency zero
    const double c = -0.75;
    const Tensor z({4, 1}, {c, c, c, c});
    const Tensor mag = spectral_magnitude_value(z);
    EXPECT_NEAR(mag[0], 4.0 * std::fabs(c), 1e-12);
    EXPECT_NEAR(mag[1], 0.0, 1e-12);
    EXPECT_NEAR(mag[2], 0.0, 1e-12);
    EXPECT_NEAR(mag[3], 0.0, 1e-12);
}

TEST(Spectral, UnitImpulseIsFlat) {
    const Tensor z({4, 1}, {1, 0, 0, 0});
    const Tensor mag = spectral_magnitude_value(z);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(mag[k], 1.0, 1e-12);
}

TEST(Spectral, MatchesNaiveOracleAllLengths) {
    Rng rng(202);
    for (std::size_t len = 1; len <= 32; ++len) {
        for (const std::size_t dim : {1u, 3u, 8u}) {
            const Tensor z = Tensor::uniform({len, dim}, -2.0, 2.0, rng);
            const Tensor mag = spectral_magnitude_value(z);
            const std::vector<double> expect = dft_magnitude_oracle(z);
            for (std::size_t k = 0; k < len; ++k) {
                ASSERT_NEAR(mag[k], expect[k], 1e-9) << "L=" << len << " D=" << dim;
            }
        }
    }
}

TEST(Spectral, RandomL8D3MatchesOracle) {
    Rng rng(203);
    const Tensor z = Tensor::uniform({8, 3}, -2.0, 2.0, rng);
    const Tensor mag = spectral_magnitude_value(z);
    const auto expect = dft_magnitude_oracle(z);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(mag[k], expect[k], 1e-9);
}

TEST(Spectral, ZeroPaddedFeatureDimsChangeNothing) {
    Rng rng(204);
    const Tensor z = Tensor::uniform({6, 3}, -2.0, 2.0, rng);
    Tensor padded({6, 5});
    for (std::size_t l = 0; l < 6; ++l) {
        for (std::size_t d = 0; d < 3; ++d) padded.at(l, d) = z.at(l, d);
    }
    const Tensor m1 = spectral_magnitude_value(z);
    const Tensor m2 = spectral_magnitude_value(padded);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(m1[k], m2[k], 1e-12);
}

TEST(Spectral, OutputsAreNonNegative) {
    Rng rng(205);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor z = Tensor::uniform({7, 4}, -2.0, 2.0, rng);
        const Tensor mag = spectral_magnitude_value(z);
        for (std::size_t k = 0; k < mag.numel(); ++k) EXPECT_GE(mag[k], 0.0);
    }
}
