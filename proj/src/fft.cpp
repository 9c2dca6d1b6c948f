// Spectral transform used by the frequency-domain loss: real parts of the
// DFT taken along the token axis of an L x D hidden-state block, then an l2
// norm over the feature dimension per frequency. Power-of-two lengths run
// through an iterative radix-2 FFT, everything else through the direct sum.

#include <cmath>
#include <memory>
#include <vector>

#include "tarslab/autodiff.hpp"
#include "tarslab/kernels.hpp"

namespace tarslab::ag {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT over interleaved (re, im) pairs.
void fft_complex(std::vector<double>& re, std::vector<double>& im) {
    const std::size_t n = re.size();
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -kTwoPi / static_cast<double>(len);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (std::size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::size_t a = i + j, b = i + j + len / 2;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

void dft_direct_real(const double* z, std::size_t len, std::size_t dim, double* out) {
    const auto& K = kern::active();
    for (std::size_t k = 0; k < len; ++k) {
        double* row = out + k * dim;
        for (std::size_t d = 0; d < dim; ++d) row[d] = 0.0;
        for (std::size_t l = 0; l < len; ++l) {
            const double c =
                std::cos(kTwoPi * static_cast<double>(k) * static_cast<double>(l) /
                         static_cast<double>(len));
            K.axpy(row, c, z + l * dim, dim);
        }
    }
}

void dft_fft_real(const double* z, std::size_t len, std::size_t dim, double* out) {
    std::vector<double> re(len), im(len);
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t l = 0; l < len; ++l) {
            re[l] = z[l * dim + d];
            im[l] = 0.0;
        }
        fft_complex(re, im);
        for (std::size_t k = 0; k < len; ++k) out[k * dim + d] = re[k];
    }
}

}  // namespace

void spectral_real_parts(const double* z, std::size_t len, std::size_t dim, double* out) {
    if (is_pow2(len)) {
        dft_fft_real(z, len, dim, out);
    } else {
        dft_direct_real(z, len, dim, out);
    }
}

Var spectral_magnitude(Graph& g, Var z) {
    const Tensor& tz = g.val(z);
    if (tz.rank() != 2) fail_contract("spectral_magnitude: expected L x D, got " + tz.shape_str());
    const std::size_t len = tz.rows(), dim = tz.cols();
    Tensor real({len, dim});
    spectral_real_parts(tz.data(), len, dim, real.data());
    Tensor mag({len});
    const auto& K = kern::active();
    for (std::size_t k = 0; k < len; ++k) {
        mag[k] = std::sqrt(K.sumsq(real.data() + k * dim, dim));
    }
    // The backward pass reuses the cached real parts and magnitudes:
    // d z[l,d] = sum_k cos(2 pi k l / L) * dF_k * R[k,d] / F_k.
    auto cached_real = std::make_shared<Tensor>(std::move(real));
    auto cached_mag = std::make_shared<Tensor>(mag);
    return g.emit(std::move(mag), {z.id},
                  [z, cached_real, cached_mag, len, dim](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        Tensor scaled({len, dim});
        for (std::size_t k = 0; k < len; ++k) {
            const double fk = (*cached_mag)[k];
            const double w = fk > 1e-300 ? d[k] / fk : 0.0;
            for (std::size_t dd = 0; dd < dim; ++dd) {
                scaled.at(k, dd) = w * cached_real->at(k, dd);
            }
        }
        Tensor& dz = gg.grad_buf(z.id);
        const auto& K = kern::active();
        for (std::size_t l = 0; l < len; ++l) {
            double* row = dz.data() + l * dim;
            for (std::size_t k = 0; k < len; ++k) {
                const double c =
                    std::cos(kTwoPi * static_cast<double>(k) * static_cast<double>(l) /
                             static_cast<double>(len));
                K.axpy(row, c, scaled.data() + k * dim, dim);
            }
        }
    });
}

}  // namespace tarslab::ag
