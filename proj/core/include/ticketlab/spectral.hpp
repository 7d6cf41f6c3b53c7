#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "ticketlab/tensor.hpp"

namespace ticketlab {

using Complex = std::complex<double>;

/// Channelwise DFT coefficients of a c x D signal.
///
/// Convention: forward  x~^k = (1/D) sum_s x_s exp(-2 pi J s k / D)
///             inverse  x_s  =       sum_k x~^k exp(+2 pi J s k / D)
/// so that inverse(forward(x)) == x, avg_pool(x) == x~^0, and Parseval reads
/// ||x||^2 = D * sum_k |x~^k|^2. Under this pair the kernel transform below
/// carries the + sign: dft(W*x)(k) = W~(k) x~^k.
struct Spectrum {
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<Complex> coeffs;  // c x D, row-major

  Complex& at(std::size_t c, std::size_t k) { return coeffs[c * length + k]; }
  const Complex& at(std::size_t c, std::size_t k) const { return coeffs[c * length + k]; }
};

/// W~(k) as a dense c' x c complex matrix (row-major).
struct SpectralKernel {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> values;

  const Complex& at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

Spectrum dft_forward(const FeatureMap& x);

/// Real part of the inverse transform. For spectra of real signals the
/// discarded imaginary part is rounding noise.
FeatureMap dft_inverse(const Spectrum& s);

/// [W~(k)]_{ij} = sum_{l=-s..s} w_{ij,l} exp(+2 pi J l k / D).
SpectralKernel spectral_kernel(const ConvTensor& w, std::size_t frequency, std::size_t length);

/// circ_conv evaluated through the spectral product W~(k) x~^k.
FeatureMap spectral_conv(const ConvTensor& w, const FeatureMap& x);

/// Evaluates W^L * ... * W^0 * x as sum_k W^L(k)...W^0(k) x~^k exp(2 pi J p k / D).
FeatureMap lcnn_spectral_eval(std::span<const ConvTensor> layers, const FeatureMap& x);

}  // namespace ticketlab
