#include "ticketlab/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ticketlab/errors.hpp"

namespace ticketlab {
namespace {

// roots[m] = exp(+2 pi J m / D); exponents are reduced mod D before lookup so
// large s*k products stay exact.
std::vector<Complex> unit_roots(std::size_t length) {
  std::vector<Complex> roots(length);
  for (std::size_t m = 0; m < length; ++m) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(length);
    roots[m] = {std::cos(angle), std::sin(angle)};
  }
  return roots;
}

std::size_t reduce(long exponent, std::size_t length) {
  const long d = static_cast<long>(length);
  long r = exponent % d;
  return static_cast<std::size_t>(r < 0 ? r + d : r);
}

void require_1d(const FeatureMap& x, const char* who) {
  if (!x.is_1d()) throw ShapeError(std::string(who) + ": expects a 1D feature map");
  if (x.length() == 0) throw DomainError(std::string(who) + ": empty signal");
}

SpectralKernel kernel_with_roots(const ConvTensor& w, std::size_t k, std::size_t length,
                                 const std::vector<Complex>& roots) {
  SpectralKernel out{w.out_channels(), w.in_channels(),
                     std::vector<Complex>(w.out_channels() * w.in_channels())};
  const long s = static_cast<long>(w.half_width());
  for (std::size_t i = 0; i < w.out_channels(); ++i) {
    for (std::size_t j = 0; j < w.in_channels(); ++j) {
      Complex acc{0.0, 0.0};
      for (long l = -s; l <= s; ++l) {
        acc += w.tap(i, j, l) * roots[reduce(l * static_cast<long>(k), length)];
      }
      out.values[i * out.cols + j] = acc;
    }
  }
  return out;
}

}  // namespace

Spectrum dft_forward(const FeatureMap& x) {
  require_1d(x, "dft_forward");
  const std::size_t d = x.length();
  const auto roots = unit_roots(d);
  Spectrum s{x.channels(), d, std::vector<Complex>(x.channels() * d)};
  const double inv = 1.0 / static_cast<double>(d);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t k = 0; k < d; ++k) {
      Complex acc{0.0, 0.0};
      for (std::size_t j = 0; j < d; ++j) {
        // exp(-2 pi J j k / D) == conj(roots[jk mod D])
        acc += x.at(c, j) * std::conj(roots[(j * k) % d]);
      }
      s.at(c, k) = acc * inv;
    }
  }
  return s;
}

FeatureMap dft_inverse(const Spectrum& s) {
  if (s.length == 0) throw DomainError("dft_inverse: empty spectrum");
  const std::size_t d = s.length;
  const auto roots = unit_roots(d);
  FeatureMap x(s.channels, d);
  for (std::size_t c = 0; c < s.channels; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      Complex acc{0.0, 0.0};
      for (std::size_t k = 0; k < d; ++k) acc += s.at(c, k) * roots[(j * k) % d];
      x.at(c, j) = acc.real();
    }
  }
  return x;
}

SpectralKernel spectral_kernel(const ConvTensor& w, std::size_t frequency, std::size_t length) {
  if (!w.is_1d()) throw ShapeError("spectral_kernel: expects a 1D convolution tensor");
  if (length == 0 || frequency >= length) {
    throw DomainError("spectral_kernel: frequency " + std::to_string(frequency) +
                      " outside [0, " + std::to_string(length) + ")");
  }
  return kernel_with_roots(w, frequency, length, unit_roots(length));
}

FeatureMap spectral_conv(const ConvTensor& w, const FeatureMap& x) {
  const ConvTensor* layer = &w;
  return lcnn_spectral_eval(std::span<const ConvTensor>(layer, 1), x);
}

FeatureMap lcnn_spectral_eval(std::span<const ConvTensor> layers, const FeatureMap& x) {
  require_1d(x, "lcnn_spectral_eval");
  if (layers.empty()) throw ShapeError("lcnn_spectral_eval: no layers");
  std::size_t channels = x.channels();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!layers[l].is_1d()) throw ShapeError("lcnn_spectral_eval: layer is not 1D");
    if (layers[l].in_channels() != channels) {
      throw ShapeError("lcnn_spectral_eval: layer " + std::to_string(l) + " expects " +
                       std::to_string(layers[l].in_channels()) + " channels, chain provides " +
                       std::to_string(channels));
    }
    channels = layers[l].out_channels();
  }

  const std::size_t d = x.length();
  const auto roots = unit_roots(d);
  const Spectrum xs = dft_forward(x);
  Spectrum ys{channels, d, std::vector<Complex>(channels * d)};

  std::vector<Complex> v;
  std::vector<Complex> next;
  for (std::size_t k = 0; k < d; ++k) {
    v.assign(x.channels(), Complex{});
    for (std::size_t c = 0; c < x.channels(); ++c) v[c] = xs.at(c, k);
    for (const auto& layer : layers) {
      const SpectralKernel wk = kernel_with_roots(layer, k, d, roots);
      next.assign(wk.rows, Complex{});
      for (std::size_t i = 0; i < wk.rows; ++i) {
        Complex acc{0.0, 0.0};
        for (std::size_t j = 0; j < wk.cols; ++j) acc += wk.at(i, j) * v[j];
        next[i] = acc;
      }
      v.swap(next);
    }
    for (std::size_t c = 0; c < channels; ++c) ys.at(c, k) = v[c];
  }
  return dft_inverse(ys);
}

}  // namespace ticketlab
