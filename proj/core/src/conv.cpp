#include "ticketlab/conv.hpp"

#include <algorithm>
#include <string>

#include "ticketlab/errors.hpp"

namespace ticketlab {
namespace {

inline std::size_t wrap(long idx, std::size_t n) {
  const long m = static_cast<long>(n);
  long r = idx % m;
  return static_cast<std::size_t>(r < 0 ? r + m : r);
}

// Gathers in[y+dy-ch, x+dx-cw] (circular) for one input plane into `dst`.
void gather_shifted(const double* plane, std::size_t height, std::size_t width, long oy, long ox,
                    std::vector<std::size_t>& col_map, double* dst) {
  col_map.resize(width);
  for (std::size_t x = 0; x < width; ++x) col_map[x] = wrap(static_cast<long>(x) + ox, width);
  for (std::size_t y = 0; y < height; ++y) {
    const double* row = plane + wrap(static_cast<long>(y) + oy, height) * width;
    double* out = dst + y * width;
    for (std::size_t x = 0; x < width; ++x) out[x] = row[col_map[x]];
  }
}

// Inverse of gather_shifted: plane[y+dy-ch, x+dx-cw] += src[y, x].
void scatter_shifted(double* plane, std::size_t height, std::size_t width, long oy, long ox,
                     std::vector<std::size_t>& col_map, const double* src) {
  col_map.resize(width);
  for (std::size_t x = 0; x < width; ++x) col_map[x] = wrap(static_cast<long>(x) + ox, width);
  for (std::size_t y = 0; y < height; ++y) {
    double* row = plane + wrap(static_cast<long>(y) + oy, height) * width;
    const double* in = src + y * width;
    for (std::size_t x = 0; x < width; ++x) row[col_map[x]] += in[x];
  }
}

void check_raw(std::span<const double> w, KernelShape shape, std::span<const double> in,
               std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw DomainError("circ_conv: empty spatial extent");
  if (w.size() != shape.out * shape.in * shape.kh * shape.kw) {
    throw ShapeError("circ_conv: weight span does not match kernel shape");
  }
  if (in.size() != shape.in * height * width) {
    throw ShapeError("circ_conv: input has " + std::to_string(in.size() / (height * width)) +
                     " channels, kernel expects " + std::to_string(shape.in));
  }
}

}  // namespace

void circ_conv_raw(std::span<const double> w, KernelShape shape, std::span<const double> in,
                   std::size_t height, std::size_t width, std::span<double> out) {
  check_raw(w, shape, in, height, width);
  const std::size_t plane = height * width;
  if (out.size() != shape.out * plane) throw ShapeError("circ_conv: output span has wrong size");
  std::fill(out.begin(), out.end(), 0.0);

  const long ch = static_cast<long>(shape.kh / 2);
  const long cw = static_cast<long>(shape.kw / 2);
  const std::size_t taps = shape.kh * shape.kw;
  std::vector<double> shifted(plane);
  std::vector<std::size_t> col_map;

  for (std::size_t i = 0; i < shape.in; ++i) {
    for (std::size_t dy = 0; dy < shape.kh; ++dy) {
      for (std::size_t dx = 0; dx < shape.kw; ++dx) {
        bool any = false;
        for (std::size_t o = 0; o < shape.out && !any; ++o) {
          any = w[(o * shape.in + i) * taps + dy * shape.kw + dx] != 0.0;
        }
        if (!any) continue;
        gather_shifted(in.data() + i * plane, height, width, static_cast<long>(dy) - ch,
                       static_cast<long>(dx) - cw, col_map, shifted.data());
        for (std::size_t o = 0; o < shape.out; ++o) {
          const double wv = w[(o * shape.in + i) * taps + dy * shape.kw + dx];
          if (wv == 0.0) continue;
          double* dst = out.data() + o * plane;
          for (std::size_t p = 0; p < plane; ++p) dst[p] += wv * shifted[p];
        }
      }
    }
  }
}

void circ_conv_backward_raw(std::span<const double> w, KernelShape shape,
                            std::span<const double> in, std::size_t height, std::size_t width,
                            std::span<const double> grad_out, std::span<double> grad_in,
                            std::span<double> grad_w) {
  check_raw(w, shape, in, height, width);
  const std::size_t plane = height * width;
  if (grad_out.size() != shape.out * plane) throw ShapeError("circ_conv_backward: grad_out size");
  const bool want_in = !grad_in.empty();
  const bool want_w = !grad_w.empty();
  if (want_in && grad_in.size() != in.size()) throw ShapeError("circ_conv_backward: grad_in size");
  if (want_w && grad_w.size() != w.size()) throw ShapeError("circ_conv_backward: grad_w size");

  const long ch = static_cast<long>(shape.kh / 2);
  const long cw = static_cast<long>(shape.kw / 2);
  const std::size_t taps = shape.kh * shape.kw;
  std::vector<double> shifted(plane);
  std::vector<double> back(plane);
  std::vector<std::size_t> col_map;

  for (std::size_t i = 0; i < shape.in; ++i) {
    for (std::size_t dy = 0; dy < shape.kh; ++dy) {
      for (std::size_t dx = 0; dx < shape.kw; ++dx) {
        const long oy = static_cast<long>(dy) - ch;
        const long ox = static_cast<long>(dx) - cw;
        if (want_w) {
          gather_shifted(in.data() + i * plane, height, width, oy, ox, col_map, shifted.data());
        }
        bool any_in = false;
        if (want_in) std::fill(back.begin(), back.end(), 0.0);
        for (std::size_t o = 0; o < shape.out; ++o) {
          const std::size_t widx = (o * shape.in + i) * taps + dy * shape.kw + dx;
          const double* go = grad_out.data() + o * plane;
          if (want_w) {
            double acc = 0.0;
            for (std::size_t p = 0; p < plane; ++p) acc += go[p] * shifted[p];
            grad_w[widx] += acc;
          }
          if (want_in) {
            const double wv = w[widx];
            if (wv == 0.0) continue;
            any_in = true;
            for (std::size_t p = 0; p < plane; ++p) back[p] += wv * go[p];
          }
        }
        if (want_in && any_in) {
          scatter_shifted(grad_in.data() + i * plane, height, width, oy, ox, col_map, back.data());
        }
      }
    }
  }
}

FeatureMap circ_conv(const ConvTensor& w, const FeatureMap& x) {
  if (x.channels() != w.in_channels()) {
    throw ShapeError("circ_conv: input has " + std::to_string(x.channels()) +
                     " channels, kernel expects " + std::to_string(w.in_channels()));
  }
  if (x.height() == 0 || x.width() == 0) throw DomainError("circ_conv: spatial length < 1");
  FeatureMap out(w.out_channels(), x.height(), x.width());
  circ_conv_raw(w.flat(), {w.out_channels(), w.in_channels(), w.kernel_h(), w.kernel_w()}, x.flat(),
                x.height(), x.width(), out.flat());
  return out;
}

ConvGrads circ_conv_backward(const ConvTensor& w, const FeatureMap& x, const FeatureMap& grad_out) {
  if (grad_out.channels() != w.out_channels() || grad_out.height() != x.height() ||
      grad_out.width() != x.width()) {
    throw ShapeError("circ_conv_backward: grad_out shape mismatch");
  }
  ConvGrads g{FeatureMap(x.channels(), x.height(), x.width()),
              ConvTensor(w.out_channels(), w.in_channels(), w.kernel_h(), w.kernel_w())};
  circ_conv_backward_raw(w.flat(), {w.out_channels(), w.in_channels(), w.kernel_h(), w.kernel_w()},
                         x.flat(), x.height(), x.width(), grad_out.flat(), g.input.flat(),
                         g.weights.flat());
  return g;
}

std::vector<double> avg_pool(const FeatureMap& v) {
  if (v.plane() == 0) throw DomainError("avg_pool: empty feature map");
  std::vector<double> out(v.channels());
  const double inv = 1.0 / static_cast<double>(v.plane());
  for (std::size_t c = 0; c < v.channels(); ++c) {
    double s = 0.0;
    for (double e : v.channel(c)) s += e;
    out[c] = s * inv;
  }
  return out;
}

PatchMatrix extract_patch(const FeatureMap& x, std::size_t position, std::size_t half_width) {
  if (!x.is_1d()) throw ShapeError("extract_patch: expects a 1D feature map");
  if (position >= x.length()) {
    throw IndexError("extract_patch: position " + std::to_string(position) +
                     " outside [0, " + std::to_string(x.length()) + ")");
  }
  const std::size_t cols = 2 * half_width + 1;
  PatchMatrix p{x.channels(), cols, std::vector<double>(x.channels() * cols)};
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t l = 0; l < cols; ++l) {
      const long j = static_cast<long>(position) + static_cast<long>(l) - static_cast<long>(half_width);
      p.values[c * cols + l] = x.at(c, wrap(j, x.length()));
    }
  }
  return p;
}

FeatureMap circular_shift(const FeatureMap& x, long offset) {
  FeatureMap out(x.channels(), x.height(), x.width());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t y = 0; y < x.height(); ++y) {
      for (std::size_t j = 0; j < x.width(); ++j) {
        out.at(c, y, j) = x.at(c, y, wrap(static_cast<long>(j) - offset, x.width()));
      }
    }
  }
  return out;
}

}  // namespace ticketlab
