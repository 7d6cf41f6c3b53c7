#include "ticketlab/autoencoder.hpp"

#include <cmath>

#include "ticketlab/conv.hpp"
#include "ticketlab/errors.hpp"
#include "ticketlab/layers.hpp"

namespace ticketlab {
namespace {

KernelShape kernel_shape(const Param& p) { return {p.shape[0], p.shape[1], p.shape[2], p.shape[3]}; }

FeatureMap conv(const Param& p, const FeatureMap& x) {
  const KernelShape ks = kernel_shape(p);
  if (x.channels() != ks.in) {
    throw ShapeError("conv: input has " + std::to_string(x.channels()) + " channels, kernel expects " +
                     std::to_string(ks.in));
  }
  FeatureMap out(ks.out, x.height(), x.width());
  circ_conv_raw(p.values, ks, x.flat(), x.height(), x.width(), out.flat());
  return out;
}

// Adds the weight gradient into grads[name] unless the group is frozen and
// returns d loss / d input when `want_input` is set.
FeatureMap conv_backward(const ParamStore& params, const std::string& name, const FeatureMap& x,
                         const FeatureMap& grad_out, GradStore& grads, bool want_input) {
  const Param& p = params.at(name);
  FeatureMap grad_in;
  std::span<double> gi;
  if (want_input) {
    grad_in = FeatureMap(x.channels(), x.height(), x.width());
    gi = grad_in.flat();
  }
  std::span<double> gw;
  if (!p.frozen) {
    auto& g = grads[name];
    if (g.size() != p.values.size()) g.assign(p.values.size(), 0.0);
    gw = g;
  }
  if (gi.empty() && gw.empty()) return grad_in;
  circ_conv_backward_raw(p.values, kernel_shape(p), x.flat(), x.height(), x.width(), grad_out.flat(), gi, gw);
  return grad_in;
}

void add_into(FeatureMap& dst, const FeatureMap& src, double scale = 1.0) {
  if (dst.size() == 0) {
    dst = src;
    if (scale != 1.0) {
      for (double& v : dst.values()) v *= scale;
    }
    return;
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst.values()[i] += scale * src.values()[i];
}

void he_init(Param& p, std::size_t fan_in, RandomStream& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& v : p.values) v = rng.normal(0.0, sd);
}

void check_hint(const HintConfig& hint, std::size_t stages) {
  if (!(hint.t >= 0.0 && hint.t <= 1.0)) throw DomainError("hint proportion t must lie in [0, 1]");
  for (std::size_t s : hint.stages) {
    if (s < 1 || s > stages) throw ShapeError("hint stage " + std::to_string(s) + " does not exist");
  }
}

}  // namespace

void AutoencoderConfig::validate() const {
  if (channels.empty()) throw ConfigError("model.channels", "at least one stage required");
  if (kernel % 2 == 0) throw ConfigError("model.kernel", "kernel side must be odd");
  if (input_channels == 0) throw ConfigError("model.input_channels", "must be positive");
  if (num_classes < 2) throw ConfigError("model.num_classes", "need at least two classes");
  if (image_size == 0 || image_size % (std::size_t{1} << stages()) != 0) {
    throw ConfigError("model.image_size", "must be divisible by 2^stages");
  }
}

std::string enc_conv_name(std::size_t stage) { return "enc.conv" + std::to_string(stage); }
std::string dec_conv_name(std::size_t stage) { return "dec.conv" + std::to_string(stage); }

void init_encoder(ParamStore& params, const AutoencoderConfig& cfg, RandomStream& rng) {
  cfg.validate();
  std::size_t in = cfg.input_channels;
  for (std::size_t i = 1; i <= cfg.stages(); ++i) {
    const std::size_t out = cfg.channels[i - 1];
    Param& p = params.add(enc_conv_name(i), {out, in, cfg.kernel, cfg.kernel}, true);
    he_init(p, in * cfg.kernel * cfg.kernel, rng);
    in = out;
  }
  init_linear_head(params, "head", in, cfg.num_classes, rng);
}

void init_decoder(ParamStore& params, const AutoencoderConfig& cfg, RandomStream& rng) {
  cfg.validate();
  const std::size_t k = cfg.kernel;
  const std::size_t top = cfg.stages();
  Param& g_top = params.add(dec_conv_name(top), {cfg.channels[top - 1], cfg.channels[top - 1], k, k});
  he_init(g_top, cfg.channels[top - 1] * k * k, rng);
  for (std::size_t i = top - 1; i >= 1; --i) {
    Param& p = params.add(dec_conv_name(i), {cfg.channels[i - 1], cfg.channels[i], k, k});
    he_init(p, cfg.channels[i] * k * k, rng);
  }
  // Zero output conv: the untrained decoder reconstructs the blank image.
  params.add(kDecOut, {cfg.input_channels, cfg.channels[0], k, k});
}

void init_linear_head(ParamStore& params, const std::string& prefix, std::size_t in,
                      std::size_t classes, RandomStream& rng) {
  Param& w = params.add(prefix + ".weight", {classes, in});
  he_init(w, in, rng);
  params.add(prefix + ".bias", {classes});
}

EncoderTrace encode(const ParamStore& params, const AutoencoderConfig& cfg, const FeatureMap& image,
                    const std::string& head) {
  if (image.channels() != cfg.input_channels || image.height() != cfg.image_size ||
      image.width() != cfg.image_size) {
    throw ShapeError("encode: image shape does not match the configured input");
  }
  EncoderTrace t;
  t.input = image;
  const FeatureMap* in = &t.input;
  for (std::size_t i = 1; i <= cfg.stages(); ++i) {
    t.pre.push_back(conv(params.at(enc_conv_name(i)), *in));
    t.f.push_back(avg_downsample2(relu(t.pre.back())));
    in = &t.f.back();
  }
  t.pooled = avg_pool(t.f.back());
  if (!head.empty()) {
    t.logits = linear(params.at(head + ".weight").values, params.at(head + ".bias").values, t.pooled);
  }
  return t;
}

DecoderTrace decode(const ParamStore& params, const AutoencoderConfig& cfg, const EncoderTrace& enc,
                    const HintConfig& hint) {
  const std::size_t top = cfg.stages();
  check_hint(hint, top);
  DecoderTrace d;
  d.pre.resize(top);
  d.g.resize(top);
  d.mixed.resize(top);
  for (std::size_t i = top; i >= 1; --i) {
    const FeatureMap in = i == top ? enc.f[top - 1] : upsample_nearest(d.mixed[i], 2);
    d.pre[i - 1] = conv(params.at(dec_conv_name(i)), in);
    d.g[i - 1] = relu(d.pre[i - 1]);
    FeatureMap& m = d.mixed[i - 1];
    m = d.g[i - 1];
    if (hint.stages.count(i)) {
      const FeatureMap& f = enc.f[i - 1];
      if (!f.same_shape(m)) throw ShapeError("decode: hinted stage " + std::to_string(i) + " shape mismatch");
      for (std::size_t j = 0; j < m.size(); ++j) {
        m.values()[j] = (1.0 - hint.t) * d.g[i - 1].values()[j] + hint.t * f.values()[j];
      }
    }
  }
  d.recon = conv(params.at(kDecOut), upsample_nearest(d.mixed[0], 2));
  return d;
}

AutoencoderOutput autoencoder_forward(const ParamStore& params, const AutoencoderConfig& cfg,
                                      const FeatureMap& image, const HintConfig& hint) {
  EncoderTrace enc = encode(params, cfg, image);
  DecoderTrace dec = decode(params, cfg, enc, hint);
  return {std::move(enc.logits), std::move(dec.recon), std::move(enc.f)};
}

void decoder_backward(const ParamStore& params, const AutoencoderConfig& cfg, const EncoderTrace& enc,
                      const DecoderTrace& dec, const HintConfig& hint, const FeatureMap& grad_recon,
                      GradStore& grads, std::vector<FeatureMap>& grad_f) {
  const std::size_t top = cfg.stages();
  grad_f.resize(top);
  FeatureMap up0 = upsample_nearest(dec.mixed[0], 2);
  FeatureMap grad_mixed =
      upsample_nearest_backward(conv_backward(params, kDecOut, up0, grad_recon, grads, true), 2);
  for (std::size_t i = 1; i <= top; ++i) {
    FeatureMap grad_g = grad_mixed;
    if (hint.stages.count(i)) {
      for (double& v : grad_g.values()) v *= 1.0 - hint.t;
      add_into(grad_f[i - 1], grad_mixed, hint.t);
    }
    const FeatureMap grad_pre = relu_backward(dec.pre[i - 1], grad_g);
    if (i == top) {
      add_into(grad_f[top - 1], conv_backward(params, dec_conv_name(i), enc.f[top - 1], grad_pre, grads, true));
    } else {
      const FeatureMap in = upsample_nearest(dec.mixed[i], 2);
      grad_mixed = upsample_nearest_backward(
          conv_backward(params, dec_conv_name(i), in, grad_pre, grads, true), 2);
    }
  }
}

std::vector<double> linear_head_backward(const ParamStore& params, const std::string& prefix,
                                         std::span<const double> pooled,
                                         std::span<const double> grad_logits, GradStore& grads) {
  const Param& w = params.at(prefix + ".weight");
  const Param& b = params.at(prefix + ".bias");
  const std::size_t classes = b.values.size();
  const std::size_t in = pooled.size();
  if (grad_logits.size() != classes || w.values.size() != classes * in) {
    throw ShapeError("linear_head_backward: shape mismatch");
  }
  if (!w.frozen) {
    auto& gw = grads[prefix + ".weight"];
    if (gw.size() != w.values.size()) gw.assign(w.values.size(), 0.0);
    for (std::size_t o = 0; o < classes; ++o) {
      for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += grad_logits[o] * pooled[i];
    }
  }
  if (!b.frozen) {
    auto& gb = grads[prefix + ".bias"];
    if (gb.size() != classes) gb.assign(classes, 0.0);
    for (std::size_t o = 0; o < classes; ++o) gb[o] += grad_logits[o];
  }
  std::vector<double> grad_pooled(in, 0.0);
  for (std::size_t o = 0; o < classes; ++o) {
    for (std::size_t i = 0; i < in; ++i) grad_pooled[i] += grad_logits[o] * w.values[o * in + i];
  }
  return grad_pooled;
}

void encoder_backward(const ParamStore& params, const AutoencoderConfig& cfg, const EncoderTrace& enc,
                      std::span<const double> grad_logits, std::vector<FeatureMap> grad_f,
                      GradStore& grads, const std::string& head) {
  const std::size_t top = cfg.stages();
  grad_f.resize(top);
  if (!grad_logits.empty()) {
    const std::vector<double> gp = linear_head_backward(params, head, enc.pooled, grad_logits, grads);
    const FeatureMap& f = enc.f[top - 1];
    FeatureMap g(f.channels(), f.height(), f.width());
    const double inv = 1.0 / static_cast<double>(f.plane());
    for (std::size_t c = 0; c < f.channels(); ++c) {
      for (double& v : g.channel(c)) v = gp[c] * inv;
    }
    add_into(grad_f[top - 1], g);
  }
  FeatureMap carry;
  for (std::size_t i = top; i >= 1; --i) {
    FeatureMap& gf = grad_f[i - 1];
    if (carry.size() != 0) add_into(gf, carry);
    if (gf.size() == 0) {
      carry = FeatureMap();
      continue;
    }
    const FeatureMap grad_pre = relu_backward(enc.pre[i - 1], avg_downsample2_backward(gf));
    const FeatureMap& in = i == 1 ? enc.input : enc.f[i - 2];
    carry = conv_backward(params, enc_conv_name(i), in, grad_pre, grads, i > 1);
  }
}

}  // namespace ticketlab
