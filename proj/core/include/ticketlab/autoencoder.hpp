#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "ticketlab/params.hpp"
#include "ticketlab/rng.hpp"
#include "ticketlab/tensor.hpp"

namespace ticketlab {

struct AutoencoderConfig {
  std::size_t input_channels = 1;
  std::size_t image_size = 32;
  std::vector<std::size_t> channels{8, 16, 32, 64};
  std::size_t kernel = 3;
  std::size_t num_classes = 4;

  std::size_t stages() const noexcept { return channels.size(); }
  /// Spatial side of f_i (1-based stage index).
  std::size_t stage_size(std::size_t stage) const { return image_size >> stage; }
  /// Throws ConfigError when the image side cannot be halved once per stage.
  void validate() const;
};

/// Feature-map hint settings: g'_i = (1 - t) g_i + t f_i at every stage in `stages`.
struct HintConfig {
  double t = 0.0;
  std::set<std::size_t> stages;  // 1-based stage indices
};

/// Parameter group names.
std::string enc_conv_name(std::size_t stage);  // "enc.conv<i>"
std::string dec_conv_name(std::size_t stage);  // "dec.conv<i>"
inline constexpr const char* kDecOut = "dec.out";
inline constexpr const char* kHeadWeight = "head.weight";
inline constexpr const char* kHeadBias = "head.bias";

/// Adds encoder convs (prunable, no bias) and the classification head, He-initialized.
void init_encoder(ParamStore& params, const AutoencoderConfig& cfg, RandomStream& rng);
/// Adds the decoder: a same-resolution conv producing g_S, then for each lower
/// stage upsample -> conv -> ReLU, then upsample -> conv to the image channels.
void init_decoder(ParamStore& params, const AutoencoderConfig& cfg, RandomStream& rng);
/// Adds `<prefix>.weight` (classes x in) and `<prefix>.bias`, He-initialized weights, zero bias.
void init_linear_head(ParamStore& params, const std::string& prefix, std::size_t in,
                      std::size_t classes, RandomStream& rng);

struct EncoderTrace {
  FeatureMap input;
  std::vector<FeatureMap> pre;  // conv outputs before ReLU, per stage
  std::vector<FeatureMap> f;    // f_1 .. f_S (after ReLU and 2x downsample)
  std::vector<double> pooled;   // global average of f_S
  std::vector<double> logits;   // empty when the head is absent
};

struct DecoderTrace {
  std::vector<FeatureMap> pre;    // conv outputs before ReLU; index i-1 for stage i
  std::vector<FeatureMap> g;      // g_i
  std::vector<FeatureMap> mixed;  // g'_i after hint mixing
  FeatureMap recon;
};

/// Runs the encoder. `head` names the linear head applied to the pooled code
/// ("" skips the head).
EncoderTrace encode(const ParamStore& params, const AutoencoderConfig& cfg, const FeatureMap& image,
                    const std::string& head = "head");

/// Runs the decoder on f_S with hint mixing. Throws ShapeError when a hinted
/// g_i and f_i differ in shape and DomainError when t is outside [0, 1].
DecoderTrace decode(const ParamStore& params, const AutoencoderConfig& cfg, const EncoderTrace& enc,
                    const HintConfig& hint);

struct AutoencoderOutput {
  std::vector<double> logits;
  FeatureMap reconstruction;
  std::vector<FeatureMap> features;  // f_1 .. f_S
};

AutoencoderOutput autoencoder_forward(const ParamStore& params, const AutoencoderConfig& cfg,
                                      const FeatureMap& image, const HintConfig& hint);

/// Backpropagates d loss / d recon through the decoder. Adds parameter
/// gradients for non-frozen decoder groups into `grads` and d loss / d f_i into
/// `grad_f` (sized to the stage count; entries may be empty on entry).
void decoder_backward(const ParamStore& params, const AutoencoderConfig& cfg, const EncoderTrace& enc,
                      const DecoderTrace& dec, const HintConfig& hint, const FeatureMap& grad_recon,
                      GradStore& grads, std::vector<FeatureMap>& grad_f);

/// Backpropagates d loss / d logits (may be empty) and d loss / d f_i (entries
/// may be empty) through the encoder and head, adding into `grads`.
void encoder_backward(const ParamStore& params, const AutoencoderConfig& cfg, const EncoderTrace& enc,
                      std::span<const double> grad_logits, std::vector<FeatureMap> grad_f,
                      GradStore& grads, const std::string& head = "head");

/// Gradient of a linear head over a pooled vector; returns d loss / d pooled.
std::vector<double> linear_head_backward(const ParamStore& params, const std::string& prefix,
                                         std::span<const double> pooled,
                                         std::span<const double> grad_logits, GradStore& grads);

}  // namespace ticketlab
