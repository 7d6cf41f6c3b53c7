#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "ticketlab/rng.hpp"
#include "ticketlab/tensor.hpp"

namespace ticketlab {

enum class OrcnnScale {
  Standard,  // 1 / (sqrt(m) D)
  Pruned,    // sqrt(q) / (sqrt(M) D)
};

/// One-hidden-layer ReLU CNN with average pooling and a frozen sign vector:
///   f(x) = scale * sum_r a_r sum_k relu(<W_r, phi_k(x)>).
struct Orcnn {
  std::vector<double> a;          // length M (== m before pruning)
  ConvTensor w;                   // M x c x (2s+1)
  std::size_t original_width = 0; // m
  double q = 1.0;                 // retained fraction 1 - p
  OrcnnScale scale_mode = OrcnnScale::Standard;

  /// a_r uniform on {-1,+1}, entries of W i.i.d. N(0, 1).
  static Orcnn random(std::size_t width, std::size_t in_channels, std::size_t half_width,
                      RandomStream& rng);

  std::size_t width() const noexcept { return a.size(); }
  double scale(std::size_t length) const;
};

/// Patch matrices of a 1D dataset: row k of patches[i] is phi_k(x_i) flattened
/// channel-major, matching the layout of a filter W_r.
struct PatchData {
  std::vector<Eigen::MatrixXd> patches;  // each D x c(2s+1)
  Eigen::MatrixXd stacked;               // all patches, sample-major: nD x c(2s+1)
  Eigen::VectorXd y;
  std::size_t length = 0;

  std::size_t size() const noexcept { return patches.size(); }
};

PatchData make_patch_data(const std::vector<FeatureMap>& inputs, const std::vector<double>& targets,
                          std::size_t half_width);

/// Direct evaluation through circ_conv and avg_pool.
double orcnn_forward(const Orcnn& model, const FeatureMap& x);

/// Outputs F_i for every sample, via the patch matrices.
Eigen::VectorXd orcnn_outputs(const Orcnn& model, const PatchData& data);

struct OrcnnLossGrad {
  double loss = 0.0;          // 0.5 * ||F - y||^2
  Eigen::VectorXd residual;   // F - y
  ConvTensor grad;            // d loss / d W; a is frozen
};

/// Loss 0.5 sum_i (F_i - y_i)^2 and its gradient in W. The activation
/// indicator is 1{<W_r, phi_k> >= 0}. Throws DomainError on an empty dataset.
OrcnnLossGrad orcnn_loss_and_grad(const Orcnn& model, const PatchData& data);

}  // namespace ticketlab
