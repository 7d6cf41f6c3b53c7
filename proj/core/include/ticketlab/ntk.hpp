#pragma once

#include <cstddef>
#include <vector>

#include "ticketlab/orcnn.hpp"

namespace ticketlab {

struct GdConfig {
  double eta = 0.0;
  double lambda0 = 0.0;  // used by the envelope and movement bounds
  std::size_t max_iterations = 5000;
  double stop_loss = 1e-10;  // on ||F - y||^2
  /// Relative slack on the envelope comparison, absorbing rounding.
  double envelope_slack = 1e-9;
};

/// Per-step record of full-batch gradient descent on an ORCNN with the sign vector a frozen.
/// Index t holds the state after t updates (index 0 is the start).
struct GdTrace {
  std::vector<double> loss;          // ||F(W(t)) - y||^2
  std::vector<double> max_movement;  // max_r ||W_r(t) - W_r(0)||
  std::vector<double> max_grad;      // max_r ||dL/dW_r(t)||, L = 0.5 ||F - y||^2
  std::size_t iterations = 0;
  double movement_bound = 0.0;       // 4 sqrt(q n) / (sqrt(M) lambda0) ||F(W(0)) - y||
  bool envelope_ok = true;           // loss_t <= (1 - eta lambda0 / 2)^t loss_0 at every t
  bool movement_ok = true;
  bool grad_ok = true;               // max_grad_t <= sqrt(q n) / sqrt(M) ||F(W(t)) - y||
  bool strictly_decreasing = true;
  std::size_t first_envelope_violation = 0;
};

/// Runs W(t+1) = W(t) - eta dL/dW(t) in place. Throws DomainError for a
/// non-positive eta or lambda0 and TrainingError when the loss becomes
/// non-finite or exceeds ten times its initial value.
GdTrace train_orcnn_gd(Orcnn& model, const PatchData& data, const GdConfig& cfg);

}  // namespace ticketlab
