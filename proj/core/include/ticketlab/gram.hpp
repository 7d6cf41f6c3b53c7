#pragma once

#include <Eigen/Dense>

#include "ticketlab/orcnn.hpp"

namespace ticketlab {

enum class GramKind { Empirical, Infinite };

struct GramMatrix {
  Eigen::MatrixXd values;
  GramKind kind = GramKind::Empirical;
  double q = 1.0;
};

/// G_ij = scale^2 sum_r sum_k sum_l <phi_k(x_i), phi_l(x_j)> 1{<W_r,phi_k(x_i)> >= 0} 1{<W_r,phi_l(x_j)> >= 0},
/// where scale^2 = q / (M D^2) for the model's scale mode. Symmetric bit-exactly.
GramMatrix gram_empirical(const Orcnn& model, const PatchData& data);

/// G_inf_ij = (q / D^2) sum_{k,l} <u, v> (pi - theta) / (2 pi), theta the angle
/// between u = phi_k(x_i) and v = phi_l(x_j). Throws DomainError when a cosine
/// leaves [-1 - 1e-9, 1 + 1e-9].
GramMatrix gram_infty(const PatchData& data, double q);

/// Smallest eigenvalue from a symmetric eigensolver.
double min_eigenvalue(const Eigen::MatrixXd& m);

/// Least eigenvalue of G. Throws DomainError when it is not positive
/// (below 1e-10 times the largest eigenvalue), e.g. for duplicated samples.
double lambda0(const GramMatrix& g);

}  // namespace ticketlab
