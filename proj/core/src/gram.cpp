#include "ticketlab/gram.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ticketlab/errors.hpp"

namespace ticketlab {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

GramMatrix gram_empirical(const Orcnn& model, const PatchData& data) {
  const std::size_t n = data.size();
  const Eigen::Map<const RowMatrix> w(model.w.values().data(), static_cast<Eigen::Index>(model.w.out_channels()),
                                      static_cast<Eigen::Index>(model.w.in_channels() * model.w.taps()));
  std::vector<Eigen::MatrixXd> active(n);
  for (std::size_t i = 0; i < n; ++i) {
    active[i] = ((data.patches[i] * w.transpose()).array() >= 0.0).cast<double>().matrix();
  }
  const double s = model.scale(data.length);
  GramMatrix g{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
               GramKind::Empirical, model.q};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const Eigen::MatrixXd k = data.patches[i] * data.patches[j].transpose();  // D x D
      const Eigen::MatrixXd shared = active[i] * active[j].transpose();         // sum_r 1 1
      const double v = s * s * (k.array() * shared.array()).sum();
      g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      g.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return g;
}

GramMatrix gram_infty(const PatchData& data, double q) {
  const std::size_t n = data.size();
  const double d2 = static_cast<double>(data.length) * static_cast<double>(data.length);
  GramMatrix g{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
               GramKind::Infinite, q};
  std::vector<Eigen::VectorXd> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = data.patches[i].rowwise().norm();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const Eigen::MatrixXd k = data.patches[i] * data.patches[j].transpose();
      double acc = 0.0;
      for (Eigen::Index a = 0; a < k.rows(); ++a) {
        for (Eigen::Index b = 0; b < k.cols(); ++b) {
          const double uv = k(a, b);
          if (uv == 0.0) continue;
          double cosine = uv / (norms[i](a) * norms[j](b));
          if (std::abs(cosine) > 1.0 + 1e-9) {
            throw DomainError("gram_infty: patch cosine " + std::to_string(cosine) + " outside [-1, 1]");
          }
          cosine = std::clamp(cosine, -1.0, 1.0);
          acc += uv * (std::numbers::pi - std::acos(cosine)) / (2.0 * std::numbers::pi);
        }
      }
      const double v = q * acc / d2;
      g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      g.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return g;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

double lambda0(const GramMatrix& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g.values, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  const double lo = ev(0);
  const double hi = ev(ev.size() - 1);
  if (!(lo > 1e-10 * std::max(1.0, std::abs(hi)))) {
    throw DomainError("lambda0: least eigenvalue " + std::to_string(lo) + " is not positive (degenerate dataset)");
  }
  return lo;
}

}  // namespace ticketlab
