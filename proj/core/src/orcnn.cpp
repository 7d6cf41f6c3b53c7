#include "ticketlab/orcnn.hpp"

#include <cmath>
#include <string>

#include "ticketlab/conv.hpp"
#include "ticketlab/errors.hpp"

namespace ticketlab {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> filters(const ConvTensor& w) {
  return {w.values().data(), static_cast<Eigen::Index>(w.out_channels()),
          static_cast<Eigen::Index>(w.in_channels() * w.taps())};
}

}  // namespace

Orcnn Orcnn::random(std::size_t width, std::size_t in_channels, std::size_t half_width,
                    RandomStream& rng) {
  if (width == 0) throw DomainError("Orcnn::random: width must be positive");
  Orcnn m;
  m.original_width = width;
  m.w = ConvTensor::make_1d(width, in_channels, half_width);
  for (double& v : m.w.values()) v = rng.normal();
  m.a.resize(width);
  for (double& v : m.a) v = rng.sign();
  return m;
}

double Orcnn::scale(std::size_t length) const {
  const double d = static_cast<double>(length);
  if (scale_mode == OrcnnScale::Standard) {
    return 1.0 / (std::sqrt(static_cast<double>(original_width)) * d);
  }
  return std::sqrt(q) / (std::sqrt(static_cast<double>(width())) * d);
}

PatchData make_patch_data(const std::vector<FeatureMap>& inputs, const std::vector<double>& targets,
                          std::size_t half_width) {
  if (inputs.size() != targets.size()) throw ShapeError("make_patch_data: inputs/targets size mismatch");
  PatchData data;
  data.y = Eigen::VectorXd::Map(targets.data(), static_cast<Eigen::Index>(targets.size()));
  for (const auto& x : inputs) {
    if (!x.is_1d()) throw ShapeError("make_patch_data: expects 1D inputs");
    if (data.length == 0) data.length = x.length();
    if (x.length() != data.length) throw ShapeError("make_patch_data: inputs differ in length");
    const std::size_t cols = x.channels() * (2 * half_width + 1);
    Eigen::MatrixXd p(static_cast<Eigen::Index>(x.length()), static_cast<Eigen::Index>(cols));
    for (std::size_t k = 0; k < x.length(); ++k) {
      const PatchMatrix phi = extract_patch(x, k, half_width);
      for (std::size_t j = 0; j < cols; ++j) p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = phi.values[j];
    }
    data.patches.push_back(std::move(p));
  }
  if (!data.patches.empty()) {
    const Eigen::Index d = data.patches[0].rows();
    data.stacked.resize(d * static_cast<Eigen::Index>(data.size()), data.patches[0].cols());
    for (std::size_t i = 0; i < data.size(); ++i) {
      data.stacked.middleRows(static_cast<Eigen::Index>(i) * d, d) = data.patches[i];
    }
  }
  return data;
}

double orcnn_forward(const Orcnn& model, const FeatureMap& x) {
  if (x.channels() != model.w.in_channels()) {
    throw ShapeError("orcnn_forward: input has " + std::to_string(x.channels()) +
                     " channels, model expects " + std::to_string(model.w.in_channels()));
  }
  const FeatureMap z = circ_conv(model.w, x);
  double f = 0.0;
  for (std::size_t r = 0; r < model.width(); ++r) {
    double s = 0.0;
    for (double v : z.channel(r)) s += v > 0.0 ? v : 0.0;
    f += model.a[r] * s;
  }
  return model.scale(x.length()) * f;
}

Eigen::VectorXd orcnn_outputs(const Orcnn& model, const PatchData& data) {
  const auto w = filters(model.w);
  const Eigen::VectorXd a = Eigen::VectorXd::Map(model.a.data(), static_cast<Eigen::Index>(model.a.size()));
  const double scale = model.scale(data.length);
  Eigen::VectorXd out(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.patches[i].cols() != w.cols()) throw ShapeError("orcnn_outputs: patch width does not match filters");
    const Eigen::MatrixXd z = (data.patches[i] * w.transpose()).cwiseMax(0.0);
    out(static_cast<Eigen::Index>(i)) = scale * (z * a).sum();
  }
  return out;
}

OrcnnLossGrad orcnn_loss_and_grad(const Orcnn& model, const PatchData& data) {
  if (data.size() == 0) throw DomainError("orcnn_loss_and_grad: empty dataset");
  const auto w = filters(model.w);
  if (data.stacked.cols() != w.cols()) throw ShapeError("orcnn_loss_and_grad: patch width does not match filters");
  const Eigen::VectorXd a = Eigen::VectorXd::Map(model.a.data(), static_cast<Eigen::Index>(model.a.size()));
  const double scale = model.scale(data.length);
  const auto d = static_cast<Eigen::Index>(data.length);

  const Eigen::MatrixXd z = data.stacked * w.transpose();  // nD x M
  const Eigen::VectorXd per_row = z.cwiseMax(0.0) * a;
  OrcnnLossGrad out;
  out.residual.resize(static_cast<Eigen::Index>(data.size()));
  Eigen::VectorXd row_weight(z.rows());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.residual(ii) = scale * per_row.segment(ii * d, d).sum() - data.y(ii);
    row_weight.segment(ii * d, d).setConstant(out.residual(ii));
  }
  out.loss = 0.5 * out.residual.squaredNorm();

  // dL/dW_r = scale a_r sum_i r_i sum_k 1{z_irk >= 0} phi_k(x_i)
  const Eigen::MatrixXd weighted = (z.array() >= 0.0).cast<double>().colwise() * row_weight.array();
  RowMatrix g = scale * (a.asDiagonal() * (weighted.transpose() * data.stacked));
  out.grad = ConvTensor::make_1d(model.w.out_channels(), model.w.in_channels(), model.w.half_width());
  RowMatrix::Map(out.grad.values().data(), g.rows(), g.cols()) = g;
  return out;
}

}  // namespace ticketlab
