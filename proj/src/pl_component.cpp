#include "pilid/pl_component.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "pilid/error.hpp"

namespace pilid {

namespace {

void check_layout(const PiecewiseLinearParams& params, const CharacteristicPoints& points) {
  if (params.w.size() != points.width() || params.b.size() != points.width() ||
      params.omega.size() != points.num_features()) {
    throw DimensionError("piecewise-linear parameters do not match the encoding layout");
  }
}

}  // namespace

PiecewiseLinearParams PiecewiseLinearParams::zeros(const CharacteristicPoints& points) {
  PiecewiseLinearParams p;
  p.w.assign(points.width(), 0.0);
  p.b.assign(points.width(), 0.0);
  p.omega.assign(points.num_features(), 0.0);
  return p;
}

double linear_forward(std::span<const double> phi, const PiecewiseLinearParams& params,
                      const CharacteristicPoints& points) {
  check_layout(params, points);
  if (phi.size() != points.width()) throw DimensionError("encoded vector width does not match the layout");
  double score = params.w0;
  for (std::size_t j = 0; j < points.num_features(); ++j) {
    const FeatureKnots& f = points.feature(j);
    double group = 0.0;
    for (std::size_t k = f.offset; k < f.offset + f.intervals(); ++k) group += params.w[k] * phi[k] + params.b[k];
    score += params.omega[j] * group;
  }
  return score;
}

void linear_backward(std::span<const double> phi, const PiecewiseLinearParams& params,
                     const CharacteristicPoints& points, double upstream, PiecewiseLinearParams& grad) {
  grad.w0 += upstream;
  for (std::size_t j = 0; j < points.num_features(); ++j) {
    const FeatureKnots& f = points.feature(j);
    const double scale = upstream * params.omega[j];
    double group = 0.0;
    for (std::size_t k = f.offset; k < f.offset + f.intervals(); ++k) {
      group += params.w[k] * phi[k] + params.b[k];
      grad.w[k] += scale * phi[k];
      grad.b[k] += scale;
    }
    grad.omega[j] += upstream * group;
  }
}

PiecewiseLinearParams init_least_squares(const Matrix& encoded, std::span<const double> targets, double ridge,
                                         const CharacteristicPoints& points) {
  const std::size_t n = encoded.rows();
  const std::size_t width = encoded.cols();
  if (n < 1) throw Error("least-squares initialization needs at least one row");
  if (targets.size() != n) throw DimensionError("target count does not match encoded rows");
  if (width != points.width()) throw DimensionError("encoded width does not match the layout");
  if (!(ridge >= 0.0)) throw Error("ridge must be non-negative");

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> phi(encoded.storage().data(), static_cast<Eigen::Index>(n),
                                       static_cast<Eigen::Index>(width));
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), static_cast<Eigen::Index>(n));

  // Centering removes the intercept from the system.
  const Eigen::RowVectorXd col_mean = phi.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd centered = phi.rowwise() - col_mean;
  const Eigen::VectorXd y_centered = y.array() - y_mean;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(width));
  gram.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += ridge;
  const Eigen::VectorXd rhs = centered.transpose() * y_centered;

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double d_max = width > 0 ? d.cwiseAbs().maxCoeff() : 0.0;
  const double d_min = width > 0 ? d.minCoeff() : 0.0;
  const double tolerance = 1e-12 * std::max(1.0, d_max) * static_cast<double>(std::max<std::size_t>(width, 1));
  if (ldlt.info() != Eigen::Success || (width > 0 && d_min <= tolerance)) {
    if (ridge == 0.0) {
      throw Error("normal equations are singular; use a positive ridge (default " + std::to_string(kDefaultRidge) +
                  ")");
    }
    if (d_min <= 0.0) throw Error("normal equations are not positive definite even with ridge");
  }
  const Eigen::VectorXd w = ldlt.solve(rhs);

  PiecewiseLinearParams params;
  params.w.assign(w.data(), w.data() + w.size());
  params.b.assign(width, 0.0);
  params.omega.assign(points.num_features(), 1.0);
  params.w0 = y_mean - col_mean.dot(w);
  for (double v : params.w) {
    if (!std::isfinite(v)) throw Error("least-squares initialization produced non-finite weights");
  }
  return params;
}

PiecewiseLinearParams init_gaussian_linear(const CharacteristicPoints& points, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw Error("sigma must be positive");
  PiecewiseLinearParams params;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, sigma);
  params.w.resize(points.width());
  for (double& v : params.w) v = normal(rng);
  params.b.assign(points.width(), 0.0);
  params.omega.assign(points.num_features(), 1.0);
  return params;
}

double FeatureShape::evaluate(double x) const {
  if (xs.empty()) return 0.0;
  if (x <= xs.front()) return us.front();
  if (x >= xs.back()) return us.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - xs.begin());
  const double t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
  return us[k - 1] + t * (us[k] - us[k - 1]);
}

ShapeSet extract_shapes(const PiecewiseLinearParams& params, const CharacteristicPoints& points, ShapeAnchor anchor,
                        const Matrix* reference_encoded) {
  check_layout(params, points);
  ShapeSet set;
  set.offset = params.w0;
  for (std::size_t j = 0; j < points.num_features(); ++j) {
    const FeatureKnots& f = points.feature(j);
    FeatureShape shape;
    shape.feature = j;
    shape.xs = f.points;
    shape.us.assign(f.points.size(), 0.0);
    double bias_sum = 0.0;
    for (std::size_t k = 0; k < f.intervals(); ++k) {
      bias_sum += params.b[f.offset + k];
      const double delta = f.constant ? 0.0 : params.omega[j] * params.w[f.offset + k];
      shape.us[k + 1] = shape.us[k] + delta;
    }
    set.offset += params.omega[j] * bias_sum;
    set.shapes.push_back(std::move(shape));
  }

  if (anchor == ShapeAnchor::kMeanCentered) {
    if (reference_encoded == nullptr || reference_encoded->rows() == 0) {
      throw Error("mean-centered shapes need reference rows");
    }
    if (reference_encoded->cols() != points.width()) throw DimensionError("reference rows do not match the layout");
    for (std::size_t j = 0; j < points.num_features(); ++j) {
      const FeatureKnots& f = points.feature(j);
      double mean = 0.0;
      for (std::size_t i = 0; i < reference_encoded->rows(); ++i) {
        const auto row = reference_encoded->row(i);
        double u = 0.0;
        for (std::size_t k = f.offset; k < f.offset + f.intervals(); ++k) u += params.w[k] * row[k];
        mean += f.constant ? 0.0 : params.omega[j] * u;
      }
      mean /= static_cast<double>(reference_encoded->rows());
      for (double& u : set.shapes[j].us) u -= mean;
      set.offset += mean;
    }
  }
  return set;
}

}  // namespace pilid

namespace pilid {

ParamSlots slots(PiecewiseLinearParams& params) {
  return {{params.w, true}, {params.b, false}, {params.omega, false}, {std::span<double>(&params.w0, 1), false}};
}

}  // namespace pilid
