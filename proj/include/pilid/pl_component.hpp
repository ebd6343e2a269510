#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pilid/dataset.hpp"
#include "pilid/encoding.hpp"
#include "pilid/params.hpp"

namespace pilid {

// Wide component: per-unit affine layer over the encoded vector, summed per
// feature and scaled by omega, plus a global constant.
//
//   score = w0 + sum_j omega_j * sum_{k in block j} (w_k * phi_k + b_k)
//
// The per-unit biases are not gated by phi, so they only shift feature j's
// constant (omega_j * sum b) and never bend its shape.
struct PiecewiseLinearParams {
  std::vector<double> w;      // one per encoded unit
  std::vector<double> b;      // one per encoded unit
  std::vector<double> omega;  // one per feature
  double w0 = 0.0;

  static PiecewiseLinearParams zeros(const CharacteristicPoints& points);
  friend bool operator==(const PiecewiseLinearParams&, const PiecewiseLinearParams&) = default;
};

double linear_forward(std::span<const double> phi, const PiecewiseLinearParams& params,
                      const CharacteristicPoints& points);

// Adds upstream * d(score)/d(params) into grad (same layout as params).
void linear_backward(std::span<const double> phi, const PiecewiseLinearParams& params,
                     const CharacteristicPoints& points, double upstream, PiecewiseLinearParams& grad);

inline constexpr double kDefaultRidge = 1e-8;

// Least-squares fit of targets on the encoded columns with an unpenalized
// intercept: w from the ridge-regularized normal equations, w0 the fitted
// intercept, omega = 1, b = 0. ridge == 0 on a singular system throws.
PiecewiseLinearParams init_least_squares(const Matrix& encoded, std::span<const double> targets, double ridge,
                                         const CharacteristicPoints& points);

// Baseline initializer: w ~ N(0, sigma^2), omega = 1, b = 0, w0 = 0.
PiecewiseLinearParams init_gaussian_linear(const CharacteristicPoints& points, double sigma, std::uint64_t seed);

struct FeatureShape {
  std::size_t feature = 0;
  std::vector<double> xs;  // characteristic points
  std::vector<double> us;  // cumulative marginal value at each point

  // Piecewise-linear interpolation over (xs, us), clamped to the ends.
  double evaluate(double x) const;
};

enum class ShapeAnchor {
  kFirstPoint,  // u_j(first point) = 0
  kMeanCentered // mean of u_j over the reference rows = 0
};

struct ShapeSet {
  std::vector<FeatureShape> shapes;
  // Constant such that linear_forward(encode(x)) = offset + sum_j u_j(x_j).
  double offset = 0.0;
};

// kMeanCentered needs the encoded reference rows (normally the training set).
ShapeSet extract_shapes(const PiecewiseLinearParams& params, const CharacteristicPoints& points,
                        ShapeAnchor anchor = ShapeAnchor::kFirstPoint, const Matrix* reference_encoded = nullptr);

}  // namespace pilid

namespace pilid {

// Trainable slots in a fixed order: w (regularized), b, omega, w0.
ParamSlots slots(PiecewiseLinearParams& params);

}  // namespace pilid
