#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pilid/dataset.hpp"

namespace pilid {

// Knots of one feature's piecewise-linear scale.
struct FeatureKnots {
  std::vector<double> points;  // strictly increasing, size = intervals + 1
  bool constant = false;       // degenerate scale: one all-zero unit, flat shape
  std::size_t offset = 0;      // first unit of this feature in the encoded vector

  std::size_t intervals() const { return points.size() - 1; }
  double lower() const { return points.front(); }
  double upper() const { return points.back(); }

  friend bool operator==(const FeatureKnots&, const FeatureKnots&) = default;
};

class CharacteristicPoints {
 public:
  CharacteristicPoints() = default;
  explicit CharacteristicPoints(std::vector<FeatureKnots> features);

  std::size_t num_features() const { return features_.size(); }
  // Total encoded width (sum of per-feature interval counts).
  std::size_t width() const { return width_; }
  const FeatureKnots& feature(std::size_t j) const { return features_[j]; }
  const std::vector<FeatureKnots>& features() const { return features_; }

  friend bool operator==(const CharacteristicPoints&, const CharacteristicPoints&) = default;

 private:
  std::vector<FeatureKnots> features_;
  std::size_t width_ = 0;
};

// Numerical feature j gets gammas[j] equal sub-intervals over [alpha, beta];
// categorical features use their sorted levels. A single gamma is broadcast.
CharacteristicPoints build_points(const std::vector<FeatureSpec>& specs, std::span<const std::size_t> gammas);
CharacteristicPoints build_points(const Dataset& data, std::span<const std::size_t> gammas);

// Writes the encoding of x into out (size points.width()). Values outside a
// feature's scale are clamped first.
void encode_into(std::span<const double> x, const CharacteristicPoints& points, std::span<double> out);
std::vector<double> encode(std::span<const double> x, const CharacteristicPoints& points);
Matrix encode_matrix(const Matrix& rows, const CharacteristicPoints& points);
Matrix encode_matrix(const Dataset& data, const CharacteristicPoints& points);

}  // namespace pilid
