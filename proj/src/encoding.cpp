#include "pilid/encoding.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "pilid/error.hpp"

namespace pilid {

CharacteristicPoints::CharacteristicPoints(std::vector<FeatureKnots> features) : features_(std::move(features)) {
  width_ = 0;
  for (auto& f : features_) {
    if (f.points.size() < 2) throw Error("each feature needs at least two characteristic points");
    for (std::size_t k = 1; k < f.points.size(); ++k) {
      if (!f.constant && !(f.points[k] > f.points[k - 1])) {
        throw Error("characteristic points must be strictly increasing");
      }
    }
    f.offset = width_;
    width_ += f.intervals();
  }
}

CharacteristicPoints build_points(const std::vector<FeatureSpec>& specs, std::span<const std::size_t> gammas) {
  if (gammas.size() != 1 && gammas.size() != specs.size()) {
    throw DimensionError("expected 1 or " + std::to_string(specs.size()) + " interval counts, got " +
                         std::to_string(gammas.size()));
  }
  std::vector<FeatureKnots> features;
  features.reserve(specs.size());
  for (std::size_t j = 0; j < specs.size(); ++j) {
    const FeatureSpec& spec = specs[j];
    const std::size_t gamma = gammas.size() == 1 ? gammas[0] : gammas[j];
    FeatureKnots knots;
    if (spec.kind == FeatureKind::kCategorical) {
      if (spec.levels.empty()) throw Error("categorical feature '" + spec.name + "' has no levels");
      if (spec.levels.size() == 1) {
        knots.constant = true;
        knots.points = {spec.levels[0], spec.levels[0]};
      } else {
        knots.points = spec.levels;
      }
    } else {
      if (gamma < 1) throw Error("feature '" + spec.name + "': number of intervals must be at least 1");
      if (spec.alpha > spec.beta) throw Error("feature '" + spec.name + "': alpha exceeds beta");
      if (spec.alpha == spec.beta) {
        knots.constant = true;
        knots.points = {spec.alpha, spec.alpha};
      } else {
        knots.points.resize(gamma + 1);
        const double span = spec.beta - spec.alpha;
        for (std::size_t k = 0; k < gamma; ++k) {
          knots.points[k] = spec.alpha + (static_cast<double>(k) / static_cast<double>(gamma)) * span;
        }
        knots.points[gamma] = spec.beta;
      }
    }
    if (knots.constant) {
      std::fprintf(stderr, "warning: feature '%s' is constant; its shape is flat\n", spec.name.c_str());
    }
    features.push_back(std::move(knots));
  }
  return CharacteristicPoints(std::move(features));
}

CharacteristicPoints build_points(const Dataset& data, std::span<const std::size_t> gammas) {
  return build_points(data.specs(), gammas);
}

void encode_into(std::span<const double> x, const CharacteristicPoints& points, std::span<double> out) {
  if (x.size() != points.num_features()) {
    throw DimensionError("input has " + std::to_string(x.size()) + " features, expected " +
                         std::to_string(points.num_features()));
  }
  if (out.size() != points.width()) throw DimensionError("output buffer does not match encoded width");
  for (std::size_t j = 0; j < x.size(); ++j) {
    const FeatureKnots& f = points.feature(j);
    double* block = out.data() + f.offset;
    if (f.constant) {
      block[0] = 0.0;
      continue;
    }
    const double v = std::clamp(x[j], f.lower(), f.upper());
    const auto& p = f.points;
    for (std::size_t k = 1; k < p.size(); ++k) {
      // The fractional branch wins at the knots themselves.
      if (v >= p[k - 1] && v <= p[k]) {
        block[k - 1] = (v - p[k - 1]) / (p[k] - p[k - 1]);
      } else if (v > p[k]) {
        block[k - 1] = 1.0;
      } else {
        block[k - 1] = 0.0;
      }
    }
  }
}

std::vector<double> encode(std::span<const double> x, const CharacteristicPoints& points) {
  std::vector<double> out(points.width());
  encode_into(x, points, out);
  return out;
}

Matrix encode_matrix(const Matrix& rows, const CharacteristicPoints& points) {
  if (rows.cols() != points.num_features()) throw DimensionError("row width does not match the feature count");
  Matrix out(rows.rows(), points.width());
  for (std::size_t i = 0; i < rows.rows(); ++i) encode_into(rows.row(i), points, out.row(i));
  return out;
}

Matrix encode_matrix(const Dataset& data, const CharacteristicPoints& points) {
  return encode_matrix(data.rows(), points);
}

}  // namespace pilid
