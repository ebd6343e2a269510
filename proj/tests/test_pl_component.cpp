#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pilid/encoding.hpp"
#include "pilid/error.hpp"
#include "pilid/pl_component.hpp"

using namespace pilid;

namespace {

CharacteristicPoints unit_points(std::vector<std::size_t> gammas, std::size_t m) {
  std::vector<FeatureSpec> specs(m);
  for (std::size_t j = 0; j < m; ++j) {
    specs[j].name = "x" + std::to_string(j);
    specs[j].alpha = 0.0;
    specs[j].beta = 1.0;
  }
  return build_points(specs, gammas);
}

PiecewiseLinearParams random_params(const CharacteristicPoints& p, std::uint64_t seed) {
  PiecewiseLinearParams params;
  params.w = testing::uniform(p.width(), -2, 2, seed);
  params.b = testing::uniform(p.width(), -1, 1, seed + 1);
  params.omega = testing::uniform(p.num_features(), 0.5, 1.5, seed + 2);
  params.w0 = 0.3;
  return params;
}

}  // namespace

TEST_CASE("linear_forward hand cases") {
  SUBCASE("all ones encoding sums the weights") {
    const auto p = unit_points({5}, 2);
    auto params = PiecewiseLinearParams::zeros(p);
    std::fill(params.w.begin(), params.w.end(), 1.0);
    std::fill(params.omega.begin(), params.omega.end(), 1.0);
    const double x[] = {1.0, 1.0};
    CHECK(linear_forward(encode(x, p), params, p) == 10.0);
  }
  SUBCASE("zero omega leaves w0") {
    const auto p = unit_points({5}, 3);
    auto params = random_params(p, 1);
    std::fill(params.omega.begin(), params.omega.end(), 0.0);
    const double x[] = {0.2, 0.9, 0.4};
    CHECK(linear_forward(encode(x, p), params, p) == params.w0);
  }
  SUBCASE("single interval affine form") {
    const auto p = unit_points({1}, 1);
    PiecewiseLinearParams params{{2.0}, {0.0}, {1.0}, 0.5};
    const double x[] = {0.25};
    CHECK(linear_forward(encode(x, p), params, p) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("layout mismatch is an error") {
  const auto p = unit_points({3}, 2);
  auto params = PiecewiseLinearParams::zeros(p);
  params.w.pop_back();
  const std::vector<double> phi(p.width(), 0.0);
  CHECK_THROWS_AS(linear_forward(phi, params, p), DimensionError);
}

TEST_CASE("linear_backward matches finite differences") {
  const auto p = unit_points({3, 4}, 2);
  auto params = random_params(p, 7);
  const double x[] = {0.37, 0.81};
  const auto phi = encode(x, p);
  auto grad = PiecewiseLinearParams::zeros(p);
  grad.omega.assign(2, 0.0);
  linear_backward(phi, params, p, 1.0, grad);
  auto f = [&] { return linear_forward(phi, params, p); };
  for (std::size_t k = 0; k < params.w.size(); ++k) {
    CHECK(oracle::gradient_error(grad.w[k], oracle::central_difference(f, &params.w[k], 1e-6)) < 1e-8);
    CHECK(oracle::gradient_error(grad.b[k], oracle::central_difference(f, &params.b[k], 1e-6)) < 1e-8);
  }
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(oracle::gradient_error(grad.omega[j], oracle::central_difference(f, &params.omega[j], 1e-6)) < 1e-8);
  }
  CHECK(grad.w0 == 1.0);
}

TEST_CASE("least squares fits exactly linear targets") {
  const auto p = unit_points({4}, 3);
  const auto rows = testing::random_matrix(200, 3, 0, 1, 11);
  const Matrix e = encode_matrix(rows, p);
  const auto truth = testing::uniform(p.width(), -3, 3, 12);
  std::vector<double> y(200);
  double norm = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    y[i] = 1.5;
    for (std::size_t k = 0; k < p.width(); ++k) y[i] += truth[k] * e(i, k);
    norm += y[i] * y[i];
  }
  const auto params = init_least_squares(e, y, kDefaultRidge, p);
  double resid = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const double r = linear_forward(e.row(i), params, p) - y[i];
    resid += r * r;
  }
  CHECK(std::sqrt(resid) <= 1e-6 * std::sqrt(norm));
  CHECK(params.omega == std::vector<double>(3, 1.0));
  CHECK(params.b == std::vector<double>(p.width(), 0.0));
}

TEST_CASE("least squares on zero targets gives zero weights and intercept") {
  const auto p = unit_points({3}, 2);
  const Matrix e = encode_matrix(testing::random_matrix(30, 2, 0, 1, 2), p);
  const auto params = init_least_squares(e, std::vector<double>(30, 0.0), kDefaultRidge, p);
  for (double w : params.w) CHECK(std::abs(w) < 1e-12);
  CHECK(params.w0 == 0.0);
}

TEST_CASE("least squares matches a brute-force normal-equation solve") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    // Encoded-like 50 x 6 system with generic columns in [0, 1].
    const Matrix e = testing::random_matrix(50, 6, 0, 1, 100 + seed);
    const auto y = testing::uniform(50, -2, 2, 200 + seed);
    const auto p = unit_points({1}, 6);
    const auto params = init_least_squares(e, y, kDefaultRidge, p);
    std::vector<std::vector<double>> x(50, std::vector<double>(6));
    for (std::size_t i = 0; i < 50; ++i) {
      for (std::size_t k = 0; k < 6; ++k) x[i][k] = e(i, k);
    }
    const auto ref = oracle::least_squares_with_intercept(x, y, kDefaultRidge);
    CHECK(testing::rel_error(params.w0, ref[0]) < 1e-8);
    for (std::size_t k = 0; k < 6; ++k) CHECK(testing::rel_error(params.w[k], ref[k + 1]) < 1e-8);
  }
}

TEST_CASE("singular systems need a ridge") {
  const auto p = unit_points({5}, 1);
  Matrix rows(3, 1);
  rows(0, 0) = 0.1;
  rows(1, 0) = 0.15;
  rows(2, 0) = 0.9;
  const Matrix e = encode_matrix(rows, p);
  const std::vector<double> y{1, 2, 3};
  CHECK_THROWS_WITH(init_least_squares(e, y, 0.0, p), doctest::Contains("positive ridge"));
  CHECK_NOTHROW(init_least_squares(e, y, kDefaultRidge, p));
}

TEST_CASE("wide encodings do not crash") {
  const auto p = unit_points({40}, 3);
  const Matrix e = encode_matrix(testing::random_matrix(10, 3, 0, 1, 3), p);
  const auto params = init_least_squares(e, testing::uniform(10, -1, 1, 4), kDefaultRidge, p);
  for (double w : params.w) CHECK(std::isfinite(w));
}

TEST_CASE("shape of unit weights is a staircase of ones") {
  const auto p = unit_points({5}, 1);
  auto params = PiecewiseLinearParams::zeros(p);
  params.w.assign(5, 1.0);
  params.omega = {1.0};
  const auto shapes = extract_shapes(params, p);
  CHECK(shapes.shapes[0].us == std::vector<double>{0, 1, 2, 3, 4, 5});
  CHECK(shapes.shapes[0].xs == p.feature(0).points);
}

TEST_CASE("zero weights give flat shapes and one interval gives a line") {
  const auto p = unit_points({1}, 2);
  auto params = PiecewiseLinearParams::zeros(p);
  params.omega = {1, 1};
  CHECK(extract_shapes(params, p).shapes[1].us == std::vector<double>{0, 0});
  params.w = {3.0, -1.0};
  const auto s = extract_shapes(params, p);
  CHECK(s.shapes[0].us.size() == 2);
  CHECK(s.shapes[0].us[1] == 3.0);
}

TEST_CASE("shapes agree with finite differences of linear_forward at every point") {
  const auto p = unit_points({3, 6, 2}, 3);
  const auto params = random_params(p, 21);
  const auto shapes = extract_shapes(params, p);
  std::vector<double> x{0.3, 0.6, 0.2};
  for (std::size_t j = 0; j < 3; ++j) {
    auto probe = x;
    probe[j] = p.feature(j).points[0];
    const double base = linear_forward(encode(probe, p), params, p);
    for (std::size_t k = 0; k < p.feature(j).points.size(); ++k) {
      probe[j] = p.feature(j).points[k];
      const double diff = linear_forward(encode(probe, p), params, p) - base;
      CHECK(std::abs(diff - shapes.shapes[j].us[k]) < 1e-10);
    }
  }
}

TEST_CASE("forward equals offset plus the shape values") {
  const auto p = unit_points({4, 3}, 2);
  const auto params = random_params(p, 5);
  for (auto anchor : {ShapeAnchor::kFirstPoint, ShapeAnchor::kMeanCentered}) {
    const Matrix ref = encode_matrix(testing::random_matrix(50, 2, 0, 1, 6), p);
    const auto shapes = extract_shapes(params, p, anchor, &ref);
    const auto xs = testing::random_matrix(40, 2, -0.2, 1.2, 9);
    for (std::size_t i = 0; i < xs.rows(); ++i) {
      const double direct = linear_forward(encode(xs.row(i), p), params, p);
      const double via = shapes.offset + shapes.shapes[0].evaluate(xs(i, 0)) + shapes.shapes[1].evaluate(xs(i, 1));
      CHECK(std::abs(direct - via) < 1e-10);
    }
  }
}

TEST_CASE("shape differences equal forward differences along one feature") {
  const auto p = unit_points({5, 5}, 2);
  const auto params = random_params(p, 33);
  const auto shapes = extract_shapes(params, p);
  const auto a = testing::uniform(100, 0, 1, 1);
  const auto b = testing::uniform(100, 0, 1, 2);
  for (std::size_t i = 0; i < 100; ++i) {
    const double x1[] = {a[i], 0.4};
    const double x2[] = {b[i], 0.4};
    const double lhs = linear_forward(encode(x1, p), params, p) - linear_forward(encode(x2, p), params, p);
    const double rhs = shapes.shapes[0].evaluate(a[i]) - shapes.shapes[0].evaluate(b[i]);
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("mean-centered anchor needs reference rows") {
  const auto p = unit_points({2}, 1);
  CHECK_THROWS(extract_shapes(PiecewiseLinearParams::zeros(p), p, ShapeAnchor::kMeanCentered));
}

TEST_CASE("gaussian linear init is seeded") {
  const auto p = unit_points({5}, 4);
  CHECK(init_gaussian_linear(p, 0.05, 3) == init_gaussian_linear(p, 0.05, 3));
  CHECK(init_gaussian_linear(p, 0.05, 3).w != init_gaussian_linear(p, 0.05, 4).w);
  CHECK_THROWS(init_gaussian_linear(p, 0.0, 3));
}
