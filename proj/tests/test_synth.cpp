#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pilid/error.hpp"
#include "pilid/synth.hpp"

using namespace pilid;

namespace {

std::vector<std::vector<double>> poly_rows(std::size_t m, std::vector<double> row) {
  row.resize(kPolyDegree + 1, 0.0);
  return std::vector<std::vector<double>>(m, row);
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

TEST_CASE("identity marginal standardizes the feature") {
  SyntheticSpec s;
  s.m = 1;
  s.n = 500;
  s.noise_std = 0.0;
  s.poly_coeffs = poly_rows(1, {0.0, 1.0});
  s.interactions = std::vector<PlantedInteraction>{};
  const auto d = generate(s);
  const auto& x = d.data.rows().storage();
  const double mx = mean_of(x);
  double var = 0.0;
  for (double v : x) var += (v - mx) * (v - mx);
  const double sd = std::sqrt(var / x.size());
  for (std::size_t i = 0; i < s.n; ++i) CHECK(std::abs(d.data.targets()[i] - (x[i] - mx) / sd) < 1e-12);
  // u(x) = x - 1/2 exactly
  CHECK(std::abs(d.truth[0].evaluate(0.25) + 0.25) < 1e-12);
}

TEST_CASE("zero utility gives fair coin labels") {
  SyntheticSpec s;
  s.m = 3;
  s.n = 20000;
  s.noise_std = 0.0;
  s.task = Task::kBinaryClassification;
  s.poly_coeffs = poly_rows(3, {});
  s.interactions = std::vector<PlantedInteraction>{};
  const auto d = generate(s);
  CHECK(std::abs(mean_of(d.data.targets()) - 0.5) < 0.02);
  for (double y : d.data.targets()) CHECK((y == 0.0 || y == 1.0));
}

TEST_CASE("generation is deterministic per seed") {
  SyntheticSpec s;
  s.n = 300;
  const auto a = generate(s);
  const auto b = generate(s);
  CHECK(a.data.rows() == b.data.rows());
  CHECK(a.data.targets() == b.data.targets());
  CHECK(a.coefficients == b.coefficients);
  s.seed = 2;
  CHECK_FALSE(generate(s).data.rows() == a.data.rows());
}

TEST_CASE("regression target is standardized and marginals are centered") {
  for (std::uint64_t seed : {1, 2, 3}) {
    SyntheticSpec s;
    s.seed = seed;
    const auto d = generate(s);
    const auto& y = d.data.targets();
    const double my = mean_of(y);
    double var = 0.0;
    for (double v : y) var += (v - my) * (v - my);
    CHECK(std::abs(my) < 0.05);
    CHECK(std::abs(std::sqrt(var / y.size()) - 1.0) < 0.05);
    CHECK(d.data.num_features() == 10);
    CHECK(d.data.specs()[0].name == "x1");
    CHECK(d.interactions.size() == 2);
    for (const auto& t : d.truth) {
      REQUIRE(t.xs.size() == kTruthPoints);
      // trapezoid integral of a centered degree-10 polynomial
      double integral = 0.0;
      for (std::size_t k = 1; k < t.xs.size(); ++k) {
        integral += 0.5 * (t.values[k] + t.values[k - 1]) * (t.xs[k] - t.xs[k - 1]);
      }
      CHECK(std::abs(integral) < 1e-2);
      const auto [lo, hi] = std::minmax_element(t.values.begin(), t.values.end());
      CHECK(*hi - *lo <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("marginal mean is the exact integral") {
  const auto u = make_marginal({1.0, 2.0, 3.0});  // 1 + 2x + 3x^2, integral 3, range 5
  CHECK(u.mean == doctest::Approx(3.0));
  CHECK(u.scale == doctest::Approx(5.0));
  CHECK(u(0.0) == doctest::Approx(-0.4));
  CHECK(make_marginal({2.0}).scale == 1.0);
}

TEST_CASE("planted interactions add exactly their products") {
  SyntheticSpec s;
  s.m = 4;
  s.n = 200;
  s.interactions = std::vector<PlantedInteraction>{{0, 2, 0.7}, {1, 3, -0.4}};
  const auto with = generate(s);
  s.interactions = std::vector<PlantedInteraction>{};
  const auto without = generate(s);
  CHECK(with.data.rows() == without.data.rows());
  for (std::size_t i = 0; i < s.n; ++i) {
    const auto x = with.data.row(i);
    const double expected = 0.7 * x[0] * x[2] - 0.4 * x[1] * x[3];
    CHECK(std::abs(with.utility[i] - without.utility[i] - expected) < 1e-12);
  }
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec s;
  s.m = 0;
  CHECK_THROWS_AS(generate(s), Error);
  s = {};
  s.interactions = std::vector<PlantedInteraction>{{1, 1, 1.0}};
  CHECK_THROWS_AS(generate(s), Error);
  s = {};
  s.poly_coeffs = poly_rows(3, {});
  CHECK_THROWS_AS(generate(s), Error);
  s = {};
  s.m = 3;
  s.n_interactions = 4;
  CHECK_THROWS_AS(generate(s), Error);
}

TEST_CASE("shape recovery score") {
  TruthCurve t;
  for (std::size_t k = 0; k < kTruthPoints; ++k) {
    t.xs.push_back(k / 100.0);
    t.values.push_back(std::pow(k / 100.0, 2));
  }
  FeatureShape f;
  f.xs = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (double x : f.xs) f.us.push_back(x * x);
  CHECK(shape_recovery_score(f, t).value == doctest::Approx(1.0));
  for (double& u : f.us) u = 3.0 - 2.0 * u;
  CHECK(shape_recovery_score(f, t).value == doctest::Approx(-1.0));
  for (double& u : f.us) u = (3.0 - u) / 2.0 + 17.0;  // back to x^2 plus a shift
  CHECK(shape_recovery_score(f, t).value == doctest::Approx(1.0));
  for (double& u : f.us) u = 0.4;
  const auto flat = shape_recovery_score(f, t);
  CHECK(flat.degenerate);
  CHECK(flat.value == 0.0);
}
