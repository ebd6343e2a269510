// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails that was not listed with --allow-fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "pilid/metrics.hpp"
#include "pilid/persist.hpp"
#include "pilid/pilib.hpp"
#include "pilid/synth.hpp"
#include "pilid/trainer.hpp"

using namespace pilid;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

Dataset uniform_data(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix rows(n, m);
  for (double& v : rows.storage()) v = u(rng);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(4 * rows(i, 0)) + rows(i, 1) * rows(i, m - 1) + 0.1 * u(rng);
  std::vector<FeatureSpec> kinds(m);
  for (std::size_t j = 0; j < m; ++j) kinds[j].name = "f" + std::to_string(j);
  auto specs = compute_specs(rows, kinds);
  return Dataset(std::move(rows), std::move(y), std::move(specs), Task::kRegression);
}

Outcome gradient_check() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (double lambda : {0.0, 0.01}) {
      const Dataset d = uniform_data(30, 4, seed);
      TrainConfig c;
      c.seed = seed;
      c.sigma = 0.5;
      c.lambda = lambda;
      c.activation = Activation::kTanh;
      const std::size_t g[] = {3};
      PilidModel model = initialize_model(d, g, parse_mlp_widths("4-8-8-1", 4), c);
      // Move off the least-squares optimum so every gradient is non-trivial.
      std::mt19937_64 rng(seed + 50);
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      for (double& b : model.pl.b) b = u(rng);
      for (double& o : model.pl.omega) o += u(rng);
      const Matrix e = encode_matrix(d, model.points);
      const auto idx = all_indices(d.size());
      PilidGradients grad;
      objective(model, d.rows(), e, d.targets(), idx, c, &grad);
      auto f = [&] { return objective(model, d.rows(), e, d.targets(), idx, c); };
      auto params = model.slots();
      auto grads = grad.slots(true);
      for (std::size_t s = 0; s < params.size(); ++s) {
        for (std::size_t i = 0; i < params[s].values.size(); ++i) {
          const double num = oracle::central_difference(f, &params[s].values[i], 1e-5);
          worst = std::max(worst, oracle::gradient_error(grads[s].values[i], num));
          ++checked;
        }
      }
    }
  }
  return {worst <= 1e-4, std::to_string(checked) + " partials, worst relative error " + fmt("%.2e", worst)};
}

Outcome encoding_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> gamma(1, 20);
  std::size_t bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    FeatureSpec spec;
    spec.name = "x";
    spec.alpha = -5 + 10 * u(rng);
    spec.beta = spec.alpha + 1e-3 + 5 * u(rng);
    const std::size_t g[] = {gamma(rng)};
    const auto points = build_points({spec}, g);
    const auto& knots = points.feature(0).points;
    const double span = spec.beta - spec.alpha;
    const double x1 = spec.alpha - 0.2 * span + 1.4 * span * u(rng);
    const double x2 = spec.alpha - 0.2 * span + 1.4 * span * u(rng);
    const double x[] = {std::min(x1, x2)};
    const double y[] = {std::max(x1, x2)};
    const auto ex = encode(x, points);
    const auto ey = encode(y, points);
    if (!oracle::check_block(ex, knots, x[0]).empty() || !oracle::check_block(ey, knots, y[0]).empty()) ++bad;
    for (std::size_t k = 0; k < ex.size(); ++k) {
      if (ey[k] < ex[k]) {
        ++bad;
        break;
      }
    }
  }
  FeatureSpec unit;
  unit.name = "x";
  unit.alpha = 0.0;
  unit.beta = 1.0;
  const std::size_t five[] = {5};
  const double half[] = {0.5};
  const auto hand = encode(half, build_points({unit}, five));
  const bool hand_ok = hand == std::vector<double>{1, 1, 0.5, 0, 0};
  return {bad == 0 && hand_ok, std::to_string(bad) + " invariant violations in 10000 pairs; hand case " +
                                   (hand_ok ? "(1,1,0.5,0,0)" : "wrong")};
}

Outcome degeneracy() {
  SyntheticSpec s;
  s.m = 4;
  s.n = 2000;
  const auto data = generate(s).data;
  TrainConfig c;
  c.epochs = 5;
  const std::size_t g[] = {1};
  const auto model = train(data, g, parse_mlp_widths("8-1", 4), c).model;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(4);
    for (double& v : x) v = 0.1 + 0.8 * u(rng);
    for (std::size_t j = 0; j < 4; ++j) {
      const double h = 0.05 + 0.04 * u(rng);
      auto f = [&](double v) {
        auto z = x;
        z[j] = v;
        return linear_forward(encode(z, model.points), model.pl, model.points);
      };
      worst = std::max(worst, std::abs(f(x[j] + h) - 2 * f(x[j]) + f(x[j] - h)));
    }
  }
  return {worst <= 1e-10, "max |second difference| " + fmt("%.2e", worst)};
}

Outcome least_squares_init() {
  // Noiseless targets that are exactly linear in the encoded columns.
  const Dataset d = uniform_data(400, 3, 11);
  const std::size_t g[] = {4};
  const auto points = build_points(d, g);
  const Matrix e = encode_matrix(d, points);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> w(points.width());
  for (double& v : w) v = u(rng);
  const double w0 = u(rng);
  std::vector<double> y(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    y[i] = w0;
    for (std::size_t k = 0; k < w.size(); ++k) y[i] += w[k] * e(i, k);
  }
  const auto fit = init_least_squares(e, y, kDefaultRidge, points);
  double res = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = linear_forward(e.row(i), fit, points) - y[i];
    res += r * r;
    norm += y[i] * y[i];
  }
  const double rel_res = std::sqrt(res / norm);

  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 r2(100 + seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix sys(50, 6);
    for (double& v : sys.storage()) v = unit(r2);
    std::vector<double> t(50);
    for (double& v : t) v = 4 * unit(r2) - 2;
    FeatureKnots k;
    k.points = {0, 1, 2, 3, 4, 5, 6};
    const CharacteristicPoints p({k});
    const auto got = init_least_squares(sys, t, kDefaultRidge, p);
    std::vector<std::vector<double>> x(50, std::vector<double>(6));
    for (std::size_t i = 0; i < 50; ++i) {
      for (std::size_t c = 0; c < 6; ++c) x[i][c] = sys(i, c);
    }
    const auto ref = oracle::least_squares_with_intercept(x, t, kDefaultRidge);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    worst = std::max(worst, rel(got.w0, ref[0]));
    for (std::size_t c = 0; c < 6; ++c) worst = std::max(worst, rel(got.w[c], ref[c + 1]));
  }
  return {rel_res <= 1e-6 && worst <= 1e-8,
          "residual " + fmt("%.2e", rel_res) + ", max deviation from brute force " + fmt("%.2e", worst)};
}

Outcome shape_recovery() {
  std::size_t good_seeds = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec s;
    s.m = 5;
    s.n = 10000;
    s.noise_std = 0.1;
    s.seed = seed;
    s.interactions = std::vector<PlantedInteraction>{};
    const auto synth = generate(s);
    TrainConfig c;
    c.epochs = 50;
    c.seed = seed;
    const std::size_t g[] = {10};
    const auto model = train(synth.data, g, parse_mlp_widths("5-32-32-1", 5), c).model;
    const auto shapes = extract_shapes(model.pl, model.points);
    std::size_t good = 0;
    double lowest = 1.0;
    for (std::size_t j = 0; j < 5; ++j) {
      const auto score = shape_recovery_score(shapes.shapes[j], synth.truth[j]);
      if (!score.degenerate && score.value >= 0.9) ++good;
      lowest = std::min(lowest, score.value);
    }
    if (good >= 4) ++good_seeds;
    per_seed += (per_seed.empty() ? "" : " ") + std::to_string(good) + "/5(min " + fmt("%.3f", lowest) + ")";
  }
  return {good_seeds >= 4, std::to_string(good_seeds) + "/5 seeds recover >= 4 shapes: " + per_seed};
}

ExperimentConfig regression_experiment() {
  ExperimentConfig e;
  e.synth.m = 10;
  e.synth.n = 20000;
  e.mlp = "10-32-32-1";
  e.gammas = {5};
  return e;
}

Outcome hybrid_vs_mlp() {
  auto e = regression_experiment();
  const auto hybrid = run_trials(e, 5);
  e.model = ModelKind::kMlp;
  const auto plain = run_trials(e, 5);
  const bool ordered = hybrid.mean <= plain.mean * 1.02;

  // The full-width network must train end to end.
  auto full = regression_experiment();
  full.mlp = "100-200-400-400-200-100-1";
  full.train.epochs = 2;
  const double full_mse = run_trial(full, 0);
  const bool full_ok = std::isfinite(full_mse);
  return {ordered && full_ok, "hybrid MSE " + fmt("%.4f", hybrid.mean) + " vs MLP " + fmt("%.4f", plain.mean) +
                                  "; full architecture MSE " + fmt("%.4f", full_mse)};
}

Outcome init_comparison() {
  auto e = regression_experiment();
  e.gammas = {1};
  const auto ls = run_trials(e, 5);
  e.train.linear_init = LinearInit::kGaussian;
  const auto gauss = run_trials(e, 5);
  return {ls.mean <= gauss.mean * 1.02,
          "least-squares init MSE " + fmt("%.4f", ls.mean) + " vs Gaussian " + fmt("%.4f", gauss.mean)};
}

Outcome pilib_orders() {
  SyntheticSpec s;
  s.m = 8;
  s.n = 10000;
  s.seed = 1;
  s.interactions = std::vector<PlantedInteraction>{{0, 1, 1.0}};
  const auto data = generate(s).data;
  PilibConfig pc;
  pc.blocks = 6;
  pc.max_order = 3;
  TrainConfig c;
  c.epochs = 10;
  const std::size_t g[] = {5};
  const auto r = train_pilib(data, g, parse_mlp_widths("8-8-1", 8), pc, c);
  const double k_max = *std::max_element(r.orders.begin(), r.orders.end());
  const bool order_ok = !r.capped && k_max <= 3.0;

  // Perturbing a masked feature must leave its block unchanged.
  std::size_t leaks = 0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (std::size_t b = 0; b < pc.blocks; ++b) {
    const auto active = r.model.active_features(b);
    for (std::size_t j = 0; j < 8; ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      for (std::size_t i = 0; i < 20; ++i) {
        std::vector<double> x(data.row(i).begin(), data.row(i).end());
        const double before = block_output(r.model, b, x, GateMode::kEval);
        x[j] += u(rng);
        if (block_output(r.model, b, x, GateMode::kEval) != before) ++leaks;
      }
    }
  }
  const double five[] = {5};
  const double pairs[] = {2, 2, 2};
  const bool penalty_ok = lk_penalty(five, 3, 0.0) == 2.0 && lk_penalty(pairs, 3, 0.0) == 0.0 &&
                          lk_penalty(pairs, 3, 0.5) == 0.0;

  std::string sets;
  for (std::size_t b = 0; b < r.active_sets.size(); ++b) {
    sets += " {";
    for (std::size_t j = 0; j < r.active_sets[b].size(); ++j) sets += (j ? "," : "") + data.specs()[r.active_sets[b][j]].name;
    sets += "}";
  }
  return {order_ok && leaks == 0 && penalty_ok,
          "phase 1 " + std::to_string(r.phase1_epochs) + " epochs" + (r.capped ? " (capped)" : "") + ", max order " +
              fmt("%g", k_max) + ", active sets" + sets + "; masked leaks " + std::to_string(leaks) +
              "; penalty cases " + (penalty_ok ? "exact" : "wrong")};
}

Outcome classification() {
  ExperimentConfig e;
  e.synth.m = 10;
  e.synth.n = 10000;
  e.synth.task = Task::kBinaryClassification;
  e.mlp = "10-32-32-1";
  const double a = run_trial(e, 1);
  return {a >= 0.80, "held-out AUC " + fmt("%.4f", a)};
}

Outcome reproducibility() {
  SyntheticSpec s;
  s.m = 5;
  s.n = 3000;
  const auto data = generate(s).data;
  TrainConfig c;
  c.epochs = 5;
  const std::size_t g[] = {5};
  const auto widths = parse_mlp_widths("16-16-1", 5);
  const AnyModel a = train(data, g, widths, c).model;
  const AnyModel b = train(data, g, widths, c).model;
  PilibConfig pc;
  pc.blocks = 4;
  const AnyModel p1 = train_pilib(data, g, parse_mlp_widths("8-1", 5), pc, c).model;
  const AnyModel p2 = train_pilib(data, g, parse_mlp_widths("8-1", 5), pc, c).model;
  const bool identical = serialize(a) == serialize(b) && serialize(p1) == serialize(p2);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  Matrix rows(100, 5);
  for (double& v : rows.storage()) v = u(rng);
  bool exact = true;
  for (const AnyModel* m : {&a, &p1}) {
    const AnyModel back = deserialize(serialize(*m));
    const auto before = predict(*m, rows);
    const auto after = predict(back, rows);
    exact = exact && std::memcmp(before.data(), after.data(), before.size() * sizeof(double)) == 0;
  }
  return {identical && exact, std::string("same-seed models ") + (identical ? "bit-identical" : "differ") +
                                  "; round-trip predictions " + (exact ? "bit-exact" : "differ")};
}

Outcome loss_trend() {
  std::size_t improving = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec s;
    s.seed = seed;
    const auto data = generate(s).data;
    TrainConfig c;
    c.seed = seed;
    const std::size_t g[] = {5};
    const auto trace = train(data, g, parse_mlp_widths("32-32-1", data.num_features()), c).loss_trace;
    const std::size_t w = std::min<std::size_t>(10, trace.size());
    const double smoothed = std::accumulate(trace.end() - w, trace.end(), 0.0) / static_cast<double>(w);
    if (smoothed < trace.front()) ++improving;
    detail += (detail.empty() ? "" : " ") + fmt("%.3f", trace.front()) + "->" + fmt("%.3f", smoothed);
  }
  return {improving >= 4, std::to_string(improving) + "/5 seeds improve: " + detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_check},
      {"encoding oracle", encoding_oracle},
      {"single-interval degeneracy", degeneracy},
      {"least-squares initializer", least_squares_init},
      {"shape recovery", shape_recovery},
      {"hybrid vs plain MLP", hybrid_vs_mlp},
      {"least-squares vs Gaussian init", init_comparison},
      {"gated-block order constraint", pilib_orders},
      {"classification AUC", classification},
      {"reproducibility and persistence", reproducibility},
      {"training-loss trend", loss_trend},
  };
  // Arguments: criterion numbers to run (default all); `--allow-fail N` keeps
  // a known failure from setting the exit code. It is still printed as FAIL.
  std::vector<bool> selected(criteria.size(), true);
  std::vector<bool> allowed(criteria.size(), false);
  bool any_selected = false;
  for (int i = 1; i < argc; ++i) {
    const bool allow = std::strcmp(argv[i], "--allow-fail") == 0 && i + 1 < argc;
    const int n = std::atoi(argv[allow ? ++i : i]);
    if (n < 1 || static_cast<std::size_t>(n) > criteria.size()) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    if (allow) {
      allowed[n - 1] = true;
    } else {
      if (!any_selected) selected.assign(criteria.size(), false);
      any_selected = true;
      selected[n - 1] = true;
    }
  }
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass && !allowed[i]) ++failures;
    if (!o.pass && allowed[i]) std::printf("  (criterion %zu is a known failure, see the README)\n", i + 1);
  }
  return failures == 0 ? 0 : 1;
}
