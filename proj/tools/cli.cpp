#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "pilid/error.hpp"
#include "pilid/export.hpp"
#include "pilid/metrics.hpp"
#include "pilid/persist.hpp"
#include "pilid/pilib.hpp"
#include "pilid/synth.hpp"
#include "pilid/trainer.hpp"

namespace pilid::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::size_t> parse_gammas(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || part.empty() || v < 1) {
      throw Error("bad interval count '" + part + "' in --gamma (expected positive integers, comma separated)");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw Error("--gamma needs at least one value");
  return out;
}

struct TrainFlags {
  TrainConfig config;
  std::string reg = "l2";
  std::string activation = "relu";
  std::string linear_init = "least-squares";
  bool no_linear = false;
  std::string gamma = "5";
  std::string mlp = "32-32-1";

  TrainConfig resolve() const {
    TrainConfig c = config;
    c.reg = parse_regularizer(reg);
    c.activation = parse_activation(activation);
    c.linear_init = parse_linear_init(linear_init);
    c.linear_component = !no_linear;
    c.validate();
    return c;
  }
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--gamma,--gammas", f.gamma, "Intervals per numerical feature: one value or one per feature (a,b,...)")
      ->capture_default_str();
  app->add_option("--mlp", f.mlp, "Network widths ending in the output 1, e.g. 32-32-1")->capture_default_str();
  app->add_option("--lr", f.config.learning_rate, "Adam learning rate")->capture_default_str();
  app->add_option("--epochs", f.config.epochs, "Training epochs")->capture_default_str();
  app->add_option("--batch", f.config.batch_size, "Minibatch size")->capture_default_str();
  app->add_option("--lambda", f.config.lambda, "Regularization weight")->capture_default_str();
  app->add_option("--reg", f.reg, "Regularizer: l1, l2 or none")->capture_default_str();
  app->add_option("--sigma", f.config.sigma, "Std of the Gaussian weight initialization")->capture_default_str();
  app->add_option("--ridge", f.config.ridge, "Ridge term of the least-squares initialization")->capture_default_str();
  app->add_option("--seed", f.config.seed, "Random seed")->capture_default_str();
  app->add_option("--activation", f.activation, "Hidden activation: relu or tanh")->capture_default_str();
  app->add_option("--linear-init", f.linear_init, "Linear-part initialization: least-squares or gaussian")
      ->capture_default_str();
  app->add_flag("--no-linear", f.no_linear, "Drop the piecewise-linear part (plain MLP baseline)");
}

struct DataFlags {
  std::string path;
  std::string target = "y";
  std::string task = "reg";
  std::size_t categorical_threshold = 20;
  std::vector<std::string> categorical;
  std::vector<std::string> numerical;
  double split = 0.0;

  Dataset load() const {
    CsvOptions opts;
    opts.categorical_threshold = categorical_threshold;
    for (const auto& c : categorical) opts.kind_overrides[c] = FeatureKind::kCategorical;
    for (const auto& c : numerical) opts.kind_overrides[c] = FeatureKind::kNumerical;
    return load_csv(path, target, parse_task(task), opts);
  }

  // Whole file, or (train, held-out) when --split is set.
  std::pair<Dataset, std::optional<Dataset>> load_split(std::uint64_t seed) const {
    Dataset all = load();
    if (split == 0.0) return {std::move(all), std::nullopt};
    auto [train_part, test_part] = pilid::split(all, split, seed);
    return {std::move(train_part), std::move(test_part)};
  }
};

void add_data_flags(CLI::App* app, DataFlags& f) {
  app->add_option("--data", f.path, "Training CSV with a header row")->required();
  app->add_option("--target", f.target, "Target column name")->capture_default_str();
  app->add_option("--task", f.task, "reg or clf")->capture_default_str();
  app->add_option("--categorical-threshold", f.categorical_threshold,
                  "Integer columns with at most this many distinct values are categorical")
      ->capture_default_str();
  app->add_option("--categorical", f.categorical, "Force a column to be categorical (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app->add_option("--numerical", f.numerical, "Force a column to be numerical (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app->add_option("--split", f.split, "Train on this fraction and report the held-out metric (0 = use all rows)");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string held_out_metric(const std::vector<double>& pred, const Dataset& held_out) {
  if (held_out.task() == Task::kRegression) return "mse " + fmt(mse(pred, held_out.targets()));
  return "auc " + fmt(auc(pred, held_out.targets()));
}

std::size_t feature_index(const std::vector<FeatureSpec>& specs, const std::string& name) {
  for (std::size_t j = 0; j < specs.size(); ++j) {
    if (specs[j].name == name) return j;
  }
  throw Error("model has no feature named '" + name + "'");
}

}  // namespace

std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config file '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config file '" + path + "' line " + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (key.empty()) throw Error("config file '" + path + "' line " + std::to_string(number) + ": empty key");
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Piecewise-linear + MLP hybrid models for tabular data"};
  app.name("pilid");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;  // documented on each subcommand; consumed before parsing

  const auto add_config_flag = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value file; flags on the command line override it");
  };

  // synth
  SyntheticSpec synth_spec;
  std::size_t synth_interactions = 0;
  bool synth_interactions_set = false;
  std::string synth_task = "reg";
  std::string synth_out;
  std::string synth_truth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with known feature shapes");
  add_config_flag(synth);
  synth->add_option("--m", synth_spec.m, "Number of features")->capture_default_str();
  synth->add_option("--n", synth_spec.n, "Number of rows")->capture_default_str();
  synth->add_option("--task", synth_task, "reg or clf")->capture_default_str();
  synth->add_option("--seed", synth_spec.seed, "Random seed")->capture_default_str();
  synth->add_option("--noise", synth_spec.noise_std, "Std of the additive Gaussian noise")->capture_default_str();
  synth->add_option("--interactions", synth_interactions, "Number of planted pairwise interactions (default m/5)")
      ->each([&](const std::string&) { synth_interactions_set = true; });
  synth->add_option("--logit-scale", synth_spec.logit_scale, "Classification: logit = scale * standardized utility")
      ->capture_default_str();
  synth->add_option("--out", synth_out, "Output CSV")->required();
  synth->add_option("--truth-out", synth_truth_out, "Optional CSV of the true shapes (feature,x,u)");

  // train
  DataFlags train_data;
  TrainFlags train_flags;
  std::string train_out;
  std::string train_trace;
  auto* train_cmd = app.add_subcommand("train", "Train a piecewise-linear + MLP model");
  add_config_flag(train_cmd);
  add_data_flags(train_cmd, train_data);
  add_train_flags(train_cmd, train_flags);
  train_cmd->add_option("--out", train_out, "Model file to write")->required();
  train_cmd->add_option("--loss-trace", train_trace, "Optional CSV of the per-epoch training loss");

  // train-pilib
  DataFlags pilib_data;
  TrainFlags pilib_flags;
  pilib_flags.mlp = "8-8-1";
  PilibConfig pilib_config;
  std::string pilib_out;
  std::string pilib_trace;
  std::string pilib_diag;
  auto* pilib_cmd = app.add_subcommand("train-pilib", "Train the gated-block variant with bounded interaction order");
  add_config_flag(pilib_cmd);
  add_data_flags(pilib_cmd, pilib_data);
  add_train_flags(pilib_cmd, pilib_flags);
  pilib_cmd->add_option("--blocks", pilib_config.blocks, "Number of blocks")->capture_default_str();
  pilib_cmd->add_option("--max-order", pilib_config.max_order, "Maximum features per block (K)")
      ->capture_default_str();
  pilib_cmd->add_option("--lambda0", pilib_config.lambda0, "Weight of the pairwise-order term")
      ->capture_default_str();
  pilib_cmd->add_option("--gate-init", pilib_config.gate_init, "Initial gate log-alpha")->capture_default_str();
  pilib_cmd->add_option("--phase1-max-epochs", pilib_config.phase1_max_epochs, "Epoch cap of the gate search")
      ->capture_default_str();
  pilib_cmd->add_option("--out", pilib_out, "Model file to write")->required();
  pilib_cmd->add_option("--loss-trace", pilib_trace, "Optional CSV of the per-epoch loss of both phases");
  pilib_cmd->add_option("--diagnostics", pilib_diag, "Optional CSV of block orders and active features");

  // predict
  std::string predict_model;
  std::string predict_data;
  std::string predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "Predict with a saved model");
  add_config_flag(predict_cmd);
  predict_cmd->add_option("--model", predict_model, "Model file")->required();
  predict_cmd->add_option("--data", predict_data, "CSV containing the model's feature columns")->required();
  predict_cmd->add_option("--out", predict_out, "Output CSV (default: standard output)");

  // eval
  std::string eval_model;
  std::string eval_data;
  std::string eval_target = "y";
  auto* eval_cmd = app.add_subcommand("eval", "Score a saved model on a labelled CSV (MSE or AUC)");
  add_config_flag(eval_cmd);
  eval_cmd->add_option("--model", eval_model, "Model file")->required();
  eval_cmd->add_option("--data", eval_data, "Labelled CSV")->required();
  eval_cmd->add_option("--target", eval_target, "Target column name")->capture_default_str();

  // trials
  ExperimentConfig experiment;
  TrainFlags trials_flags;
  std::size_t n_trials = 5;
  std::string trials_report;
  std::string trials_task = "reg";
  std::string trials_model = "pilid";
  std::string trials_data;
  std::size_t trials_interactions = 0;
  bool trials_interactions_set = false;
  auto* trials_cmd = app.add_subcommand("trials", "Repeat train/held-out evaluation over consecutive seeds");
  add_config_flag(trials_cmd);
  add_train_flags(trials_cmd, trials_flags);
  trials_cmd->add_option("--trials", n_trials, "Number of trials")->capture_default_str();
  trials_cmd->add_option("--seed-base", experiment.seed_base, "Trial t uses seed seed-base + t")
      ->capture_default_str();
  trials_cmd->add_option("--model", trials_model, "pilid, mlp or pilib")->capture_default_str();
  trials_cmd->add_option("--task", trials_task, "reg or clf")->capture_default_str();
  trials_cmd->add_option("--m", experiment.synth.m, "Synthetic features")->capture_default_str();
  trials_cmd->add_option("--n", experiment.synth.n, "Synthetic rows")->capture_default_str();
  trials_cmd->add_option("--noise", experiment.synth.noise_std, "Synthetic noise std")->capture_default_str();
  trials_cmd->add_option("--interactions", trials_interactions, "Planted interactions (default m/5)")
      ->each([&](const std::string&) { trials_interactions_set = true; });
  trials_cmd->add_option("--data", trials_data, "Use this CSV instead of synthetic data");
  trials_cmd->add_option("--target", experiment.target_column, "Target column of --data")->capture_default_str();
  trials_cmd->add_option("--split", experiment.train_fraction, "Training fraction")->capture_default_str();
  trials_cmd->add_option("--blocks", experiment.pilib.blocks, "pilib: number of blocks")->capture_default_str();
  trials_cmd->add_option("--max-order", experiment.pilib.max_order, "pilib: maximum order K")->capture_default_str();
  trials_cmd->add_option("--report", trials_report, "Report CSV to write");

  // export-shapes
  std::string shapes_model;
  std::string shapes_dir;
  bool shapes_no_svg = false;
  std::string shapes_anchor = "first";
  std::string shapes_data;
  auto* shapes_cmd = app.add_subcommand("export-shapes", "Write learned feature shapes as CSV and SVG");
  add_config_flag(shapes_cmd);
  shapes_cmd->add_option("--model", shapes_model, "Model file")->required();
  shapes_cmd->add_option("--out-dir", shapes_dir, "Output directory")->required();
  shapes_cmd->add_flag("--no-svg", shapes_no_svg, "Skip the SVG plots");
  shapes_cmd->add_option("--anchor", shapes_anchor, "first (u=0 at the first point) or mean (needs --data)")
      ->capture_default_str();
  shapes_cmd->add_option("--data", shapes_data, "Reference CSV for --anchor mean");

  // export-interactions
  std::string inter_model;
  std::string inter_a;
  std::string inter_b;
  std::size_t inter_resolution = 21;
  std::string inter_out;
  auto* inter_cmd = app.add_subcommand("export-interactions", "Write a pairwise interaction surface of a PiLiB model");
  add_config_flag(inter_cmd);
  inter_cmd->add_option("--model", inter_model, "PiLiB model file")->required();
  inter_cmd->add_option("--a", inter_a, "First feature name")->required();
  inter_cmd->add_option("--b", inter_b, "Second feature name")->required();
  inter_cmd->add_option("--resolution", inter_resolution, "Grid points per axis")->capture_default_str();
  inter_cmd->add_option("--out", inter_out, "Output CSV")->required();

  // Config-file entries go right after the subcommand so later flags win.
  std::vector<std::string> args = raw_args;
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      std::size_t take = 0;
      if (args[i] == "--config" && i + 1 < args.size()) {
        path = args[i + 1];
        take = 2;
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
        take = 1;
      }
      if (take == 0) continue;
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + take));
      const auto tokens = config_tokens(path);
      const auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.rfind("-", 0) != 0; });
      const auto at = sub == args.end() ? args.begin() : sub + 1;
      args.insert(at, tokens.begin(), tokens.end());
      config_path = path;
      break;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (synth->parsed()) {
      synth_spec.task = parse_task(synth_task);
      if (synth_interactions_set) synth_spec.n_interactions = synth_interactions;
      const SyntheticData generated = generate(synth_spec);
      write_csv(synth_out, generated.data);
      if (!synth_truth_out.empty()) {
        std::string text = "feature,x,u\n";
        char buf[96];
        for (const auto& curve : generated.truth) {
          for (std::size_t k = 0; k < curve.xs.size(); ++k) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", curve.xs[k], curve.values[k]);
            text += generated.data.specs()[curve.feature].name + buf;
          }
        }
        write_text(synth_truth_out, text);
      }
      out << "wrote " << synth_spec.n << " rows x " << synth_spec.m << " features to " << synth_out << "\n";
      for (const auto& it : generated.interactions) {
        const auto& specs = generated.data.specs();
        out << "planted interaction " << specs[it.a].name << "*" << specs[it.b].name << " coefficient "
            << fmt(it.coefficient) << "\n";
      }
    } else if (train_cmd->parsed()) {
      const TrainConfig config = train_flags.resolve();
      const auto [data, held_out] = train_data.load_split(config.seed);
      const auto gammas = parse_gammas(train_flags.gamma);
      const auto widths = parse_mlp_widths(train_flags.mlp, data.num_features());
      const TrainResult result = train(data, gammas, widths, config);
      save_model(result.model, train_out);
      if (!train_trace.empty()) write_loss_trace(train_trace, result.loss_trace);
      out << "trained on " << data.size() << " rows; final loss " << fmt(result.loss_trace.back());
      if (held_out) out << "; held-out " << held_out_metric(predict(result.model, held_out->rows()), *held_out);
      out << "; model written to " << train_out << "\n";
    } else if (pilib_cmd->parsed()) {
      const TrainConfig config = pilib_flags.resolve();
      const auto [data, held_out] = pilib_data.load_split(config.seed);
      const auto gammas = parse_gammas(pilib_flags.gamma);
      const auto widths = parse_mlp_widths(pilib_flags.mlp, data.num_features());
      const PilibResult result = train_pilib(data, gammas, widths, pilib_config, config);
      save_model(result.model, pilib_out);
      if (!pilib_trace.empty()) write_loss_trace(pilib_trace, result.phase1_trace, result.phase2_trace);
      if (!pilib_diag.empty()) write_block_diagnostics(pilib_diag, result);
      const double k_max = *std::max_element(result.orders.begin(), result.orders.end());
      out << "gate search: " << result.phase1_epochs << " epochs, max order " << fmt(k_max)
          << (result.capped ? " (cap reached)" : "");
      if (held_out) out << "; held-out " << held_out_metric(predict(result.model, held_out->rows()), *held_out);
      out << "; model written to " << pilib_out << "\n";
    } else if (predict_cmd->parsed()) {
      const AnyModel model = load_model(predict_model);
      std::vector<std::string> names;
      for (const auto& s : model_specs(model)) names.push_back(s.name);
      const Matrix rows = load_feature_columns(predict_data, names);
      const auto pred = predict(model, rows);
      std::string text = "prediction\n";
      char buf[40];
      for (double p : pred) {
        std::snprintf(buf, sizeof buf, "%.17g\n", p);
        text += buf;
      }
      if (predict_out.empty()) {
        out << text;
      } else {
        write_text(predict_out, text);
      }
    } else if (eval_cmd->parsed()) {
      const AnyModel model = load_model(eval_model);
      std::vector<std::string> names;
      for (const auto& s : model_specs(model)) names.push_back(s.name);
      const Matrix rows = load_feature_columns(eval_data, names);
      const Matrix target = load_feature_columns(eval_data, {eval_target});
      const auto pred = predict(model, rows);
      if (model_task(model) == Task::kRegression) {
        out << "mse " << fmt(mse(pred, target.storage())) << "\n";
      } else {
        out << "auc " << fmt(auc(pred, target.storage())) << "\n";
      }
    } else if (trials_cmd->parsed()) {
      experiment.train = trials_flags.resolve();
      experiment.gammas = parse_gammas(trials_flags.gamma);
      experiment.mlp = trials_flags.mlp;
      experiment.model = parse_model_kind(trials_model);
      experiment.synth.task = parse_task(trials_task);
      if (trials_interactions_set) experiment.synth.n_interactions = trials_interactions;
      if (!trials_data.empty()) experiment.data_path = trials_data;
      const TrialReport report = run_trials(experiment, n_trials);
      if (!trials_report.empty()) write_report(trials_report, report);
      for (std::size_t t = 0; t < report.values.size(); ++t) {
        out << "trial " << t << " seed " << report.seeds[t] << " " << report.metric << " " << fmt(report.values[t])
            << "\n";
      }
      out << report.metric << " mean " << fmt(report.mean) << " std "
          << (report.std_defined ? fmt(report.std) : std::string("undefined (1 trial)")) << "\n";
    } else if (shapes_cmd->parsed()) {
      const AnyModel model = load_model(shapes_model);
      ShapeAnchor anchor = ShapeAnchor::kFirstPoint;
      if (shapes_anchor == "mean") {
        anchor = ShapeAnchor::kMeanCentered;
        if (shapes_data.empty()) throw Error("--anchor mean needs --data");
      } else if (shapes_anchor != "first") {
        throw Error("unknown anchor '" + shapes_anchor + "' (expected first or mean)");
      }
      Matrix encoded;
      if (anchor == ShapeAnchor::kMeanCentered) {
        std::vector<std::string> names;
        for (const auto& s : model_specs(model)) names.push_back(s.name);
        encoded = encode_matrix(load_feature_columns(shapes_data, names), model_points(model));
      }
      const ShapeExport written = export_shapes(model, shapes_dir, !shapes_no_svg, anchor, &encoded);
      out << "wrote " << written.csv.string() << " and " << written.svgs.size() << " SVG plots\n";
    } else if (inter_cmd->parsed()) {
      const AnyModel model = load_model(inter_model);
      const auto* pilib = std::get_if<PilibModel>(&model);
      if (pilib == nullptr) throw Error("export-interactions needs a PiLiB model (train it with train-pilib)");
      const auto a = feature_index(pilib->specs, inter_a);
      const auto b = feature_index(pilib->specs, inter_b);
      const InteractionSurface surface = interaction_surface(*pilib, a, b, inter_resolution);
      write_text(inter_out, interaction_csv(surface, pilib->specs));
      out << "wrote " << inter_resolution * inter_resolution << " grid values from " << surface.blocks.size()
          << " block(s) to " << inter_out << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace pilid::cli
