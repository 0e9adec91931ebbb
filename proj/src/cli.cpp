#include "scdtid/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "scdtid/classifier.hpp"
#include "scdtid/experiments.hpp"
#include "scdtid/io.hpp"
#include "scdtid/parallel.hpp"
#include "scdtid/simulator.hpp"
#include "scdtid/transform.hpp"

#ifndef SCDTID_GIT_DESCRIBE
#define SCDTID_GIT_DESCRIBE "unknown"
#endif

namespace scdtid::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Keys whose default is null (meaning "not set") still need a type for
// command-line conversion.
enum class KeyType { Int, Real, Str, Bool, IntList, RealPair };

const std::map<std::string, KeyType>& key_types() {
  static const std::map<std::string, KeyType> types = [] {
    std::map<std::string, KeyType> t;
    for (const char* k : {"seed", "jobs", "sim.n_points", "sim.n_steps", "sim.stride", "dataset.n_train",
                          "dataset.n_test", "features.reference_size", "classifier.k", "curve.repeats",
                          "curve.points"}) {
      t[k] = KeyType::Int;
    }
    for (const char* k : {"sim.dx", "sim.dt", "sim.x0", "sim.sigma", "sim.x_sensor", "params.rho", "params.E",
                          "params.eta", "params.M", "params.F", "params.beta", "features.mass_weight",
                          "classifier.validation_fraction", "classifier.rank_tol"}) {
      t[k] = KeyType::Real;
    }
    for (const char* k : {"experiment", "out", "data", "input", "model", "classifier.method"}) t[k] = KeyType::Str;
    for (const char* k : {"paper_scale", "classifier.enrichment"}) t[k] = KeyType::Bool;
    for (const char* k : {"classifier.k_candidates", "curve.sizes"}) t[k] = KeyType::IntList;
    for (const char* k : {"nuisance.rho", "nuisance.E", "nuisance.eta", "nuisance.M", "nuisance.F", "nuisance.beta"}) {
      t[k] = KeyType::RealPair;
    }
    return t;
  }();
  return types;
}

json parse_value(const std::string& key, const std::string& text) {
  const auto it = key_types().find(key);
  if (it == key_types().end()) throw UsageError("unknown config key: " + key);
  try {
    switch (it->second) {
      case KeyType::Int: return std::stoll(text);
      case KeyType::Real: return std::stod(text);
      case KeyType::Str: return text;
      case KeyType::Bool:
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw UsageError("expected true or false for " + key);
      case KeyType::IntList:
      case KeyType::RealPair: {
        json arr = json::array();
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (it->second == KeyType::IntList) {
            arr.push_back(std::stoll(item));
          } else {
            arr.push_back(std::stod(item));
          }
        }
        if (it->second == KeyType::RealPair && arr.size() != 2) throw UsageError(key + " needs two values lo,hi");
        return arr;
      }
    }
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse value '" + text + "' for " + key);
  }
  return nullptr;
}

sim::ParamRange pair_of(const json& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  return {v.at(0).get<double>(), v.at(1).get<double>()};
}

exp::DatasetConfig dataset_config(const json& cfg) {
  exp::DatasetConfig c;
  c.id = cfg.at("experiment").get<std::string>();
  c.specs = exp::specs_for_kind(c.id);
  const bool paper = cfg.at("paper_scale").get<bool>();
  c.n_train = paper ? 2000 : cfg.at("dataset.n_train").get<int>();
  c.n_test = paper ? 200 : cfg.at("dataset.n_test").get<int>();
  c.base_seed = cfg.at("seed").get<std::uint64_t>();
  c.grid.n_points = cfg.at("sim.n_points").get<int>();
  c.grid.dx = cfg.at("sim.dx").get<double>();
  c.grid.dt = cfg.at("sim.dt").get<double>();
  c.grid.n_steps = cfg.at("sim.n_steps").get<int>();
  c.grid.stride = cfg.at("sim.stride").get<int>();
  c.ic.x0 = cfg.at("sim.x0").get<double>();
  c.ic.sigma = cfg.at("sim.sigma").get<double>();
  c.x_sensor = cfg.at("sim.x_sensor").get<double>();
  c.nuisance.rho = pair_of(cfg, "nuisance.rho");
  c.nuisance.E = pair_of(cfg, "nuisance.E");
  c.nuisance.eta = pair_of(cfg, "nuisance.eta");
  c.nuisance.M = pair_of(cfg, "nuisance.M");
  c.nuisance.F = pair_of(cfg, "nuisance.F");
  c.nuisance.beta = pair_of(cfg, "nuisance.beta");
  return c;
}

exp::FeatureConfig feature_config(const json& cfg) {
  exp::FeatureConfig f;
  const auto m = cfg.at("features.reference_size").get<long long>();
  if (m < 0) throw UsageError("features.reference_size must be nonnegative");
  f.reference_size = static_cast<std::size_t>(m);
  f.mass_weight = cfg.at("features.mass_weight").get<double>();
  return f;
}

exp::ClassifierConfig classifier_config(const json& cfg) {
  exp::ClassifierConfig c;
  c.method = cfg.at("classifier.method").get<std::string>();
  if (c.method != "nls" && c.method != "ns") throw UsageError("classifier.method must be nls or ns");
  c.k = cfg.at("classifier.k").get<int>();
  c.k_candidates = cfg.at("classifier.k_candidates").get<std::vector<int>>();
  c.validation_fraction = cfg.at("classifier.validation_fraction").get<double>();
  c.rank_tol = cfg.at("classifier.rank_tol").get<double>();
  c.enrichment = cfg.at("classifier.enrichment").get<bool>();
  c.seed = cfg.at("seed").get<std::uint64_t>();
  return c;
}

int jobs_of(const json& cfg) { return std::max(1, cfg.at("jobs").get<int>()); }

fs::path require_path(const json& cfg, const std::string& key) {
  const auto p = cfg.at(key).get<std::string>();
  if (p.empty()) throw UsageError(key + " is required for this command");
  if (!fs::exists(p) && !fs::exists(io::header_path(p))) throw UsageError(key + " does not exist: " + p);
  return p;
}

fs::path out_dir(const json& cfg) {
  fs::path dir = cfg.at("out").get<std::string>();
  fs::create_directories(dir);
  return dir;
}

void write_summary(const fs::path& dir, const std::string& command, const json& cfg, const json& results) {
  json s;
  s["command"] = command;
  s["config"] = cfg;
  s["config_hash"] = config_hash(cfg);
  s["provenance"] = provenance();
  s["results"] = results;
  io::write_json_file(dir / "summary.json", s);
}

// --- commands ---

json cmd_simulate(const json& cfg, std::ostream& out) {
  sim::ParamSpec spec;
  spec.rho = pair_of(cfg, "nuisance.rho");
  spec.E = pair_of(cfg, "nuisance.E");
  spec.eta = pair_of(cfg, "nuisance.eta");
  spec.M = pair_of(cfg, "nuisance.M");
  spec.F = pair_of(cfg, "nuisance.F");
  spec.beta = pair_of(cfg, "nuisance.beta");
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  sim::MaterialParams p = sim::sample_params(seed, spec);
  auto set = [&](const char* key, double& field) {
    if (!cfg.at(key).is_null()) field = cfg.at(key).get<double>();
  };
  set("params.rho", p.rho);
  set("params.E", p.E);
  set("params.eta", p.eta);
  set("params.M", p.M);
  set("params.F", p.F);
  set("params.beta", p.beta);

  const exp::DatasetConfig dc = dataset_config(cfg);
  const auto trace = sim::simulate(p, dc.grid, dc.ic, dc.x_sensor);
  const auto s = trace.signal.samples();
  double peak = 0.0;
  for (double v : s) peak = std::max(peak, std::abs(v));

  const fs::path dir = out_dir(cfg);
  io::write_signal(dir / "trace", trace.signal, {{"params", exp::to_json(p)}, {"seed", seed}});
  const json results = {{"params", exp::to_json(p)},
                        {"arrival_time", sim::arrival_time(trace.signal)},
                        {"max_abs_velocity", peak},
                        {"trace", (dir / "trace").string()}};
  out << results.dump() << '\n';
  return results;
}

json cmd_dataset(const json& cfg, std::ostream& out) {
  const auto dc = dataset_config(cfg);
  const fs::path dir = out_dir(cfg);
  const auto m = exp::generate_dataset(dc, dir, jobs_of(cfg));
  const json results = {{"dir", dir.string()},
                        {"samples", m.samples.size()},
                        {"manifest_hash", io::hex64(io::fnv1a64(exp::to_json(m).dump()))}};
  out << results.dump() << '\n';
  return results;
}

json cmd_transform(const json& cfg, std::ostream& out) {
  const fs::path input = require_path(cfg, "input");
  const Signal s = io::read_signal(input);
  const auto f = feature_config(cfg);
  const auto ref = ReferenceDomain::midpoints(f.reference_size > 0 ? f.reference_size : s.size());
  const auto r = transform::scdt_forward(s, ref);
  const fs::path dir = out_dir(cfg);
  io::write_scdt(dir / "scdt", r, {{"source", input.string()}});
  const json results = {{"scdt", (dir / "scdt").string()},
                        {"m", ref.size()},
                        {"pos_mass", r.pos_mass},
                        {"neg_mass", r.neg_mass}};
  out << results.dump() << '\n';
  return results;
}

json cmd_train(const json& cfg, std::ostream& out) {
  const fs::path data = require_path(cfg, "data");
  const auto m = exp::load_manifest(data);
  const auto features = exp::compute_features(data, m, feature_config(cfg), jobs_of(cfg));
  const auto cc = classifier_config(cfg);

  classify::TrainingSet ts;
  ts.classes.resize(m.config.specs.size());
  for (std::size_t i : m.indices(exp::Split::Train)) {
    ts.classes[static_cast<std::size_t>(m.samples[i].cls)].push_back(features[i]);
  }
  const fs::path dir = out_dir(cfg);
  json results = {{"model", (dir / "model").string()}, {"method", cc.method}};
  if (cc.method == "nls") {
    classify::NlsOptions opts;
    opts.rank_tol = cc.rank_tol;
    if (cc.enrichment) opts.enrichment.push_back(classify::translation_direction((ts.dim() - 2) / 2));
    int k = cc.k > 0 ? std::min<int>(cc.k, static_cast<int>(ts.min_class_size())) : classify::default_k(ts);
    if (!cc.k_candidates.empty()) k = classify::select_k(ts, cc.k_candidates, cc.validation_fraction, cc.seed, opts);
    classify::save_nls(dir / "model", classify::train_nls(ts, k, opts));
    results["k"] = k;
  } else {
    const auto model = classify::train_ns(ts, cc.rank_tol);
    classify::save_ns(dir / "model", model);
    std::vector<std::size_t> ranks;
    for (const auto& b : model.bases) ranks.push_back(b.size());
    results["ranks"] = ranks;
  }
  out << results.dump() << '\n';
  return results;
}

json cmd_eval(const json& cfg, std::ostream& out) {
  const fs::path data = require_path(cfg, "data");
  const auto m = exp::load_manifest(data);
  const auto features = exp::compute_features(data, m, feature_config(cfg), jobs_of(cfg));
  const auto cc = classifier_config(cfg);
  const auto train = m.indices(exp::Split::Train);
  const auto test = m.indices(exp::Split::Test);

  exp::Metrics metrics;
  const auto model_path = cfg.at("model").get<std::string>();
  if (model_path.empty()) {
    metrics = exp::evaluate(m, features, train, test, cc, jobs_of(cfg));
  } else {
    const auto kind = io::read_json_file(io::header_path(model_path)).value("kind", "");
    std::vector<int> predicted(test.size());
    int k = 0;
    if (kind == "nls") {
      const auto model = classify::load_nls(model_path);
      k = model.k;
      parallel_for(test.size(), jobs_of(cfg),
                   [&](std::size_t i) { predicted[i] = classify::predict_nls(model, features[test[i]]).label; });
    } else if (kind == "ns") {
      const auto model = classify::load_ns(model_path);
      parallel_for(test.size(), jobs_of(cfg),
                   [&](std::size_t i) { predicted[i] = classify::predict_ns(model, features[test[i]]).label; });
    } else {
      throw UsageError("model has unknown kind: " + kind);
    }
    metrics = exp::score_predictions(m, test, predicted);
    metrics.method = kind;
    metrics.k = k;
    metrics.n_train = static_cast<int>(train.size() / m.config.specs.size());
  }

  const fs::path dir = out_dir(cfg);
  exp::write_text_file(dir / "metrics.csv", exp::metrics_csv({metrics}));
  io::write_json_file(dir / "metrics.json", exp::to_json(metrics));
  json results = exp::to_json(metrics);
  out << json{{"accuracy", metrics.accuracy}, {"mse", results["mse"]}}.dump() << '\n';
  return results;
}

json cmd_curve(const json& cfg, std::ostream& out) {
  const fs::path data = require_path(cfg, "data");
  const auto m = exp::load_manifest(data);
  auto sizes = cfg.at("curve.sizes").get<std::vector<int>>();
  if (sizes.empty()) {
    const int points = cfg.at("curve.points").get<int>();
    if (points < 1) throw UsageError("curve.points must be positive");
    const int n = m.config.n_train;
    for (int i = 1; i <= points; ++i) {
      const int s = std::max(1, static_cast<int>(std::lround(static_cast<double>(n) * i / points)));
      if (sizes.empty() || sizes.back() != s) sizes.push_back(s);
    }
  }
  const auto metrics = exp::learning_curve(data, sizes, cfg.at("curve.repeats").get<int>(), feature_config(cfg),
                                           classifier_config(cfg), jobs_of(cfg));
  const fs::path dir = out_dir(cfg);
  exp::write_text_file(dir / "curve.csv", exp::curve_csv(metrics));
  const json results = exp::to_json(metrics);
  out << json{{"points", metrics.curve.size()}, {"curve", (dir / "curve.csv").string()}}.dump() << '\n';
  return results;
}

void add_common(CLI::App* sub, std::map<std::string, std::optional<std::string>>& raw, bool& paper_scale,
                std::optional<std::string>& config_path) {
  sub->add_option("--config", config_path, "JSON config file (flat dotted keys, or a run summary)");
  sub->add_option("--seed", raw["seed"], "Base seed");
  sub->add_option("--jobs", raw["jobs"], "Worker threads");
  sub->add_option("--out", raw["out"], "Output directory");
  sub->add_flag("--paper-scale", paper_scale, "Use 2000 train / 200 test samples per class");
}

}  // namespace

json default_config() {
  return {
      {"experiment", "detect-beta"},
      {"seed", 1},
      {"jobs", 1},
      {"out", "out"},
      {"paper_scale", false},
      {"data", ""},
      {"input", ""},
      {"model", ""},
      {"sim.n_points", 600},
      {"sim.dx", 1.0},
      {"sim.dt", 0.125},
      {"sim.n_steps", 3600},
      {"sim.stride", 1},
      {"sim.x0", 50.0},
      {"sim.sigma", 7.0},
      {"sim.x_sensor", 300.0},
      {"params.rho", nullptr},
      {"params.E", nullptr},
      {"params.eta", nullptr},
      {"params.M", nullptr},
      {"params.F", nullptr},
      {"params.beta", nullptr},
      {"nuisance.rho", {1.0, 1.0}},
      {"nuisance.E", {0.95, 1.05}},
      {"nuisance.eta", {0.1, 0.2}},
      {"nuisance.M", {0.2, 0.3}},
      {"nuisance.F", {0.01, 0.01}},
      {"nuisance.beta", {0.0, 0.0}},
      {"dataset.n_train", 200},
      {"dataset.n_test", 50},
      {"features.reference_size", 0},
      {"features.mass_weight", 1.0},
      {"classifier.method", "nls"},
      {"classifier.k", 0},
      {"classifier.k_candidates", json::array()},
      {"classifier.validation_fraction", 0.2},
      {"classifier.rank_tol", classify::kDefaultRankTol},
      {"classifier.enrichment", false},
      {"curve.sizes", json::array()},
      {"curve.points", 8},
      {"curve.repeats", 10},
  };
}

json merge_config(json base, const json& overrides) {
  const json* src = &overrides;
  if (overrides.contains("config") && overrides.contains("command")) src = &overrides.at("config");
  if (!src->is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : src->items()) {
    if (!base.contains(key)) throw UsageError("unknown config key: " + key);
    base[key] = value;
  }
  return base;
}

std::string config_hash(const json& config) {
  json c = config;
  c.erase("jobs");
  c.erase("out");
  return io::hex64(io::fnv1a64(c.dump()));
}

std::string provenance() { return SCDTID_GIT_DESCRIBE; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transport-based identification of wave-equation parameters"};
  app.require_subcommand(1);

  std::map<std::string, std::optional<std::string>> raw;
  bool paper_scale = false;
  bool enrichment = false;
  std::optional<std::string> config_path;

  auto* simulate = app.add_subcommand("simulate", "Run one simulation and write the sensor trace");
  add_common(simulate, raw, paper_scale, config_path);
  for (const char* p : {"rho", "E", "eta", "M", "F", "beta"}) {
    simulate->add_option(std::string("--") + p, raw[std::string("params.") + p], std::string("Material ") + p);
  }
  simulate->add_option("--x-sensor", raw["sim.x_sensor"], "Sensor position");
  simulate->add_option("--n-steps", raw["sim.n_steps"], "Time steps");
  simulate->add_option("--dt", raw["sim.dt"], "Time step");

  auto* dataset = app.add_subcommand("dataset", "Generate a labelled dataset of traces");
  add_common(dataset, raw, paper_scale, config_path);
  dataset->add_option("--experiment", raw["experiment"],
                      "detect-beta | regress-beta-3 | regress-beta-10 | detect-M | regress-M-3");
  dataset->add_option("--n-train", raw["dataset.n_train"], "Training samples per class");
  dataset->add_option("--n-test", raw["dataset.n_test"], "Test samples per class");

  auto* transform_cmd = app.add_subcommand("transform", "Write the signed transform of a trace");
  add_common(transform_cmd, raw, paper_scale, config_path);
  transform_cmd->add_option("--input", raw["input"], "Trace base path (without .f64/.json)");
  transform_cmd->add_option("--reference-size", raw["features.reference_size"], "Reference grid size");

  auto* train = app.add_subcommand("train", "Train a classifier on a dataset's training split");
  auto* eval = app.add_subcommand("eval", "Score a classifier on a dataset's test split");
  auto* curve = app.add_subcommand("curve", "Learning curve over training-set sizes");
  for (auto* sub : {train, eval, curve}) {
    add_common(sub, raw, paper_scale, config_path);
    sub->add_option("--data", raw["data"], "Dataset directory");
    sub->add_option("--method", raw["classifier.method"], "nls | ns");
    sub->add_option("--k", raw["classifier.k"], "Neighbours per class (0 = default)");
    sub->add_option("--k-candidates", raw["classifier.k_candidates"], "Comma-separated k values to select from");
    sub->add_option("--reference-size", raw["features.reference_size"], "Reference grid size (0 = trace length)");
    sub->add_option("--mass-weight", raw["features.mass_weight"], "Weight of the mass entries");
    sub->add_flag("--enrichment", enrichment, "Add the translation direction to local subspaces");
  }
  eval->add_option("--model", raw["model"], "Saved model base path (trains from --data when omitted)");
  curve->add_option("--sizes", raw["curve.sizes"], "Comma-separated training sizes per class");
  curve->add_option("--points", raw["curve.points"], "Number of evenly spaced sizes when --sizes is absent");
  curve->add_option("--repeats", raw["curve.repeats"], "Repeats per size");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    json cfg = default_config();
    if (config_path) cfg = merge_config(cfg, io::read_json_file(*config_path));
    json flags = json::object();
    for (const auto& [key, value] : raw) {
      if (value) flags[key] = parse_value(key, *value);
    }
    if (paper_scale) flags["paper_scale"] = true;
    if (enrichment) flags["classifier.enrichment"] = true;
    cfg = merge_config(cfg, flags);

    json results;
    if (command == "simulate") results = cmd_simulate(cfg, out);
    if (command == "dataset") results = cmd_dataset(cfg, out);
    if (command == "transform") results = cmd_transform(cfg, out);
    if (command == "train") results = cmd_train(cfg, out);
    if (command == "eval") results = cmd_eval(cfg, out);
    if (command == "curve") results = cmd_curve(cfg, out);
    write_summary(cfg.at("out").get<std::string>(), command, cfg, results);
    return 0;
  } catch (const sim::SimError& e) {
    err << json{{"error", "simulator"}, {"code", sim::to_string(e.code())}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const exp::DatasetError& e) {
    err << json{{"error", "simulator"},
                {"code", sim::to_string(e.code())},
                {"class", e.class_index()},
                {"sample", e.sample_index()},
                {"seed", e.seed()},
                {"message", e.what()}}
               .dump()
        << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", "runtime"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace scdtid::cli
