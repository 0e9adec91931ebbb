#include "scdtid/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "scdtid/io.hpp"
#include "scdtid/parallel.hpp"
#include "scdtid/transform.hpp"

namespace scdtid::exp {

namespace {

constexpr int kManifestVersion = 1;
constexpr std::size_t kGenerateBatch = 256;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json range_json(const sim::ParamRange& r) { return json::array({r.lo, r.hi}); }

sim::ParamRange range_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

sim::ParamRange& param_slot(sim::ParamSpec& spec, const std::string& name) {
  if (name == "beta") return spec.beta;
  if (name == "M") return spec.M;
  throw ExperimentError("class parameter must be beta or M, got " + name);
}

double param_value(const sim::MaterialParams& p, const std::string& name) {
  if (name == "beta") return p.beta;
  if (name == "M") return p.M;
  throw ExperimentError("class parameter must be beta or M, got " + name);
}

bool all_uniform(const std::vector<ClassSpec>& specs) {
  return std::all_of(specs.begin(), specs.end(),
                     [](const ClassSpec& s) { return s.dist.kind == Distribution::Kind::Uniform; });
}

std::vector<ClassSpec> uniform_specs(const std::string& param, const std::vector<std::pair<double, double>>& ranges) {
  std::vector<ClassSpec> out;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    out.push_back({static_cast<int>(i), param, Distribution::uniform(ranges[i].first, ranges[i].second)});
  }
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

DatasetError::DatasetError(const sim::SimError& e, int cls, int index, std::uint64_t seed)
    : std::runtime_error(std::string(e.what()) + " (class " + std::to_string(cls) + ", sample " +
                         std::to_string(index) + ", seed " + std::to_string(seed) + ")"),
      code_(e.code()),
      cls_(cls),
      index_(index),
      seed_(seed) {}

void validate_specs(const std::vector<ClassSpec>& specs) {
  if (specs.size() < 2) throw ExperimentError("an experiment needs at least two classes");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.index != static_cast<int>(i)) throw ExperimentError("class indices must be 0..n-1 in order");
    if (s.param != specs.front().param) throw ExperimentError("all classes must vary the same parameter");
    if (s.param != "beta" && s.param != "M") throw ExperimentError("class parameter must be beta or M");
    if (!std::isfinite(s.dist.lo) || !std::isfinite(s.dist.hi) || s.dist.lo < 0.0) {
      throw ExperimentError("class ranges must be finite and nonnegative");
    }
    if (s.dist.kind == Distribution::Kind::Uniform && !(s.dist.lo < s.dist.hi)) {
      throw ExperimentError("uniform class range needs lo < hi");
    }
    if (s.dist.kind == Distribution::Kind::Fixed && s.dist.lo != s.dist.hi) {
      throw ExperimentError("fixed class needs lo == hi");
    }
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t j = i + 1; j < specs.size(); ++j) {
      const auto& a = specs[i].dist;
      const auto& b = specs[j].dist;
      if (a.lo <= b.hi && b.lo <= a.hi) throw ExperimentError("class ranges overlap");
    }
  }
}

std::vector<ClassSpec> detection_specs(const std::string& param) {
  return {{0, param, Distribution::fixed(0.0)}, {1, param, Distribution::uniform(0.01, 0.6)}};
}

std::vector<ClassSpec> three_class_specs(const std::string& param) {
  return uniform_specs(param, {{0.01, 0.2}, {0.21, 0.4}, {0.41, 0.6}});
}

std::vector<ClassSpec> ten_class_specs(const std::string& param) {
  std::vector<std::pair<double, double>> ranges;
  for (int i = 0; i < 10; ++i) {
    const double lo = std::round((0.01 + 0.06 * i) * 100.0) / 100.0;
    ranges.emplace_back(lo, std::round((lo + 0.05) * 100.0) / 100.0);
  }
  return uniform_specs(param, ranges);
}

std::vector<ClassSpec> specs_for_kind(const std::string& kind) {
  if (kind == "detect-beta") return detection_specs("beta");
  if (kind == "regress-beta-3") return three_class_specs("beta");
  if (kind == "regress-beta-10") return ten_class_specs("beta");
  if (kind == "detect-M") return detection_specs("M");
  if (kind == "regress-M-3") return three_class_specs("M");
  throw ExperimentError("unknown experiment kind: " + kind);
}

bool is_regression_kind(const std::string& kind) { return kind.rfind("regress-", 0) == 0; }

std::uint64_t derive_seed(std::uint64_t base_seed, int cls, int index) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(cls)));
  return splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(index)) << 20));
}

// --- JSON ---

json to_json(const sim::MaterialParams& p) {
  return {{"rho", p.rho}, {"E", p.E}, {"eta", p.eta}, {"M", p.M}, {"F", p.F}, {"beta", p.beta}};
}

sim::MaterialParams material_from_json(const json& j) {
  sim::MaterialParams p;
  p.rho = j.at("rho").get<double>();
  p.E = j.at("E").get<double>();
  p.eta = j.at("eta").get<double>();
  p.M = j.at("M").get<double>();
  p.F = j.at("F").get<double>();
  p.beta = j.at("beta").get<double>();
  return p;
}

json to_json(const DatasetConfig& c) {
  json specs = json::array();
  for (const auto& s : c.specs) {
    specs.push_back({{"index", s.index},
                     {"param", s.param},
                     {"kind", s.dist.kind == Distribution::Kind::Fixed ? "fixed" : "uniform"},
                     {"lo", s.dist.lo},
                     {"hi", s.dist.hi}});
  }
  const auto& n = c.nuisance;
  return {{"id", c.id},
          {"specs", specs},
          {"n_train", c.n_train},
          {"n_test", c.n_test},
          {"base_seed", c.base_seed},
          {"grid",
           {{"n_points", c.grid.n_points},
            {"dx", c.grid.dx},
            {"dt", c.grid.dt},
            {"n_steps", c.grid.n_steps},
            {"stride", c.grid.stride}}},
          {"ic", {{"x0", c.ic.x0}, {"sigma", c.ic.sigma}}},
          {"x_sensor", c.x_sensor},
          {"nuisance",
           {{"rho", range_json(n.rho)},
            {"E", range_json(n.E)},
            {"eta", range_json(n.eta)},
            {"M", range_json(n.M)},
            {"F", range_json(n.F)},
            {"beta", range_json(n.beta)}}}};
}

DatasetConfig dataset_config_from_json(const json& j) {
  DatasetConfig c;
  c.id = j.at("id").get<std::string>();
  c.specs.clear();
  for (const auto& s : j.at("specs")) {
    const auto kind = s.at("kind").get<std::string>();
    Distribution d;
    if (kind == "fixed") {
      d = Distribution::fixed(s.at("lo").get<double>());
    } else if (kind == "uniform") {
      d = Distribution::uniform(s.at("lo").get<double>(), s.at("hi").get<double>());
    } else {
      throw ExperimentError("unknown distribution kind: " + kind);
    }
    c.specs.push_back({s.at("index").get<int>(), s.at("param").get<std::string>(), d});
  }
  c.n_train = j.at("n_train").get<int>();
  c.n_test = j.at("n_test").get<int>();
  c.base_seed = j.at("base_seed").get<std::uint64_t>();
  const auto& g = j.at("grid");
  c.grid.n_points = g.at("n_points").get<int>();
  c.grid.dx = g.at("dx").get<double>();
  c.grid.dt = g.at("dt").get<double>();
  c.grid.n_steps = g.at("n_steps").get<int>();
  c.grid.stride = g.at("stride").get<int>();
  c.ic.x0 = j.at("ic").at("x0").get<double>();
  c.ic.sigma = j.at("ic").at("sigma").get<double>();
  c.x_sensor = j.at("x_sensor").get<double>();
  const auto& n = j.at("nuisance");
  c.nuisance.rho = range_from_json(n.at("rho"));
  c.nuisance.E = range_from_json(n.at("E"));
  c.nuisance.eta = range_from_json(n.at("eta"));
  c.nuisance.M = range_from_json(n.at("M"));
  c.nuisance.F = range_from_json(n.at("F"));
  c.nuisance.beta = range_from_json(n.at("beta"));
  return c;
}

double SampleRecord::target() const { return param_value(params, param); }

std::vector<std::size_t> DatasetManifest::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == s) out.push_back(i);
  }
  return out;
}

json to_json(const DatasetManifest& m) {
  json samples = json::array();
  for (const auto& s : m.samples) {
    samples.push_back({{"class", s.cls},
                       {"index", s.index},
                       {"split", s.split == Split::Train ? "train" : "test"},
                       {"seed", s.seed},
                       {"params", to_json(s.params)},
                       {"offset", s.offset},
                       {"length", s.length}});
  }
  return {{"version", kManifestVersion},
          {"config", to_json(m.config)},
          {"trace_t0", m.trace_t0},
          {"trace_dt", m.trace_dt},
          {"traces", "traces.f64"},
          {"samples", samples}};
}

DatasetManifest manifest_from_json(const json& j) {
  if (j.value("version", 0) != kManifestVersion) throw ExperimentError("unsupported manifest version");
  DatasetManifest m;
  m.config = dataset_config_from_json(j.at("config"));
  m.trace_t0 = j.at("trace_t0").get<double>();
  m.trace_dt = j.at("trace_dt").get<double>();
  const std::string param = m.config.specs.front().param;
  for (const auto& s : j.at("samples")) {
    SampleRecord r;
    r.cls = s.at("class").get<int>();
    r.index = s.at("index").get<int>();
    r.split = s.at("split").get<std::string>() == "train" ? Split::Train : Split::Test;
    r.seed = s.at("seed").get<std::uint64_t>();
    r.params = material_from_json(s.at("params"));
    r.offset = s.at("offset").get<std::uint64_t>();
    r.length = s.at("length").get<std::size_t>();
    r.param = param;
    m.samples.push_back(std::move(r));
  }
  return m;
}

// --- datasets ---

DatasetManifest generate_dataset(const DatasetConfig& config, const fs::path& dir, int jobs) {
  validate_specs(config.specs);
  if (config.n_train < 1 || config.n_test < 1) throw ExperimentError("n_train and n_test must be positive");
  config.grid.validate();
  fs::create_directories(dir);

  DatasetManifest m;
  m.config = config;
  m.trace_t0 = 0.0;
  m.trace_dt = config.grid.dt * config.grid.stride;
  const int per_class = config.n_train + config.n_test;
  for (const auto& spec : config.specs) {
    sim::ParamSpec ps = config.nuisance;
    param_slot(ps, spec.param) = spec.dist.range();
    for (int i = 0; i < per_class; ++i) {
      SampleRecord r;
      r.cls = spec.index;
      r.index = i;
      r.split = i < config.n_train ? Split::Train : Split::Test;
      r.seed = derive_seed(config.base_seed, spec.index, i);
      r.params = sim::sample_params(r.seed, ps);
      r.param = spec.param;
      m.samples.push_back(r);
    }
  }

  const fs::path traces_path = dir / "traces.f64";
  std::ofstream os(traces_path, std::ios::binary | std::ios::trunc);
  if (!os) throw ExperimentError("cannot write " + traces_path.string());

  std::uint64_t offset = 0;
  for (std::size_t start = 0; start < m.samples.size(); start += kGenerateBatch) {
    const std::size_t count = std::min(kGenerateBatch, m.samples.size() - start);
    std::vector<std::vector<double>> traces(count);
    parallel_for(count, jobs, [&](std::size_t i) {
      const SampleRecord& r = m.samples[start + i];
      try {
        const auto tr = sim::simulate(r.params, config.grid, config.ic, config.x_sensor);
        const auto s = tr.signal.samples();
        traces[i].assign(s.begin(), s.end());
      } catch (const sim::SimError& e) {
        throw DatasetError(e, r.cls, r.index, r.seed);
      }
    });
    for (std::size_t i = 0; i < count; ++i) {
      SampleRecord& r = m.samples[start + i];
      r.offset = offset;
      r.length = traces[i].size();
      offset += r.length;
      io::append_f64(os, traces[i]);
    }
  }
  os.close();
  io::write_json_file(dir / "manifest.json", to_json(m));
  return m;
}

DatasetManifest load_manifest(const fs::path& dir) {
  auto m = manifest_from_json(io::read_json_file(dir / "manifest.json"));
  std::uint64_t expected = 0;
  for (const auto& s : m.samples) expected = std::max<std::uint64_t>(expected, s.offset + s.length);
  const fs::path traces = dir / "traces.f64";
  if (!fs::exists(traces) || fs::file_size(traces) != expected * 8) {
    throw ExperimentError(dir.string() + ": traces.f64 does not match the manifest");
  }
  return m;
}

Signal load_trace(const fs::path& dir, const DatasetManifest& m, std::size_t sample) {
  const auto& r = m.samples.at(sample);
  return Signal(io::read_f64_range(dir / "traces.f64", r.offset, r.length), m.trace_t0, m.trace_dt);
}

// --- features ---

json to_json(const FeatureConfig& f) {
  return {{"reference_size", f.reference_size}, {"mass_weight", f.mass_weight}};
}

FeatureConfig feature_config_from_json(const json& j) {
  FeatureConfig f;
  f.reference_size = j.value("reference_size", f.reference_size);
  f.mass_weight = j.value("mass_weight", f.mass_weight);
  return f;
}

std::vector<classify::Vector> compute_features(const fs::path& dir, const DatasetManifest& m,
                                               const FeatureConfig& f, int jobs) {
  if (m.samples.empty()) return {};
  const std::size_t ref_size = f.reference_size > 0 ? f.reference_size : m.samples.front().length;
  const std::size_t dim = 2 * ref_size + 2;
  const std::string key = to_json(m).dump() + to_json(f).dump();
  const fs::path cache = dir / ("features-" + io::hex64(io::fnv1a64(key)) + ".f64");

  std::vector<classify::Vector> out(m.samples.size());
  if (fs::exists(cache) && fs::file_size(cache) == m.samples.size() * dim * 8) {
    const auto data = io::read_f64_file(cache);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].assign(data.begin() + static_cast<std::ptrdiff_t>(i * dim),
                    data.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    }
    return out;
  }

  const auto all = io::read_f64_file(dir / "traces.f64");
  const ReferenceDomain ref = ReferenceDomain::midpoints(ref_size);
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const auto& r = m.samples[i];
    Signal s(std::vector<double>(all.begin() + static_cast<std::ptrdiff_t>(r.offset),
                                 all.begin() + static_cast<std::ptrdiff_t>(r.offset + r.length)),
             m.trace_t0, m.trace_dt);
    out[i] = transform::scdt_flatten(transform::scdt_forward(s, ref), f.mass_weight);
  });

  std::ofstream os(cache, std::ios::binary | std::ios::trunc);
  for (const auto& v : out) io::append_f64(os, v);
  return out;
}

// --- evaluation ---

json to_json(const ClassifierConfig& c) {
  return {{"method", c.method},
          {"k", c.k},
          {"k_candidates", c.k_candidates},
          {"validation_fraction", c.validation_fraction},
          {"rank_tol", c.rank_tol},
          {"enrichment", c.enrichment},
          {"seed", c.seed}};
}

ClassifierConfig classifier_config_from_json(const json& j) {
  ClassifierConfig c;
  c.method = j.value("method", c.method);
  c.k = j.value("k", c.k);
  c.k_candidates = j.value("k_candidates", c.k_candidates);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.rank_tol = j.value("rank_tol", c.rank_tol);
  c.enrichment = j.value("enrichment", c.enrichment);
  c.seed = j.value("seed", c.seed);
  return c;
}

json to_json(const Metrics& m) {
  json curve = json::array();
  for (const auto& p : m.curve) {
    curve.push_back({{"size", p.size},
                     {"accuracy_mean", p.accuracy_mean},
                     {"accuracy_std", p.accuracy_std},
                     {"mse_mean", p.mse_mean},
                     {"mse_std", p.mse_std}});
  }
  json j = {{"experiment", m.experiment},
            {"method", m.method},
            {"n_classes", m.n_classes},
            {"n_train", m.n_train},
            {"n_test", m.n_test},
            {"k", m.k},
            {"accuracy", m.accuracy},
            {"confusion", m.confusion},
            {"curve", curve}};
  j["mse"] = m.mse ? json(*m.mse) : json(nullptr);
  j["mse_lower_bound"] = m.mse_lower_bound ? json(*m.mse_lower_bound) : json(nullptr);
  return j;
}

double mse_lower_bound(const std::vector<ClassSpec>& specs, const std::vector<int>& test_counts) {
  double total = 0.0;
  for (int n : test_counts) total += n;
  if (total <= 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const double w = specs[c].dist.width();
    acc += (test_counts.at(c) / total) * w * w / 12.0;
  }
  return acc;
}

double coarse_mse(const std::vector<ClassSpec>& specs, const std::vector<double>& truth,
                  const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw ExperimentError("coarse_mse: size mismatch");
  if (truth.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth[i] - specs.at(static_cast<std::size_t>(predicted[i])).dist.center();
    acc += e * e;
  }
  return acc / static_cast<double>(truth.size());
}

Metrics score_predictions(const DatasetManifest& m, const std::vector<std::size_t>& test,
                          const std::vector<int>& predicted) {
  const auto& specs = m.config.specs;
  const auto n_classes = specs.size();
  if (predicted.size() != test.size()) throw ExperimentError("score_predictions: size mismatch");
  Metrics out;
  out.experiment = m.config.id;
  out.n_classes = static_cast<int>(n_classes);
  out.n_test = static_cast<int>(test.size());
  out.confusion.assign(n_classes, std::vector<int>(n_classes, 0));
  std::vector<int> counts(n_classes, 0);
  std::vector<double> truth(test.size());
  int correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& r = m.samples[test[i]];
    if (predicted[i] < 0 || static_cast<std::size_t>(predicted[i]) >= n_classes) {
      throw ExperimentError("score_predictions: label out of range");
    }
    ++out.confusion[static_cast<std::size_t>(r.cls)][static_cast<std::size_t>(predicted[i])];
    ++counts[static_cast<std::size_t>(r.cls)];
    correct += predicted[i] == r.cls;
    truth[i] = r.target();
  }
  out.accuracy = test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size());
  if (all_uniform(specs)) {
    out.mse = coarse_mse(specs, truth, predicted);
    out.mse_lower_bound = mse_lower_bound(specs, counts);
  }
  return out;
}

Metrics evaluate(const DatasetManifest& m, const std::vector<classify::Vector>& features,
                 const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
                 const ClassifierConfig& cc, int jobs) {
  const auto& specs = m.config.specs;
  const auto n_classes = specs.size();
  classify::TrainingSet ts;
  ts.classes.resize(n_classes);
  for (std::size_t i : train) ts.classes.at(static_cast<std::size_t>(m.samples[i].cls)).push_back(features[i]);
  ts.validate();

  Metrics out;
  out.experiment = m.config.id;
  out.method = cc.method;
  out.n_classes = static_cast<int>(n_classes);
  out.n_train = static_cast<int>(ts.min_class_size());
  out.n_test = static_cast<int>(test.size());

  std::vector<int> predicted(test.size());
  if (cc.method == "nls") {
    classify::NlsOptions opts;
    opts.rank_tol = cc.rank_tol;
    if (cc.enrichment) opts.enrichment.push_back(classify::translation_direction((ts.dim() - 2) / 2));
    int k = cc.k > 0 ? std::min<int>(cc.k, static_cast<int>(ts.min_class_size())) : classify::default_k(ts);
    if (!cc.k_candidates.empty()) k = classify::select_k(ts, cc.k_candidates, cc.validation_fraction, cc.seed, opts);
    const auto model = classify::train_nls(ts, k, opts);
    out.k = k;
    parallel_for(test.size(), jobs, [&](std::size_t i) {
      predicted[i] = classify::predict_nls(model, features[test[i]]).label;
    });
  } else if (cc.method == "ns") {
    const auto model = classify::train_ns(ts, cc.rank_tol);
    parallel_for(test.size(), jobs, [&](std::size_t i) {
      predicted[i] = classify::predict_ns(model, features[test[i]]).label;
    });
  } else {
    throw ExperimentError("unknown classifier method: " + cc.method);
  }

  Metrics scored = score_predictions(m, test, predicted);
  scored.method = out.method;
  scored.n_train = out.n_train;
  scored.k = out.k;
  return scored;
}

Metrics run_detection(const fs::path& dir, const FeatureConfig& f, const ClassifierConfig& cc, int jobs) {
  const auto m = load_manifest(dir);
  const auto features = compute_features(dir, m, f, jobs);
  return evaluate(m, features, m.indices(Split::Train), m.indices(Split::Test), cc, jobs);
}

Metrics run_coarse_regression(const fs::path& dir, const FeatureConfig& f, const ClassifierConfig& cc,
                              int jobs) {
  const auto m = load_manifest(dir);
  if (!all_uniform(m.config.specs)) throw ExperimentError("coarse regression needs uniform class ranges");
  const auto features = compute_features(dir, m, f, jobs);
  return evaluate(m, features, m.indices(Split::Train), m.indices(Split::Test), cc, jobs);
}

Metrics learning_curve(const fs::path& dir, const std::vector<int>& sizes, int repeats, const FeatureConfig& f,
                       const ClassifierConfig& cc, int jobs) {
  if (repeats < 1) throw ExperimentError("learning curve needs at least one repeat");
  const auto m = load_manifest(dir);
  const auto features = compute_features(dir, m, f, jobs);
  const auto test = m.indices(Split::Test);

  std::vector<std::vector<std::size_t>> by_class(m.config.specs.size());
  for (std::size_t i : m.indices(Split::Train)) by_class[static_cast<std::size_t>(m.samples[i].cls)].push_back(i);

  Metrics summary;
  for (int size : sizes) {
    for (const auto& pool : by_class) {
      if (size < 1 || static_cast<std::size_t>(size) > pool.size()) {
        throw ExperimentError("learning curve size " + std::to_string(size) + " exceeds the training split");
      }
    }
    std::vector<double> acc;
    std::vector<double> mse;
    for (int r = 0; r < repeats; ++r) {
      std::mt19937_64 rng(derive_seed(cc.seed, size, r));
      std::vector<std::size_t> train;
      for (auto pool : by_class) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(size); ++i) {
          const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
          std::swap(pool[i], pool[j]);
          train.push_back(pool[i]);
        }
      }
      const Metrics one = evaluate(m, features, train, test, cc, jobs);
      acc.push_back(one.accuracy);
      if (one.mse) mse.push_back(*one.mse);
      summary.experiment = one.experiment;
      summary.method = one.method;
      summary.n_classes = one.n_classes;
      summary.n_test = one.n_test;
      summary.k = one.k;
      summary.mse_lower_bound = one.mse_lower_bound;
    }
    const auto [am, as] = mean_std(acc);
    const auto [mm, ms] = mean_std(mse);
    summary.curve.push_back({size, am, as, mm, ms});
  }
  if (!summary.curve.empty()) {
    const auto& last = summary.curve.back();
    summary.n_train = last.size;
    summary.accuracy = last.accuracy_mean;
    if (summary.mse_lower_bound) summary.mse = last.mse_mean;
  }
  return summary;
}

std::vector<Metrics> run_dispersion_experiments(const fs::path& root, const DatasetConfig& base,
                                                const FeatureConfig& f, const ClassifierConfig& cc,
                                                int jobs) {
  std::vector<Metrics> out;
  for (const std::string kind : {"detect-M", "regress-M-3"}) {
    DatasetConfig cfg = base;
    cfg.id = kind;
    cfg.specs = specs_for_kind(kind);
    cfg.nuisance.beta = {0.0, 0.0};
    const fs::path dir = root / kind;
    bool reuse = false;
    if (fs::exists(dir / "manifest.json")) {
      try {
        reuse = to_json(load_manifest(dir).config) == to_json(cfg);
      } catch (const std::exception&) {
        reuse = false;
      }
    }
    if (!reuse) generate_dataset(cfg, dir, jobs);
    out.push_back(is_regression_kind(kind) ? run_coarse_regression(dir, f, cc, jobs) : run_detection(dir, f, cc, jobs));
  }
  return out;
}

std::string metrics_csv(const std::vector<Metrics>& rows) {
  std::ostringstream os;
  os << "experiment,method,n_classes,n_train,n_test,k,accuracy,mse,mse_lower_bound\n";
  for (const auto& m : rows) {
    os << m.experiment << ',' << m.method << ',' << m.n_classes << ',' << m.n_train << ',' << m.n_test << ','
       << m.k << ',' << fmt(m.accuracy) << ',' << (m.mse ? fmt(*m.mse) : "") << ','
       << (m.mse_lower_bound ? fmt(*m.mse_lower_bound) : "") << '\n';
  }
  return os.str();
}

std::string curve_csv(const Metrics& m) {
  std::ostringstream os;
  os << "experiment,method,size,accuracy_mean,accuracy_std,mse_mean,mse_std\n";
  for (const auto& p : m.curve) {
    os << m.experiment << ',' << m.method << ',' << p.size << ',' << fmt(p.accuracy_mean) << ','
       << fmt(p.accuracy_std) << ',' << (m.mse_lower_bound ? fmt(p.mse_mean) : "") << ','
       << (m.mse_lower_bound ? fmt(p.mse_std) : "") << '\n';
  }
  return os.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ExperimentError("cannot write " + path.string());
  os << text;
}

}  // namespace scdtid::exp
