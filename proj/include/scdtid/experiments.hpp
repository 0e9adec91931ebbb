#pragma once

// Dataset generation and the detection / coarse-regression protocols.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scdtid/classifier.hpp"
#include "scdtid/simulator.hpp"

namespace scdtid::exp {

namespace fs = std::filesystem;
using json = nlohmann::json;

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simulator failure while generating a dataset, tagged with the sample.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(const sim::SimError& e, int cls, int index, std::uint64_t seed);
  sim::SimErrc code() const { return code_; }
  std::uint64_t seed() const { return seed_; }
  int class_index() const { return cls_; }
  int sample_index() const { return index_; }

 private:
  sim::SimErrc code_;
  int cls_;
  int index_;
  std::uint64_t seed_;
};

struct Distribution {
  enum class Kind { Fixed, Uniform };
  Kind kind{Kind::Fixed};
  double lo{0.0};
  double hi{0.0};

  static Distribution fixed(double v) { return {Kind::Fixed, v, v}; }
  static Distribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  double center() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  sim::ParamRange range() const { return {lo, hi}; }
};

struct ClassSpec {
  int index{0};
  std::string param;  // "beta" or "M"
  Distribution dist;
};

/// Throws unless params are all "beta" or all "M", indices are 0..n-1,
/// Uniform ranges have lo < hi and the ranges do not overlap.
void validate_specs(const std::vector<ClassSpec>& specs);

std::vector<ClassSpec> detection_specs(const std::string& param);
std::vector<ClassSpec> three_class_specs(const std::string& param);
std::vector<ClassSpec> ten_class_specs(const std::string& param);

/// Experiment kinds: detect-beta, regress-beta-3, regress-beta-10, detect-M,
/// regress-M-3.
std::vector<ClassSpec> specs_for_kind(const std::string& kind);
bool is_regression_kind(const std::string& kind);

/// Mixes (base_seed, class, index) into a per-sample seed.
std::uint64_t derive_seed(std::uint64_t base_seed, int cls, int index);

struct DatasetConfig {
  std::string id{"detect-beta"};
  std::vector<ClassSpec> specs{detection_specs("beta")};
  int n_train{200};
  int n_test{50};
  std::uint64_t base_seed{1};
  sim::SimGrid grid{};
  sim::InitialCondition ic{};
  double x_sensor{300.0};
  /// Nuisance distributions; the class parameter's range is overridden per class.
  sim::ParamSpec nuisance{};
};

json to_json(const sim::MaterialParams& p);
sim::MaterialParams material_from_json(const json& j);
json to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const json& j);

enum class Split { Train, Test };

struct SampleRecord {
  int cls{0};
  int index{0};  // 0..n_train-1 are training samples, the rest test samples
  Split split{Split::Train};
  std::uint64_t seed{0};
  sim::MaterialParams params;
  std::uint64_t offset{0};  // element offset in traces.f64
  std::size_t length{0};
  double target() const;  // value of the class parameter
  std::string param;
};

struct DatasetManifest {
  DatasetConfig config;
  double trace_t0{0.0};
  double trace_dt{1.0};
  std::vector<SampleRecord> samples;  // ordered by (class, index)

  std::vector<std::size_t> indices(Split s) const;
};

json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const json& j);

/// Simulates every sample and writes manifest.json and traces.f64 into `dir`.
DatasetManifest generate_dataset(const DatasetConfig& config, const fs::path& dir, int jobs = 1);
DatasetManifest load_manifest(const fs::path& dir);
Signal load_trace(const fs::path& dir, const DatasetManifest& m, std::size_t sample);

struct FeatureConfig {
  /// Reference grid size; 0 uses the trace length.
  std::size_t reference_size{0};
  /// Scale applied to the two mass entries of the flattened SCDT.
  double mass_weight{1.0};
};

json to_json(const FeatureConfig& f);
FeatureConfig feature_config_from_json(const json& j);

/// Flattened SCDT of every sample, in manifest order. Results are cached in
/// `dir` under a name derived from the feature config.
std::vector<classify::Vector> compute_features(const fs::path& dir, const DatasetManifest& m,
                                               const FeatureConfig& f, int jobs = 1);

struct ClassifierConfig {
  std::string method{"nls"};  // "nls" or "ns"
  int k{0};                   // 0 selects the default
  std::vector<int> k_candidates;  // non-empty runs select_k
  double validation_fraction{0.2};
  double rank_tol{classify::kDefaultRankTol};
  bool enrichment{false};
  std::uint64_t seed{1};
};

json to_json(const ClassifierConfig& c);
ClassifierConfig classifier_config_from_json(const json& j);

struct CurvePoint {
  int size{0};
  double accuracy_mean{0.0};
  double accuracy_std{0.0};
  double mse_mean{0.0};
  double mse_std{0.0};
};

struct Metrics {
  std::string experiment;
  std::string method;
  int n_classes{0};
  int n_train{0};  // per class
  int n_test{0};   // total
  int k{0};
  double accuracy{0.0};
  std::optional<double> mse;
  std::optional<double> mse_lower_bound;
  std::vector<std::vector<int>> confusion;  // rows: true class
  std::vector<CurvePoint> curve;
};

json to_json(const Metrics& m);

/// sum_c freq_c * width_c^2 / 12 with freq_c the share of test samples.
double mse_lower_bound(const std::vector<ClassSpec>& specs, const std::vector<int>& test_counts);

/// (true value - centre of predicted class)^2 averaged over samples.
double coarse_mse(const std::vector<ClassSpec>& specs, const std::vector<double>& truth,
                  const std::vector<int>& predicted);

/// Accuracy, confusion and (for all-uniform specs) MSE of `predicted`, the
/// labels assigned to the manifest samples listed in `test`.
Metrics score_predictions(const DatasetManifest& m, const std::vector<std::size_t>& test,
                          const std::vector<int>& predicted);

/// Trains on `train` and scores on `test` (indices into the manifest).
Metrics evaluate(const DatasetManifest& m, const std::vector<classify::Vector>& features,
                 const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
                 const ClassifierConfig& cc, int jobs = 1);

Metrics run_detection(const fs::path& dir, const FeatureConfig& f, const ClassifierConfig& cc, int jobs = 1);
Metrics run_coarse_regression(const fs::path& dir, const FeatureConfig& f, const ClassifierConfig& cc,
                              int jobs = 1);

/// For each size, `repeats` seeded subsamples of `size` training samples per
/// class are scored on the full test split.
Metrics learning_curve(const fs::path& dir, const std::vector<int>& sizes, int repeats, const FeatureConfig& f,
                       const ClassifierConfig& cc, int jobs = 1);

/// Generates (if absent) and evaluates the M detection and 3-class datasets
/// under `root`, with beta held at zero.
std::vector<Metrics> run_dispersion_experiments(const fs::path& root, const DatasetConfig& base,
                                                const FeatureConfig& f, const ClassifierConfig& cc,
                                                int jobs = 1);

/// One row per Metrics; fixed column set and number formatting.
std::string metrics_csv(const std::vector<Metrics>& rows);
/// One row per curve point.
std::string curve_csv(const Metrics& m);
void write_text_file(const fs::path& path, const std::string& text);

}  // namespace scdtid::exp
