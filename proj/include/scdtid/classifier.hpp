#pragma once

// Subspace classifiers on flattened SCDT vectors.
//
// NLS (nearest local subspace): each training sample spans a 1D subspace.
// For a query, every class keeps the k samples whose spans are closest to
// the query, orthogonalizes them, and the class with the smallest projection
// residual wins. NS fits one subspace per class from all of its samples.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scdtid::classify {

enum class ClassifierErrc {
  EmptyClass,
  ZeroVectorSample,
  DimensionMismatch,
  InvalidK,
  TooFewSamples,
  NonFinite,
};

class ClassifierError : public std::runtime_error {
 public:
  ClassifierError(ClassifierErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ClassifierErrc code() const { return code_; }

 private:
  ClassifierErrc code_;
};

using Vector = std::vector<double>;

/// classes[c] holds the training vectors of class c.
struct TrainingSet {
  std::vector<std::vector<Vector>> classes;

  std::size_t n_classes() const { return classes.size(); }
  std::size_t dim() const;
  std::size_t min_class_size() const;
  /// Throws EmptyClass, DimensionMismatch or NonFinite.
  void validate() const;
};

/// Groups vectors by label. Labels must cover 0..n_classes-1.
TrainingSet make_training_set(std::span<const Vector> vectors, std::span<const int> labels, int n_classes);

inline constexpr double kDefaultRankTol = 1e-10;

struct NlsOptions {
  double rank_tol{kDefaultRankTol};
  /// Extra directions added to every local subspace (empty by default).
  std::vector<Vector> enrichment;
};

struct NlsClass {
  std::vector<Vector> raw;
  std::vector<Vector> unit;  // raw / ||raw||, after removing the enrichment span
};

struct NlsModel {
  int k{1};
  std::size_t dim{0};
  double rank_tol{kDefaultRankTol};
  std::vector<NlsClass> classes;
  std::vector<Vector> enrichment;  // orthonormal

  /// k actually used for class c.
  int k_for(std::size_t c) const;
};

struct NsModel {
  std::size_t dim{0};
  double rank_tol{kDefaultRankTol};
  std::vector<std::vector<Vector>> bases;  // orthonormal columns per class
};

struct Prediction {
  int label{-1};
  std::vector<double> residuals;
  int k{0};
};

/// Default neighbourhood size: min(16, smallest class).
int default_k(const TrainingSet& ts);

NlsModel train_nls(const TrainingSet& ts, int k, const NlsOptions& opts = {});
Prediction predict_nls(const NlsModel& m, std::span<const double> x);

NsModel train_ns(const TrainingSet& ts, double rank_tol = kDefaultRankTol);
Prediction predict_ns(const NsModel& m, std::span<const double> x);

/// Orthonormal basis of span(columns) by Householder QR followed by an SVD of
/// R; singular values at or below rank_tol * sigma_max are dropped.
std::vector<Vector> orthonormal_basis(std::span<const Vector> columns, double rank_tol);

/// ||x - B B^T x||^2, evaluated explicitly.
double projection_residual(std::span<const Vector> basis, std::span<const double> x);

/// Holds out round(fraction * L_c) samples per class (at least one) using a
/// seeded shuffle, trains NLS on the rest for each candidate k and returns the
/// candidate with the best held-out accuracy; ties go to the smaller k.
int select_k(const TrainingSet& ts, std::span<const int> candidates, double validation_fraction,
             std::uint64_t seed, const NlsOptions& opts = {});

/// Unit translation direction of a flattened SCDT of reference size m: ones on
/// both quantile blocks, zero on the mass entries.
Vector translation_direction(std::size_t m);

/// Model files: `<base>.json` header plus `<base>.f64` with the vectors.
void save_nls(const std::filesystem::path& base, const NlsModel& m);
NlsModel load_nls(const std::filesystem::path& base);
void save_ns(const std::filesystem::path& base, const NsModel& m);
NsModel load_ns(const std::filesystem::path& base);

}  // namespace scdtid::classify
