#include "scdtid/classifier.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "scdtid/io.hpp"

namespace scdtid::classify {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_query(std::size_t dim, std::span<const double> x) {
  if (x.size() != dim) {
    throw ClassifierError(ClassifierErrc::DimensionMismatch,
                          "query has length " + std::to_string(x.size()) + ", model expects " + std::to_string(dim));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ClassifierError(ClassifierErrc::NonFinite, "query has a non-finite entry");
  }
}

// x minus its projection onto the orthonormal set `basis`.
Vector remove_span(std::span<const Vector> basis, std::span<const double> x) {
  Vector r(x.begin(), x.end());
  for (const Vector& b : basis) {
    const double c = dot(b, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c * b[i];
  }
  return r;
}

void build_units(NlsModel& m) {
  for (std::size_t c = 0; c < m.classes.size(); ++c) {
    auto& cls = m.classes[c];
    cls.unit.clear();
    cls.unit.reserve(cls.raw.size());
    for (std::size_t l = 0; l < cls.raw.size(); ++l) {
      Vector u = remove_span(m.enrichment, cls.raw[l]);
      const double nrm = std::sqrt(dot(u, u));
      if (!(nrm > 0.0)) {
        throw ClassifierError(ClassifierErrc::ZeroVectorSample,
                              "class " + std::to_string(c) + " sample " + std::to_string(l) + " has no usable direction");
      }
      for (double& v : u) v /= nrm;
      cls.unit.push_back(std::move(u));
    }
  }
}

Prediction argmin(std::vector<double> residuals, int k) {
  Prediction p;
  p.k = k;
  p.label = 0;
  for (std::size_t c = 1; c < residuals.size(); ++c) {
    if (residuals[c] < residuals[static_cast<std::size_t>(p.label)]) p.label = static_cast<int>(c);
  }
  p.residuals = std::move(residuals);
  return p;
}

// Stores vectors back to back; the header records how many and their length.
std::vector<double> pack(const std::vector<Vector>& vs) {
  std::vector<double> out;
  for (const Vector& v : vs) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::vector<Vector> unpack(const std::vector<double>& data, std::size_t& pos, std::size_t count, std::size_t dim) {
  if (pos + count * dim > data.size()) throw io::IoError("model file: truncated vector block");
  std::vector<Vector> out(count);
  for (auto& v : out) {
    v.assign(data.begin() + static_cast<std::ptrdiff_t>(pos), data.begin() + static_cast<std::ptrdiff_t>(pos + dim));
    pos += dim;
  }
  return out;
}

}  // namespace

std::size_t TrainingSet::dim() const {
  for (const auto& cls : classes) {
    if (!cls.empty()) return cls.front().size();
  }
  return 0;
}

std::size_t TrainingSet::min_class_size() const {
  std::size_t out = classes.empty() ? 0 : classes.front().size();
  for (const auto& cls : classes) out = std::min(out, cls.size());
  return out;
}

void TrainingSet::validate() const {
  if (classes.empty()) throw ClassifierError(ClassifierErrc::EmptyClass, "training set has no classes");
  const std::size_t d = dim();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c].empty()) {
      throw ClassifierError(ClassifierErrc::EmptyClass, "class " + std::to_string(c) + " has no samples");
    }
    for (const Vector& v : classes[c]) {
      if (v.size() != d || d == 0) {
        throw ClassifierError(ClassifierErrc::DimensionMismatch, "training vectors differ in length");
      }
      for (double x : v) {
        if (!std::isfinite(x)) throw ClassifierError(ClassifierErrc::NonFinite, "training vector has a non-finite entry");
      }
    }
  }
}

TrainingSet make_training_set(std::span<const Vector> vectors, std::span<const int> labels, int n_classes) {
  if (vectors.size() != labels.size()) {
    throw ClassifierError(ClassifierErrc::DimensionMismatch, "vectors and labels differ in count");
  }
  TrainingSet ts;
  ts.classes.resize(static_cast<std::size_t>(std::max(n_classes, 0)));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw ClassifierError(ClassifierErrc::DimensionMismatch, "label out of range");
    }
    ts.classes[static_cast<std::size_t>(labels[i])].push_back(vectors[i]);
  }
  ts.validate();
  return ts;
}

int NlsModel::k_for(std::size_t c) const {
  return std::min(k, static_cast<int>(classes[c].raw.size()));
}

int default_k(const TrainingSet& ts) {
  return static_cast<int>(std::min<std::size_t>(16, ts.min_class_size()));
}

std::vector<Vector> orthonormal_basis(std::span<const Vector> columns, double rank_tol) {
  if (columns.empty()) return {};
  const auto d = static_cast<Eigen::Index>(columns.front().size());
  const auto k = static_cast<Eigen::Index>(columns.size());
  Eigen::MatrixXd a(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    a.col(j) = Eigen::Map<const Eigen::VectorXd>(columns[static_cast<std::size_t>(j)].data(), d);
  }

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Index p = std::min(d, k);
  Eigen::MatrixXd r = qr.matrixQR().topRows(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < std::min(i, k); ++j) r(i, j) = 0.0;
  }
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, p);

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::Index rank = 0;
  if (sv.size() > 0 && sv(0) > 0.0) {
    while (rank < sv.size() && sv(rank) > rank_tol * sv(0)) ++rank;
  }
  const Eigen::MatrixXd basis = q * svd.matrixU().leftCols(rank);

  std::vector<Vector> out(static_cast<std::size_t>(rank), Vector(static_cast<std::size_t>(d)));
  for (Eigen::Index j = 0; j < rank; ++j) {
    Eigen::Map<Eigen::VectorXd>(out[static_cast<std::size_t>(j)].data(), d) = basis.col(j);
  }
  return out;
}

double projection_residual(std::span<const Vector> basis, std::span<const double> x) {
  std::vector<double> coef(basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) coef[j] = dot(basis[j], x);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = x[i];
    for (std::size_t j = 0; j < basis.size(); ++j) r -= coef[j] * basis[j][i];
    acc += r * r;
  }
  return acc;
}

NlsModel train_nls(const TrainingSet& ts, int k, const NlsOptions& opts) {
  ts.validate();
  if (k < 1 || static_cast<std::size_t>(k) > ts.min_class_size()) {
    throw ClassifierError(ClassifierErrc::InvalidK, "k must lie in [1, smallest class size]");
  }
  NlsModel m;
  m.k = k;
  m.dim = ts.dim();
  m.rank_tol = opts.rank_tol;
  for (const Vector& e : opts.enrichment) {
    if (e.size() != m.dim) throw ClassifierError(ClassifierErrc::DimensionMismatch, "enrichment direction length");
  }
  m.enrichment = orthonormal_basis(opts.enrichment, opts.rank_tol);
  m.classes.resize(ts.n_classes());
  for (std::size_t c = 0; c < ts.n_classes(); ++c) m.classes[c].raw = ts.classes[c];
  build_units(m);
  return m;
}

Prediction predict_nls(const NlsModel& m, std::span<const double> x) {
  check_query(m.dim, x);
  const Vector xp = remove_span(m.enrichment, x);
  const double xx = dot(xp, xp);

  std::vector<double> residuals(m.classes.size());
  for (std::size_t c = 0; c < m.classes.size(); ++c) {
    const auto& cls = m.classes[c];
    const std::size_t n = cls.unit.size();
    std::vector<double> dist(n);
    for (std::size_t l = 0; l < n; ++l) {
      const double p = dot(cls.unit[l], xp);
      dist[l] = xx - p * p;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto k = static_cast<std::size_t>(m.k_for(c));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; });

    std::vector<Vector> cols(m.enrichment);
    for (std::size_t i = 0; i < k; ++i) cols.push_back(cls.unit[order[i]]);
    residuals[c] = projection_residual(orthonormal_basis(cols, m.rank_tol), x);
  }
  return argmin(std::move(residuals), m.k);
}

NsModel train_ns(const TrainingSet& ts, double rank_tol) {
  ts.validate();
  NsModel m;
  m.dim = ts.dim();
  m.rank_tol = rank_tol;
  for (std::size_t c = 0; c < ts.n_classes(); ++c) {
    std::vector<Vector> unit;
    unit.reserve(ts.classes[c].size());
    for (std::size_t l = 0; l < ts.classes[c].size(); ++l) {
      Vector u = ts.classes[c][l];
      const double nrm = std::sqrt(dot(u, u));
      if (!(nrm > 0.0)) {
        throw ClassifierError(ClassifierErrc::ZeroVectorSample,
                              "class " + std::to_string(c) + " sample " + std::to_string(l) + " is zero");
      }
      for (double& v : u) v /= nrm;
      unit.push_back(std::move(u));
    }
    m.bases.push_back(orthonormal_basis(unit, rank_tol));
  }
  return m;
}

Prediction predict_ns(const NsModel& m, std::span<const double> x) {
  check_query(m.dim, x);
  std::vector<double> residuals(m.bases.size());
  for (std::size_t c = 0; c < m.bases.size(); ++c) residuals[c] = projection_residual(m.bases[c], x);
  return argmin(std::move(residuals), 0);
}

int select_k(const TrainingSet& ts, std::span<const int> candidates, double validation_fraction,
             std::uint64_t seed, const NlsOptions& opts) {
  ts.validate();
  if (candidates.empty()) throw ClassifierError(ClassifierErrc::InvalidK, "no candidate k");
  if (candidates.size() == 1) return candidates.front();
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ClassifierError(ClassifierErrc::TooFewSamples, "validation fraction must lie in (0, 1)");
  }

  std::mt19937_64 rng(seed);
  TrainingSet fit;
  std::vector<std::pair<Vector, int>> held;
  for (std::size_t c = 0; c < ts.n_classes(); ++c) {
    const std::size_t n = ts.classes[c].size();
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(validation_fraction * n)));
    if (n_val >= n) throw ClassifierError(ClassifierErrc::TooFewSamples, "class too small to split");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng() % (i + 1)]);
    fit.classes.emplace_back();
    for (std::size_t i = 0; i < n; ++i) {
      const Vector& v = ts.classes[c][idx[i]];
      if (i < n_val) {
        held.emplace_back(v, static_cast<int>(c));
      } else {
        fit.classes.back().push_back(v);
      }
    }
  }

  std::vector<int> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  int best_k = -1;
  std::size_t best_correct = 0;
  for (int k : sorted) {
    if (k < 1 || static_cast<std::size_t>(k) > fit.min_class_size()) continue;
    const NlsModel m = train_nls(fit, k, opts);
    std::size_t correct = 0;
    for (const auto& [v, label] : held) correct += predict_nls(m, v).label == label;
    if (best_k < 0 || correct > best_correct) {
      best_k = k;
      best_correct = correct;
    }
  }
  if (best_k < 0) throw ClassifierError(ClassifierErrc::TooFewSamples, "no candidate k fits the training split");
  return best_k;
}

Vector translation_direction(std::size_t m) {
  Vector e(2 * m + 2, 0.0);
  const double v = 1.0 / std::sqrt(static_cast<double>(2 * m));
  std::fill(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(2 * m), v);
  return e;
}

void save_nls(const std::filesystem::path& base, const NlsModel& m) {
  io::json header;
  header["kind"] = "nls";
  header["k"] = m.k;
  header["dim"] = m.dim;
  header["rank_tol"] = m.rank_tol;
  header["n_enrichment"] = m.enrichment.size();
  std::vector<std::size_t> counts;
  std::vector<double> data = pack(m.enrichment);
  for (const auto& cls : m.classes) {
    counts.push_back(cls.raw.size());
    const auto block = pack(cls.raw);
    data.insert(data.end(), block.begin(), block.end());
  }
  header["class_counts"] = counts;
  header["layout"] = "enrichment vectors, then raw training vectors class by class";
  io::write_f64_file(io::array_path(base), data);
  io::write_json_file(io::header_path(base), header);
}

NlsModel load_nls(const std::filesystem::path& base) {
  const auto header = io::read_json_file(io::header_path(base));
  if (header.value("kind", "") != "nls") throw io::IoError(base.string() + ": not an NLS model");
  const auto data = io::read_f64_file(io::array_path(base));
  NlsModel m;
  m.k = header.at("k").get<int>();
  m.dim = header.at("dim").get<std::size_t>();
  m.rank_tol = header.at("rank_tol").get<double>();
  std::size_t pos = 0;
  m.enrichment = unpack(data, pos, header.at("n_enrichment").get<std::size_t>(), m.dim);
  for (std::size_t count : header.at("class_counts").get<std::vector<std::size_t>>()) {
    m.classes.push_back(NlsClass{unpack(data, pos, count, m.dim), {}});
  }
  if (pos != data.size()) throw io::IoError(base.string() + ": trailing data in model file");
  build_units(m);
  return m;
}

void save_ns(const std::filesystem::path& base, const NsModel& m) {
  io::json header;
  header["kind"] = "ns";
  header["dim"] = m.dim;
  header["rank_tol"] = m.rank_tol;
  std::vector<std::size_t> ranks;
  std::vector<double> data;
  for (const auto& b : m.bases) {
    ranks.push_back(b.size());
    const auto block = pack(b);
    data.insert(data.end(), block.begin(), block.end());
  }
  header["class_ranks"] = ranks;
  header["layout"] = "orthonormal basis columns class by class";
  io::write_f64_file(io::array_path(base), data);
  io::write_json_file(io::header_path(base), header);
}

NsModel load_ns(const std::filesystem::path& base) {
  const auto header = io::read_json_file(io::header_path(base));
  if (header.value("kind", "") != "ns") throw io::IoError(base.string() + ": not an NS model");
  const auto data = io::read_f64_file(io::array_path(base));
  NsModel m;
  m.dim = header.at("dim").get<std::size_t>();
  m.rank_tol = header.at("rank_tol").get<double>();
  std::size_t pos = 0;
  for (std::size_t rank : header.at("class_ranks").get<std::vector<std::size_t>>()) {
    m.bases.push_back(unpack(data, pos, rank, m.dim));
  }
  if (pos != data.size()) throw io::IoError(base.string() + ": trailing data in model file");
  return m;
}

}  // namespace scdtid::classify
