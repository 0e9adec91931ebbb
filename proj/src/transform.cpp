#include "scdtid/transform.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace scdtid::transform {

namespace {

// Parts lighter than this fraction of max(1, ||s||_1) take the zero branch.
constexpr double kZeroPartRelTol = 1e-12;

// Hat matrix of a least-squares polynomial fit of degree `degree` over a
// window of `width` equispaced points. Row j gives the weights that evaluate
// the fitted polynomial at window position j.
Eigen::MatrixXd poly_hat_matrix(int width, int degree) {
  const int half = width / 2;
  Eigen::MatrixXd vander(width, degree + 1);
  for (int i = 0; i < width; ++i) {
    const double x = static_cast<double>(i - half) / std::max(half, 1);
    double p = 1.0;
    for (int d = 0; d <= degree; ++d) {
      vander(i, d) = p;
      p *= x;
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(vander);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(width, degree + 1);
  return q * q.transpose();
}

// Window of 2*half+1 samples around i, shifted inward at the ends.
struct Window {
  int start;
  int row;
};

Window window_at(int i, int half, int n) {
  const int width = 2 * half + 1;
  if (i - half < 0) return {0, i};
  if (i - half + width > n) return {n - width, i - (n - width)};
  return {i - half, half};
}

std::vector<double> poly_smooth(const std::vector<double>& data, int half_width, int degree) {
  const int n = static_cast<int>(data.size());
  const int width = 2 * half_width + 1;
  if (half_width <= 0 || width > n || degree + 1 > width) return data;

  const Eigen::MatrixXd hat = poly_hat_matrix(width, degree);
  std::vector<double> out(data.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto [start, row] = window_at(i, half_width, n);
    double acc = 0.0;
    for (int j = 0; j < width; ++j) acc += hat(row, j) * data[start + j];
    out[i] = acc;
  }
  return out;
}

// Local polynomial smoothing with a per-sample bandwidth picked by the
// intersection-of-confidence-intervals rule. The input masses are first
// differences of a distribution function rounded to multiples of 1/m, so the
// noise of a weighted sum is (1/(m*sqrt(12))) * ||first difference of w||.
std::vector<double> adaptive_smooth(const std::vector<double>& data, int max_half, int degree, double m,
                                    double threshold) {
  const int n = static_cast<int>(data.size());
  std::vector<int> halves;
  for (double h = std::max(2, (degree + 1) / 2); static_cast<int>(h) <= max_half; h *= 1.4142135623730951) {
    const int hi = static_cast<int>(h);
    if (halves.empty() || halves.back() != hi) halves.push_back(hi);
  }
  if (halves.empty() || 2 * halves.front() + 1 > n) return data;

  struct Level {
    int half;
    Eigen::MatrixXd hat;
    std::vector<double> noise;  // per hat row
  };
  const double unit = 1.0 / (m * std::sqrt(12.0));
  std::vector<Level> levels;
  for (int h : halves) {
    if (2 * h + 1 > n) break;
    Level lv{h, poly_hat_matrix(2 * h + 1, degree), {}};
    lv.noise.resize(static_cast<std::size_t>(2 * h + 1));
    for (int r = 0; r <= 2 * h; ++r) {
      double ss = 0.0;
      double prev = 0.0;
      for (int j = 0; j <= 2 * h; ++j) {
        ss += (lv.hat(r, j) - prev) * (lv.hat(r, j) - prev);
        prev = lv.hat(r, j);
      }
      ss += prev * prev;
      lv.noise[static_cast<std::size_t>(r)] = unit * std::sqrt(ss);
    }
    levels.push_back(std::move(lv));
  }

  std::vector<double> out(data.size());
  for (int i = 0; i < n; ++i) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    double chosen = data[static_cast<std::size_t>(i)];
    for (const Level& lv : levels) {
      const auto [start, row] = window_at(i, lv.half, n);
      double est = 0.0;
      for (int j = 0; j <= 2 * lv.half; ++j) est += lv.hat(row, j) * data[static_cast<std::size_t>(start + j)];
      const double band = threshold * lv.noise[static_cast<std::size_t>(row)];
      lo = std::max(lo, est - band);
      hi = std::min(hi, est + band);
      if (lo > hi) break;
      chosen = est;
    }
    out[static_cast<std::size_t>(i)] = chosen;
  }
  return out;
}

void check_monotone(const CdtRepr& c) {
  for (std::size_t i = 1; i < c.values.size(); ++i) {
    const double tol = 1e-9 * std::max(1.0, std::abs(c.values[i - 1]));
    if (c.values[i] < c.values[i - 1] - tol) {
      throw TransformError(TransformErrc::NonMonotone,
                           "cdt_inverse: map decreases at index " + std::to_string(i));
    }
  }
}

CdtRepr zero_sentinel(const ReferenceDomain& ref) {
  return CdtRepr{std::vector<double>(ref.size(), 0.0), ref};
}

}  // namespace

std::pair<Signal, Signal> jordan_decompose(const Signal& s) {
  std::vector<double> pos(s.size());
  std::vector<double> neg(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double v = s[i];
    pos[i] = (std::abs(v) + v) / 2.0;
    neg[i] = (std::abs(v) - v) / 2.0;
  }
  return {Signal(std::move(pos), s.t0(), s.dt()), Signal(std::move(neg), s.t0(), s.dt())};
}

CdtRepr cdt_forward(const Signal& s, const ReferenceDomain& ref) {
  const std::size_t n = s.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (s[i] < 0.0) throw TransformError(TransformErrc::NegativeInput, "cdt_forward: negative sample");
    total += s[i];
  }
  if (!(total > 0.0)) throw TransformError(TransformErrc::ZeroSignal, "cdt_forward: zero mass");

  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += s[i];
    cdf[i] = acc / total;
  }

  // Both the grid and the cdf are sorted, so a single merge pass suffices.
  std::vector<double> values(ref.size());
  std::size_t idx = 0;
  for (std::size_t m = 0; m < ref.size(); ++m) {
    const double y = ref[m];
    while (idx < n && !(cdf[idx] > y)) ++idx;
    values[m] = s.time(idx < n ? idx : n - 1);
  }
  return CdtRepr{std::move(values), ref};
}

Signal cdt_inverse(const CdtRepr& c, const TimeAxis& out_axis, const InverseOptions& opts) {
  check_monotone(c);
  if (out_axis.n < 2) throw SignalError("cdt_inverse: output axis needs two samples");

  // Absorb sub-tolerance decreases so the map can be binary searched.
  std::vector<double> q(c.values);
  for (std::size_t i = 1; i < q.size(); ++i) q[i] = std::max(q[i], q[i - 1]);

  const double inv_m = 1.0 / static_cast<double>(q.size());
  auto cdf_at = [&](double t) {
    const auto it = std::upper_bound(q.begin(), q.end(), t);
    return static_cast<double>(it - q.begin()) * inv_m;
  };

  const std::size_t n = out_axis.n;
  std::vector<double> mass(n);
  double lower = cdf_at(out_axis.t0 - 0.5 * out_axis.dt);
  for (std::size_t i = 0; i < n; ++i) {
    const double upper = cdf_at(out_axis.at(i) + 0.5 * out_axis.dt);
    mass[i] = upper - lower;
    lower = upper;
  }

  std::vector<double> smooth;
  if (opts.smoothing_half_width < 0) {
    int cap = opts.max_half_width;
    if (cap < 0) cap = static_cast<int>(std::floor(2.0 * std::sqrt(static_cast<double>(n))));
    cap = std::min(cap, static_cast<int>((n - 1) / 2));
    smooth = adaptive_smooth(mass, cap, opts.poly_degree, static_cast<double>(q.size()), opts.ici_threshold);
  } else {
    const int half = std::min(opts.smoothing_half_width, static_cast<int>((n - 1) / 2));
    smooth = poly_smooth(mass, half, opts.poly_degree);
  }

  double total = 0.0;
  for (double& v : smooth) {
    v = std::max(v, 0.0);
    total += v;
  }
  if (total > 0.0) {
    for (double& v : smooth) v /= total;
  }
  return Signal(std::move(smooth), out_axis.t0, out_axis.dt);
}

ScdtRepr scdt_forward(const Signal& s, const ReferenceDomain& ref) {
  const auto [pos, neg] = jordan_decompose(s);
  const double floor_mass = kZeroPartRelTol * std::max(1.0, s.l1_norm());

  ScdtRepr out{zero_sentinel(ref), 0.0, zero_sentinel(ref), 0.0};
  if (const double m = pos.l1_norm(); m >= floor_mass && m > 0.0) {
    out.pos = cdt_forward(pos, ref);
    out.pos_mass = m;
  }
  if (const double m = neg.l1_norm(); m >= floor_mass && m > 0.0) {
    out.neg = cdt_forward(neg, ref);
    out.neg_mass = m;
  }
  return out;
}

Signal scdt_inverse(const ScdtRepr& r, const TimeAxis& out_axis, const InverseOptions& opts) {
  std::vector<double> out(out_axis.n, 0.0);
  if (r.pos_mass > 0.0) {
    const Signal p = cdt_inverse(r.pos, out_axis, opts);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += r.pos_mass * p[i];
  }
  if (r.neg_mass > 0.0) {
    const Signal q = cdt_inverse(r.neg, out_axis, opts);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= r.neg_mass * q[i];
  }
  return Signal(std::move(out), out_axis.t0, out_axis.dt);
}

Signal apply_warp(const Signal& s, const TimeAxis& out_axis, std::span<const double> warp) {
  const std::size_t n = out_axis.n;
  if (warp.size() != n) {
    throw TransformError(TransformErrc::SizeMismatch, "apply_warp: warp length differs from axis");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(warp[i] > warp[i - 1])) {
      throw TransformError(TransformErrc::NonIncreasingWarp,
                           "apply_warp: warp not strictly increasing at index " + std::to_string(i));
    }
  }

  const double last = static_cast<double>(s.size() - 1);
  auto sample = [&](double t) {
    const double p = (t - s.t0()) / s.dt();
    if (p < 0.0 || p > last) return 0.0;
    const auto i = static_cast<std::size_t>(std::floor(p));
    if (i + 1 >= s.size()) return s[s.size() - 1];
    const double frac = p - static_cast<double>(i);
    return (1.0 - frac) * s[i] + frac * s[i + 1];
  };

  std::vector<double> out(n);
  const double dt = out_axis.dt;
  for (std::size_t i = 0; i < n; ++i) {
    double slope;
    if (n == 2) {
      slope = (warp[1] - warp[0]) / dt;
    } else if (i == 0) {
      slope = (-3.0 * warp[0] + 4.0 * warp[1] - warp[2]) / (2.0 * dt);
    } else if (i + 1 == n) {
      slope = (3.0 * warp[n - 1] - 4.0 * warp[n - 2] + warp[n - 3]) / (2.0 * dt);
    } else {
      slope = (warp[i + 1] - warp[i - 1]) / (2.0 * dt);
    }
    out[i] = slope * sample(warp[i]);
  }
  return Signal(std::move(out), out_axis.t0, out_axis.dt);
}

Signal apply_warp(const Signal& s, std::span<const double> warp) {
  return apply_warp(s, s.axis(), warp);
}

double check_composition(const Signal& s, const AffineWarp& g, const ReferenceDomain& ref) {
  std::vector<double> warp(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) warp[i] = g(s.time(i));
  const Signal warped = apply_warp(s, warp);

  const ScdtRepr base = scdt_forward(s, ref);
  const ScdtRepr moved = scdt_forward(warped, ref);

  double residual = 0.0;
  auto compare = [&](const CdtRepr& a, double ma, const CdtRepr& b, double mb) {
    if (ma <= 0.0 || mb <= 0.0) return;
    for (std::size_t m = 0; m < ref.size(); ++m) {
      residual = std::max(residual, std::abs(b.values[m] - g.inverse(a.values[m])));
    }
  };
  compare(base.pos, base.pos_mass, moved.pos, moved.pos_mass);
  compare(base.neg, base.neg_mass, moved.neg, moved.neg_mass);
  return residual;
}

std::vector<double> scdt_flatten(const ScdtRepr& r, double mass_weight) {
  std::vector<double> out;
  out.reserve(r.pos.values.size() + r.neg.values.size() + 2);
  out.insert(out.end(), r.pos.values.begin(), r.pos.values.end());
  out.insert(out.end(), r.neg.values.begin(), r.neg.values.end());
  out.push_back(mass_weight * r.pos_mass);
  out.push_back(mass_weight * r.neg_mass);
  return out;
}

}  // namespace scdtid::transform
