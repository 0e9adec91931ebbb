#pragma once

// Signal generators and reference computations shared by the tests.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "scdtid/classifier.hpp"
#include "scdtid/signal.hpp"

namespace testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double gaussian(double t, double mu, double sigma) {
  const double z = (t - mu) / sigma;
  return std::exp(-0.5 * z * z);
}

/// Sum of two Gaussian bumps on [0,1) sampled at cell centres.
struct BumpParams {
  double mu1, s1, mu2, s2, a2;
};

inline BumpParams random_bumps(std::mt19937_64& rng, double min_sigma = 0.05, double max_sigma = 0.09) {
  return {uniform(rng, 0.3, 0.45), uniform(rng, min_sigma, max_sigma), uniform(rng, 0.55, 0.7),
          uniform(rng, min_sigma, max_sigma), uniform(rng, 0.3, 1.0)};
}

inline scdtid::Signal bumps(std::size_t n, const BumpParams& p) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    v[i] = gaussian(t, p.mu1, p.s1) + p.a2 * gaussian(t, p.mu2, p.s2);
  }
  return scdtid::Signal(std::move(v), 0.5 / static_cast<double>(n), 1.0 / static_cast<double>(n));
}

/// Four random low-frequency cosines (1 to 6 cycles per unit) under a
/// Gaussian envelope, sampled at cell centres of [0,1).
struct BandLimitedParams {
  double amp[4], freq[4], phase[4];
};

inline BandLimitedParams random_band_limited(std::mt19937_64& rng) {
  BandLimitedParams p{};
  for (int j = 0; j < 4; ++j) {
    p.amp[j] = uniform(rng, -1.0, 1.0);
    p.freq[j] = uniform(rng, 1.0, 6.0);
    p.phase[j] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  return p;
}

inline scdtid::Signal band_limited(std::size_t n, const BandLimitedParams& p) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    double a = 0.0;
    for (int j = 0; j < 4; ++j) a += p.amp[j] * std::cos(2.0 * std::numbers::pi * p.freq[j] * t + p.phase[j]);
    v[i] = a * gaussian(t, 0.5, 0.12);
  }
  return scdtid::Signal(std::move(v), 0.5 / static_cast<double>(n), 1.0 / static_cast<double>(n));
}

inline double rel_l1(std::span<const double> approx, std::span<const double> exact) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    num += std::abs(approx[i] - exact[i]);
    den += std::abs(exact[i]);
  }
  return num / den;
}

inline double rel_linf(std::span<const double> approx, std::span<const double> exact) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    num = std::max(num, std::abs(approx[i] - exact[i]));
    den = std::max(den, std::abs(exact[i]));
  }
  return num / den;
}

/// Brute-force generalized inverse: for every y, scan from the start for
/// the first sample whose normalized cumulative sum exceeds y.
inline std::vector<double> cdt_oracle(std::span<const double> s, double t0, double dt, std::span<const double> y) {
  long double total = 0.0L;
  for (double v : s) total += v;
  std::vector<double> out;
  for (double ym : y) {
    long double acc = 0.0L;
    double value = t0 + static_cast<double>(s.size() - 1) * dt;
    for (std::size_t n = 0; n < s.size(); ++n) {
      acc += s[n];
      if (static_cast<double>(acc / total) > ym) {
        value = t0 + static_cast<double>(n) * dt;
        break;
      }
    }
    out.push_back(value);
  }
  return out;
}

/// Quantile of N(mu, sigma^2) by bisection on the error function.
inline double normal_quantile(double y, double mu, double sigma) {
  double lo = mu - 40.0 * sigma;
  double hi = mu + 40.0 * sigma;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * (1.0 + std::erf((mid - mu) / (sigma * std::numbers::sqrt2)));
    (cdf < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Modified Gram-Schmidt in long double; columns whose remaining norm falls
/// below `tol` times their original norm are dropped.
inline std::vector<std::vector<long double>> mgs_basis(const std::vector<std::vector<double>>& cols, long double tol = 1e-9L) {
  std::vector<std::vector<long double>> q;
  for (const auto& c : cols) {
    std::vector<long double> v(c.begin(), c.end());
    long double n0 = 0.0L;
    for (long double x : v) n0 += x * x;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : q) {
        long double d = 0.0L;
        for (std::size_t i = 0; i < v.size(); ++i) d += b[i] * v[i];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * b[i];
      }
    }
    long double n = 0.0L;
    for (long double x : v) n += x * x;
    if (n <= tol * tol * n0 || n == 0.0L) continue;
    const long double r = std::sqrt(n);
    for (long double& x : v) x /= r;
    q.push_back(std::move(v));
  }
  return q;
}

inline long double residual_to_span(const std::vector<std::vector<double>>& cols, const std::vector<double>& x) {
  const auto q = mgs_basis(cols);
  std::vector<long double> r(x.begin(), x.end());
  for (const auto& b : q) {
    long double d = 0.0L;
    for (std::size_t i = 0; i < r.size(); ++i) d += b[i] * r[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= d * b[i];
  }
  long double n = 0.0L;
  for (long double v : r) n += v * v;
  return n;
}

/// Brute-force local-subspace classifier: for every class, enumerate all
/// k-subsets of its samples, keep the subset with the smallest summed
/// distance from x to the individual sample spans, and score the class by the
/// distance from x to the span of that subset.
struct OracleResult {
  int label{-1};
  std::vector<long double> residuals;
};

inline OracleResult brute_force_nls(const scdtid::classify::TrainingSet& ts, int k, const std::vector<double>& x) {
  OracleResult out;
  for (const auto& cls : ts.classes) {
    const std::size_t n = cls.size();
    const auto kk = static_cast<std::size_t>(std::min<int>(k, static_cast<int>(n)));
    std::vector<long double> d(n);
    for (std::size_t l = 0; l < n; ++l) d[l] = residual_to_span({cls[l]}, x);

    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(kk), true);
    long double best = 0.0L;
    std::vector<std::vector<double>> best_cols;
    bool first = true;
    do {
      long double sum = 0.0L;
      std::vector<std::vector<double>> cols;
      for (std::size_t l = 0; l < n; ++l) {
        if (pick[l]) {
          sum += d[l];
          cols.push_back(cls[l]);
        }
      }
      if (first || sum < best) {
        best = sum;
        best_cols = std::move(cols);
        first = false;
      }
    } while (std::prev_permutation(pick.begin(), pick.end()));
    out.residuals.push_back(residual_to_span(best_cols, x));
  }
  for (std::size_t c = 0; c < out.residuals.size(); ++c) {
    if (out.label < 0 || out.residuals[c] < out.residuals[static_cast<std::size_t>(out.label)]) out.label = static_cast<int>(c);
  }
  return out;
}

/// Random classifier instance: every class has its own random low-dimensional
/// generating subspace and samples are random combinations plus a little noise.
struct Instance {
  scdtid::classify::TrainingSet ts;
  int k{1};
  std::vector<std::vector<double>> queries;
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t max_per_class = 8, std::size_t max_dim = 6) {
  Instance inst;
  const auto dim = static_cast<std::size_t>(2 + rng() % (max_dim - 1));
  const auto n_classes = static_cast<std::size_t>(2 + rng() % 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t min_size = max_per_class;
  std::vector<std::vector<std::vector<double>>> generators(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const std::size_t rank = 1 + rng() % (dim - 1);
    for (std::size_t j = 0; j < rank; ++j) {
      std::vector<double> g(dim);
      for (double& v : g) v = normal(rng);
      generators[c].push_back(std::move(g));
    }
    const auto size = static_cast<std::size_t>(1 + rng() % max_per_class);
    min_size = std::min(min_size, size);
    std::vector<std::vector<double>> samples;
    for (std::size_t l = 0; l < size; ++l) {
      std::vector<double> s(dim, 0.0);
      for (const auto& g : generators[c]) {
        const double a = normal(rng);
        for (std::size_t i = 0; i < dim; ++i) s[i] += a * g[i];
      }
      for (double& v : s) v += 0.05 * normal(rng);
      samples.push_back(std::move(s));
    }
    inst.ts.classes.push_back(std::move(samples));
  }
  // k < dim keeps every local span a proper subspace, so residuals are not
  // all at rounding level.
  const std::size_t k_max = std::min(min_size, dim - 1);
  inst.k = static_cast<int>(1 + rng() % k_max);
  for (int q = 0; q < 5; ++q) {
    const auto& gens = generators[rng() % n_classes];
    std::vector<double> x(dim, 0.0);
    for (const auto& g : gens) {
      const double a = normal(rng);
      for (std::size_t i = 0; i < dim; ++i) x[i] += a * g[i];
    }
    for (double& v : x) v += 0.3 * normal(rng);
    inst.queries.push_back(std::move(x));
  }
  return inst;
}

}  // namespace testing
