#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scdtid {

/// Uniform time grid t[n] = t0 + n*dt, n = 0..n-1.
struct TimeAxis {
  double t0{0.0};
  double dt{1.0};
  std::size_t n{0};

  double at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double back() const { return at(n - 1); }
  std::vector<double> values() const;
};

class SignalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniformly sampled real time series. Invariants (checked on construction):
/// at least two samples, dt > 0, all samples finite.
class Signal {
 public:
  Signal(std::vector<double> samples, double t0, double dt);

  static Signal zeros(const TimeAxis& axis);

  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double t0() const { return t0_; }
  double dt() const { return dt_; }
  double time(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }
  TimeAxis axis() const { return {t0_, dt_, samples_.size()}; }
  double operator[](std::size_t i) const { return samples_[i]; }

  /// Discrete l1 norm, sum |s_n| (sample units, no dt factor).
  double l1_norm() const;

 private:
  std::vector<double> samples_;
  double t0_;
  double dt_;
};

/// Reference grid y[m] in [0,1] for a uniform reference density on [0,1].
/// The grid is shared and immutable once built.
class ReferenceDomain {
 public:
  explicit ReferenceDomain(std::vector<double> grid);

  /// Cell midpoints (m + 1/2)/M. Every point is strictly inside (0,1).
  static ReferenceDomain midpoints(std::size_t m);
  /// m points from lo to hi inclusive.
  static ReferenceDomain linspace(double lo, double hi, std::size_t m);

  std::span<const double> grid() const { return *grid_; }
  std::size_t size() const { return grid_->size(); }
  double operator[](std::size_t i) const { return (*grid_)[i]; }

  bool operator==(const ReferenceDomain& other) const;

 private:
  std::shared_ptr<const std::vector<double>> grid_;
};

}  // namespace scdtid
