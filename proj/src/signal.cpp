#include "scdtid/signal.hpp"

#include <cmath>

namespace scdtid {

std::vector<double> TimeAxis::values() const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = at(i);
  return out;
}

Signal::Signal(std::vector<double> samples, double t0, double dt)
    : samples_(std::move(samples)), t0_(t0), dt_(dt) {
  if (samples_.size() < 2) throw SignalError("signal: need at least two samples");
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw SignalError("signal: dt must be positive");
  if (!std::isfinite(t0_)) throw SignalError("signal: t0 must be finite");
  for (double v : samples_) {
    if (!std::isfinite(v)) throw SignalError("signal: non-finite sample");
  }
}

Signal Signal::zeros(const TimeAxis& axis) {
  return Signal(std::vector<double>(axis.n, 0.0), axis.t0, axis.dt);
}

double Signal::l1_norm() const {
  double acc = 0.0;
  for (double v : samples_) acc += std::abs(v);
  return acc;
}

ReferenceDomain::ReferenceDomain(std::vector<double> grid) {
  if (grid.empty()) throw SignalError("reference domain: empty grid");
  if (grid.front() < 0.0 || grid.back() > 1.0) {
    throw SignalError("reference domain: grid must lie in [0,1]");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw SignalError("reference domain: grid must be strictly increasing");
    }
  }
  grid_ = std::make_shared<const std::vector<double>>(std::move(grid));
}

ReferenceDomain ReferenceDomain::midpoints(std::size_t m) {
  std::vector<double> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    y[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
  }
  return ReferenceDomain(std::move(y));
}

ReferenceDomain ReferenceDomain::linspace(double lo, double hi, std::size_t m) {
  if (m < 2) throw SignalError("reference domain: linspace needs m >= 2");
  std::vector<double> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    y[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
  }
  y.back() = hi;
  return ReferenceDomain(std::move(y));
}

bool ReferenceDomain::operator==(const ReferenceDomain& other) const {
  return grid_ == other.grid_ || *grid_ == *other.grid_;
}

}  // namespace scdtid
