#pragma once

// Cumulative distribution transform (CDT) and its signed extension (SCDT)
// for uniformly sampled signals, against a uniform reference density on
// [0,1].

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "scdtid/signal.hpp"

namespace scdtid::transform {

enum class TransformErrc {
  ZeroSignal,
  NegativeInput,
  NonMonotone,
  NonIncreasingWarp,
  SizeMismatch,
};

class TransformError : public std::runtime_error {
 public:
  TransformError(TransformErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  TransformErrc code() const { return code_; }

 private:
  TransformErrc code_;
};

/// Quantile map of a nonnegative signal, in the signal's time units.
/// `values` is nondecreasing and lies within the source time axis.
struct CdtRepr {
  std::vector<double> values;
  ReferenceDomain domain;
};

/// Signed transform: CDTs of the Jordan parts plus their l1 masses. A part
/// with zero mass carries an all-zero sentinel.
struct ScdtRepr {
  CdtRepr pos;
  double pos_mass{0.0};
  CdtRepr neg;
  double neg_mass{0.0};
};

/// s+ = (|s|+s)/2 and s- = (|s|-s)/2 on the same axis.
std::pair<Signal, Signal> jordan_decompose(const Signal& s);

/// Generalized inverse of the normalized cumulative sum:
///   values[m] = min{ t[n] : S[n] > y[m] },
/// falling back to the last sample time when the set is empty.
CdtRepr cdt_forward(const Signal& s, const ReferenceDomain& ref);

struct InverseOptions {
  /// Half width (in output samples) of the local polynomial smoother applied
  /// to the per-cell masses. Negative picks it per sample by the
  /// intersection-of-confidence-intervals rule; 0 disables smoothing.
  int smoothing_half_width{-1};
  int poly_degree{5};
  /// Largest half width the adaptive rule may pick; negative selects
  /// floor(2*sqrt(n)).
  int max_half_width{-1};
  /// Confidence multiplier of the adaptive rule.
  double ici_threshold{2.5};
};

/// Reconstructs the normalized (unit l1 mass) nonnegative signal on
/// `out_axis` from a CDT. The cumulative distribution at the cell edges
/// t[n] +- dt/2 is read off the monotone map, differenced, and smoothed.
Signal cdt_inverse(const CdtRepr& c, const TimeAxis& out_axis, const InverseOptions& opts = {});

ScdtRepr scdt_forward(const Signal& s, const ReferenceDomain& ref);

/// pos_mass * cdt_inverse(pos) - neg_mass * cdt_inverse(neg).
Signal scdt_inverse(const ScdtRepr& r, const TimeAxis& out_axis, const InverseOptions& opts = {});

/// Evaluates g'(t) * s(g(t)) on `out_axis`, where `warp` holds g sampled on
/// `out_axis`. s is linearly interpolated and zero outside its axis; g' uses
/// second-order differences (central inside,
/// three-point one-sided at the ends).
Signal apply_warp(const Signal& s, const TimeAxis& out_axis, std::span<const double> warp);

/// Same, with the output on the signal's own axis.
Signal apply_warp(const Signal& s, std::span<const double> warp);

/// Affine increasing warp g(t) = omega*t - mu, omega > 0.
struct AffineWarp {
  double omega{1.0};
  double mu{0.0};

  double operator()(double t) const { return omega * t - mu; }
  double inverse(double z) const { return (z + mu) / omega; }
};

/// Max deviation over the reference grid between the transform of the warped
/// signal and g^{-1} applied to the transform of the original, taken over
/// both Jordan parts (parts with zero mass in either signal are skipped).
double check_composition(const Signal& s, const AffineWarp& g, const ReferenceDomain& ref);

/// [pos.values, neg.values, w*pos_mass, w*neg_mass], length 2M+2.
std::vector<double> scdt_flatten(const ScdtRepr& r, double mass_weight = 1.0);

}  // namespace scdtid::transform
