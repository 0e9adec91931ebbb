#pragma once

// Closed-form transport representations s(t) = g'(t) * phi(g(t)) for the
// one-way wave, diffusion and convection-diffusion equations measured at a
// single sensor, with the local affine (Taylor) approximations of their
// inverse warps and the known-template wave-speed estimator.

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scdtid/transform.hpp"

namespace scdtid::models {

enum class ModelErrc {
  InvalidParameter,
  OutOfSupport,
  Domain,
  NegativeDiscriminant,
  NonPositiveShift,
};

class ModelError : public std::runtime_error {
 public:
  ModelError(ModelErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ModelErrc code() const { return code_; }

 private:
  ModelErrc code_;
};

/// Sampled warp g and its derivative g' on the same grid.
struct MonotoneMap {
  std::vector<double> values;
  std::vector<double> slope;
};

/// base + slope * (p - center); exactly affine in the expanded parameter p.
struct AffineFamily {
  double center{0.0};
  std::vector<double> base;
  std::vector<double> slope;

  std::vector<double> at(double p) const;
};

using TemplateFn = std::function<double(double)>;

/// g'(t) * phi(g(t)) with phi evaluated exactly at the warped times.
std::vector<double> compose(const TemplateFn& phi, const MonotoneMap& g);

// One-way wave: s(t) = phi(t - x/nu), g(t) = t - x/nu.
struct WaveModel {
  double nu{1.0};
  double x_m{1.0};
  void validate() const;
};

MonotoneMap wave_warp(const WaveModel& m, std::span<const double> t);
std::vector<double> wave_inverse_warp(const WaveModel& m, std::span<const double> z);
std::vector<double> wave_sensor(const WaveModel& m, const TemplateFn& phi, std::span<const double> t);

// Diffusion from a unit point source at the origin.
struct DiffusionModel {
  double D{1.0};
  double x_m{1.0};
  void validate() const;
};

struct TemplateAndWarp {
  std::vector<double> phi;  // template evaluated on the grid
  MonotoneMap warp;         // g_D evaluated on the same grid
};

std::vector<double> diffusion_sensor(const DiffusionModel& m, std::span<const double> t);
double diffusion_template(const DiffusionModel& m, double t);
TemplateAndWarp diffusion_template_warp(const DiffusionModel& m, std::span<const double> t);
std::vector<double> diffusion_inverse_warp(const DiffusionModel& m, std::span<const double> z);

// Convection-diffusion. The transport representation holds on
// [x_m/nu + a, t1] where the quadratic warp is increasing.
struct ConvDiffModel {
  double nu{1.0};
  double D{1.0};
  double x_m{1.0};
  double a{-1.0};   // support offset; negative selects 0.05 * x_m / nu
  double t1{-1.0};  // support end; negative selects 3 * x_m / nu

  double offset() const { return a > 0.0 ? a : 0.05 * x_m / nu; }
  double support_begin() const { return x_m / nu + offset(); }
  double support_end() const { return t1 > 0.0 ? t1 : 3.0 * x_m / nu; }
  void validate() const;
};

/// Closed-form sensor reading. Valid for every t > 0 (the PDE solution), not
/// only on the transport support.
double convdiff_sensor(const ConvDiffModel& m, double t);
std::vector<double> convdiff_sensor(const ConvDiffModel& m, std::span<const double> t);

/// Template phi(z) = f(z) e^{-z}; requires z > 0.
double convdiff_template(const ConvDiffModel& m, double z);
std::vector<double> convdiff_template(const ConvDiffModel& m, std::span<const double> z);

/// g(t) = (x_m - nu t)^2 / (4 D t) on the support.
MonotoneMap convdiff_warp(const ConvDiffModel& m, std::span<const double> t);

/// Both roots of nu^2 t^2 - 2 (x_m nu + 2 D z) t + x_m^2 = 0.
struct QuadraticRoots {
  double lower;
  double upper;
};
QuadraticRoots convdiff_warp_roots(const ConvDiffModel& m, double z);

/// Increasing branch: the upper root.
double convdiff_inverse_warp(const ConvDiffModel& m, double z);
std::vector<double> convdiff_inverse_warp(const ConvDiffModel& m, std::span<const double> z);

struct TaylorNeighborhood {
  double center{0.0};
  double half_width{0.0};
  void validate() const;
};

/// First-order expansion of g^{-1} in D about nb.center (nu from the model).
AffineFamily taylor_inverse_warp_D(const ConvDiffModel& m, const TaylorNeighborhood& nb,
                                   std::span<const double> z);
/// First-order expansion of g^{-1} in nu about nb.center (D from the model).
AffineFamily taylor_inverse_warp_nu(const ConvDiffModel& m, const TaylorNeighborhood& nb,
                                    std::span<const double> z);

/// nu = x_m / int_0^1 (measured(y) - template(y)) dy. Trapezoid rule on the
/// reference grid, extended flat to y = 0 and y = 1.
double estimate_wave_speed(const transform::CdtRepr& template_cdt,
                           const transform::CdtRepr& measured_cdt, double x_m);

/// Same estimator on signed transforms: the shifts of both parts are
/// averaged with the template's part masses as weights.
double estimate_wave_speed(const transform::ScdtRepr& template_scdt,
                           const transform::ScdtRepr& measured_scdt, double x_m);

/// int_0^1 (b(y) - a(y)) dy with the quadrature used by the estimator.
double mean_transport_shift(const transform::CdtRepr& a, const transform::CdtRepr& b);

}  // namespace scdtid::models
