#include "scdtid/analytic_models.hpp"

#include <cmath>
#include <numbers>

namespace scdtid::models {

namespace {

using transform::CdtRepr;

void require(bool ok, ModelErrc code, const char* what) {
  if (!ok) throw ModelError(code, what);
}

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

// (x_m nu + 2 D z)^2 - nu^2 x_m^2 in the cancellation-free form.
double discriminant(double nu, double D, double x_m, double z) {
  return 4.0 * (D * D * z * z + nu * D * x_m * z);
}

double inverse_warp(double nu, double D, double x_m, double z) {
  require(z >= 0.0, ModelErrc::Domain, "convdiff inverse warp: z must be nonnegative");
  const double disc = discriminant(nu, D, x_m, z);
  require(disc >= 0.0, ModelErrc::NegativeDiscriminant, "convdiff inverse warp: negative discriminant");
  return (x_m * nu + 2.0 * D * z + std::sqrt(disc)) / (nu * nu);
}

}  // namespace

std::vector<double> AffineFamily::at(double p) const {
  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] + slope[i] * (p - center);
  return out;
}

std::vector<double> compose(const TemplateFn& phi, const MonotoneMap& g) {
  std::vector<double> out(g.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.slope[i] * phi(g.values[i]);
  return out;
}

// --- wave ---

void WaveModel::validate() const {
  require(positive_finite(nu), ModelErrc::InvalidParameter, "wave model: nu must be positive");
  require(positive_finite(x_m), ModelErrc::InvalidParameter, "wave model: x_m must be positive");
}

MonotoneMap wave_warp(const WaveModel& m, std::span<const double> t) {
  m.validate();
  MonotoneMap g{std::vector<double>(t.size()), std::vector<double>(t.size(), 1.0)};
  for (std::size_t i = 0; i < t.size(); ++i) g.values[i] = t[i] - m.x_m / m.nu;
  return g;
}

std::vector<double> wave_inverse_warp(const WaveModel& m, std::span<const double> z) {
  m.validate();
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] + m.x_m / m.nu;
  return out;
}

std::vector<double> wave_sensor(const WaveModel& m, const TemplateFn& phi, std::span<const double> t) {
  return compose(phi, wave_warp(m, t));
}

// --- diffusion ---

void DiffusionModel::validate() const {
  require(positive_finite(D), ModelErrc::InvalidParameter, "diffusion model: D must be positive");
  require(positive_finite(x_m), ModelErrc::InvalidParameter, "diffusion model: x_m must be positive");
}

std::vector<double> diffusion_sensor(const DiffusionModel& m, std::span<const double> t) {
  m.validate();
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    require(t[i] > 0.0, ModelErrc::Domain, "diffusion sensor: t must be positive");
    out[i] = std::exp(-m.x_m * m.x_m / (4.0 * m.D * t[i])) / std::sqrt(4.0 * std::numbers::pi * m.D * t[i]);
  }
  return out;
}

double diffusion_template(const DiffusionModel& m, double t) {
  require(t > 0.0, ModelErrc::Domain, "diffusion template: t must be positive");
  return m.x_m / (m.D * std::sqrt(4.0 * std::numbers::pi * t)) * std::exp(-1.0 / (4.0 * t));
}

TemplateAndWarp diffusion_template_warp(const DiffusionModel& m, std::span<const double> t) {
  m.validate();
  TemplateAndWarp out;
  out.phi.resize(t.size());
  out.warp.values.resize(t.size());
  out.warp.slope.assign(t.size(), m.D / (m.x_m * m.x_m));
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.phi[i] = diffusion_template(m, t[i]);
    out.warp.values[i] = m.D * t[i] / (m.x_m * m.x_m);
  }
  return out;
}

std::vector<double> diffusion_inverse_warp(const DiffusionModel& m, std::span<const double> z) {
  m.validate();
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = m.x_m * m.x_m * z[i] / m.D;
  return out;
}

// --- convection-diffusion ---

void ConvDiffModel::validate() const {
  require(positive_finite(nu), ModelErrc::InvalidParameter, "convdiff model: nu must be positive");
  require(positive_finite(D), ModelErrc::InvalidParameter, "convdiff model: D must be positive");
  require(positive_finite(x_m), ModelErrc::InvalidParameter, "convdiff model: x_m must be positive");
  require(support_begin() > x_m / nu, ModelErrc::InvalidParameter, "convdiff model: support offset must be positive");
  require(support_end() > support_begin(), ModelErrc::InvalidParameter, "convdiff model: empty support");
}

double convdiff_sensor(const ConvDiffModel& m, double t) {
  require(t > 0.0, ModelErrc::OutOfSupport, "convdiff sensor: t must be positive");
  const double r = m.x_m - m.nu * t;
  return std::exp(-r * r / (4.0 * m.D * t)) / std::sqrt(4.0 * std::numbers::pi * m.D * t);
}

std::vector<double> convdiff_sensor(const ConvDiffModel& m, std::span<const double> t) {
  m.validate();
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = convdiff_sensor(m, t[i]);
  return out;
}

double convdiff_template(const ConvDiffModel& m, double z) {
  require(z > 0.0, ModelErrc::Domain, "convdiff template: z must be positive");
  const double t = inverse_warp(m.nu, m.D, m.x_m, z);
  const double denom = m.nu * m.nu * t * t - m.x_m * m.x_m;
  require(denom > 0.0, ModelErrc::Domain, "convdiff template: singular point");
  return std::sqrt(4.0 * m.D / std::numbers::pi) * std::pow(t, 1.5) / denom * std::exp(-z);
}

std::vector<double> convdiff_template(const ConvDiffModel& m, std::span<const double> z) {
  m.validate();
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = convdiff_template(m, z[i]);
  return out;
}

MonotoneMap convdiff_warp(const ConvDiffModel& m, std::span<const double> t) {
  m.validate();
  const double lo = m.support_begin();
  const double hi = m.support_end();
  MonotoneMap g{std::vector<double>(t.size()), std::vector<double>(t.size())};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ti = t[i];
    require(ti >= lo && ti <= hi, ModelErrc::OutOfSupport, "convdiff warp: t outside support");
    const double r = m.x_m - m.nu * ti;
    g.values[i] = r * r / (4.0 * m.D * ti);
    g.slope[i] = (m.nu * m.nu - m.x_m * m.x_m / (ti * ti)) / (4.0 * m.D);
  }
  return g;
}

QuadraticRoots convdiff_warp_roots(const ConvDiffModel& m, double z) {
  m.validate();
  require(z >= 0.0, ModelErrc::Domain, "convdiff warp roots: z must be nonnegative");
  const double disc = discriminant(m.nu, m.D, m.x_m, z);
  require(disc >= 0.0, ModelErrc::NegativeDiscriminant, "convdiff warp roots: negative discriminant");
  const double b = m.x_m * m.nu + 2.0 * m.D * z;
  const double nu2 = m.nu * m.nu;
  return {(b - std::sqrt(disc)) / nu2, (b + std::sqrt(disc)) / nu2};
}

double convdiff_inverse_warp(const ConvDiffModel& m, double z) {
  m.validate();
  return inverse_warp(m.nu, m.D, m.x_m, z);
}

std::vector<double> convdiff_inverse_warp(const ConvDiffModel& m, std::span<const double> z) {
  m.validate();
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = inverse_warp(m.nu, m.D, m.x_m, z[i]);
  return out;
}

void TaylorNeighborhood::validate() const {
  require(std::isfinite(center) && std::isfinite(half_width) && half_width > 0.0,
          ModelErrc::InvalidParameter, "taylor neighborhood: half width must be positive");
  require(center - half_width > 0.0, ModelErrc::InvalidParameter,
          "taylor neighborhood: parameter range must stay positive");
}

AffineFamily taylor_inverse_warp_D(const ConvDiffModel& m, const TaylorNeighborhood& nb,
                                   std::span<const double> z) {
  nb.validate();
  ConvDiffModel at_center = m;
  at_center.D = nb.center;
  at_center.validate();

  const double nu = m.nu;
  const double D0 = nb.center;
  AffineFamily fam{D0, std::vector<double>(z.size()), std::vector<double>(z.size())};
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    fam.base[i] = inverse_warp(nu, D0, m.x_m, zi);
    const double root = std::sqrt(discriminant(nu, D0, m.x_m, zi));
    // z = 0 is the removable limit: the coefficient tends to zero.
    fam.slope[i] = root > 0.0 ? (2.0 * zi / (nu * nu)) * (1.0 + (m.x_m * nu + 2.0 * D0 * zi) / root) : 0.0;
  }
  return fam;
}

AffineFamily taylor_inverse_warp_nu(const ConvDiffModel& m, const TaylorNeighborhood& nb,
                                    std::span<const double> z) {
  nb.validate();
  ConvDiffModel at_center = m;
  at_center.nu = nb.center;
  at_center.validate();

  const double nu0 = nb.center;
  const double D = m.D;
  AffineFamily fam{nu0, std::vector<double>(z.size()), std::vector<double>(z.size())};
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    fam.base[i] = inverse_warp(nu0, D, m.x_m, zi);
    const double root = std::sqrt(discriminant(nu0, D, m.x_m, zi));
    // At z = 0 the last term vanishes in the limit and the rest reduce to x_m.
    const double cross = root > 0.0 ? 2.0 * D * zi * m.x_m / root : 0.0;
    fam.slope[i] = -(m.x_m + 4.0 * D * zi / nu0 + 2.0 * root / nu0 - cross) / (nu0 * nu0);
  }
  return fam;
}

// --- wave speed from transforms ---

double mean_transport_shift(const CdtRepr& a, const CdtRepr& b) {
  if (!(a.domain == b.domain) || a.values.size() != b.values.size()) {
    throw ModelError(ModelErrc::InvalidParameter, "wave speed: transforms on different reference grids");
  }
  const auto y = a.domain.grid();
  const std::size_t n = y.size();
  auto diff = [&](std::size_t i) { return b.values[i] - a.values[i]; };

  double acc = diff(0) * y[0] + diff(n - 1) * (1.0 - y[n - 1]);
  for (std::size_t i = 1; i < n; ++i) acc += 0.5 * (diff(i) + diff(i - 1)) * (y[i] - y[i - 1]);
  return acc;
}

double estimate_wave_speed(const CdtRepr& template_cdt, const CdtRepr& measured_cdt, double x_m) {
  require(positive_finite(x_m), ModelErrc::InvalidParameter, "wave speed: x_m must be positive");
  const double shift = mean_transport_shift(template_cdt, measured_cdt);
  require(shift > 0.0, ModelErrc::NonPositiveShift, "wave speed: measured signal does not lag the template");
  return x_m / shift;
}

double estimate_wave_speed(const transform::ScdtRepr& template_scdt,
                           const transform::ScdtRepr& measured_scdt, double x_m) {
  require(positive_finite(x_m), ModelErrc::InvalidParameter, "wave speed: x_m must be positive");
  double weighted = 0.0;
  double weight = 0.0;
  if (template_scdt.pos_mass > 0.0 && measured_scdt.pos_mass > 0.0) {
    weighted += template_scdt.pos_mass * mean_transport_shift(template_scdt.pos, measured_scdt.pos);
    weight += template_scdt.pos_mass;
  }
  if (template_scdt.neg_mass > 0.0 && measured_scdt.neg_mass > 0.0) {
    weighted += template_scdt.neg_mass * mean_transport_shift(template_scdt.neg, measured_scdt.neg);
    weight += template_scdt.neg_mass;
  }
  require(weight > 0.0, ModelErrc::NonPositiveShift, "wave speed: no common nonzero part");
  const double shift = weighted / weight;
  require(shift > 0.0, ModelErrc::NonPositiveShift, "wave speed: measured signal does not lag the template");
  return x_m / shift;
}

}  // namespace scdtid::models
