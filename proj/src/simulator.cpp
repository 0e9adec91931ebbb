#include "scdtid/simulator.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>

namespace scdtid::sim {

namespace {

using cplx = std::complex<double>;

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

// Real <-> half-complex transforms of a fixed length with private buffers.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(int n)
      : n_(n),
        nk_(n / 2 + 1),
        real_(fftw_alloc_real(static_cast<std::size_t>(n))),
        spec_(fftw_alloc_complex(static_cast<std::size_t>(nk_))) {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n_, real_.get(), spec_.get(), FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(n_, spec_.get(), real_.get(), FFTW_ESTIMATE);
  }
  ~SpectralWorkspace() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  void forward(const std::vector<double>& in, std::vector<cplx>& out) {
    std::copy(in.begin(), in.end(), real_.get());
    fftw_execute(forward_);
    const auto* s = reinterpret_cast<const cplx*>(spec_.get());
    out.assign(s, s + nk_);
  }

  // Unnormalized inverse; the caller divides by n.
  void backward(const std::vector<cplx>& in, std::vector<double>& out) {
    std::copy(in.begin(), in.end(), reinterpret_cast<cplx*>(spec_.get()));
    fftw_execute(backward_);
    out.assign(real_.get(), real_.get() + n_);
  }

 private:
  int n_;
  int nk_;
  FftwBuffer<double> real_;
  FftwBuffer<fftw_complex> spec_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

struct State {
  std::vector<cplx> u;
  std::vector<cplx> v;
};

class Solver {
 public:
  Solver(const MaterialParams& p, const SimGrid& g, double dissipation_sign)
      : p_(p), n_(g.n_points), nk_(g.n_points / 2 + 1), ws_(g.n_points) {
    k_.resize(nk_);
    k2_.resize(nk_);
    inv_mass_.resize(nk_);
    stiff_.resize(nk_);
    damp_.resize(nk_);
    keep_.resize(nk_);
    const double base = 2.0 * std::numbers::pi / g.length();
    for (int m = 0; m < nk_; ++m) {
      const double k = base * m;
      k_[m] = k;
      k2_[m] = k * k;
      inv_mass_[m] = 1.0 / (p.rho * (1.0 + p.M * k * k));
      stiff_[m] = -p.E * k * k + p.F * k * k * k * k;
      damp_[m] = dissipation_sign * p.eta * k * k;
      // 2/3 rule; this also drops the Nyquist mode from odd derivatives.
      keep_[m] = 3 * m < n_;
    }
    ux_.resize(nk_);
    uxx_.resize(nk_);
  }

  void rhs(const State& s, State& d) {
    d.u = s.v;
    d.v.resize(nk_);
    const bool nonlinear = p_.beta != 0.0;
    if (nonlinear) nonlinear_term(s.u);
    for (int m = 0; m < nk_; ++m) {
      cplx acc = stiff_[m] * s.u[m] + damp_[m] * s.v[m];
      if (nonlinear) acc -= p_.beta * nl_[m];
      d.v[m] = acc * inv_mass_[m];
    }
  }

  void rk4_step(State& s, double dt) {
    rhs(s, k1_);
    axpy(s, 0.5 * dt, k1_, tmp_);
    rhs(tmp_, k2s_);
    axpy(s, 0.5 * dt, k2s_, tmp_);
    rhs(tmp_, k3_);
    axpy(s, dt, k3_, tmp_);
    rhs(tmp_, k4_);
    for (int m = 0; m < nk_; ++m) {
      s.u[m] += dt / 6.0 * (k1_.u[m] + 2.0 * k2s_.u[m] + 2.0 * k3_.u[m] + k4_.u[m]);
      s.v[m] += dt / 6.0 * (k1_.v[m] + 2.0 * k2s_.v[m] + 2.0 * k3_.v[m] + k4_.v[m]);
    }
  }

  SpectralWorkspace& workspace() { return ws_; }

 private:
  static void axpy(const State& s, double h, const State& d, State& out) {
    out.u.resize(s.u.size());
    out.v.resize(s.v.size());
    for (std::size_t m = 0; m < s.u.size(); ++m) {
      out.u[m] = s.u[m] + h * d.u[m];
      out.v[m] = s.v[m] + h * d.v[m];
    }
  }

  // FT(u_x u_xx), dealiased.
  void nonlinear_term(const std::vector<cplx>& u) {
    const cplx i{0.0, 1.0};
    for (int m = 0; m < nk_; ++m) {
      ux_[m] = keep_[m] ? i * k_[m] * u[m] : 0.0;
      uxx_[m] = keep_[m] ? -k2_[m] * u[m] : 0.0;
    }
    ws_.backward(ux_, rx_);
    ws_.backward(uxx_, rxx_);
    const double scale = 1.0 / (static_cast<double>(n_) * n_);
    for (int j = 0; j < n_; ++j) rx_[j] *= rxx_[j] * scale;
    ws_.forward(rx_, nl_);
    for (int m = 0; m < nk_; ++m) {
      if (!keep_[m]) nl_[m] = 0.0;
    }
  }

  MaterialParams p_;
  int n_;
  int nk_;
  SpectralWorkspace ws_;
  std::vector<double> k_, k2_, inv_mass_, stiff_, damp_;
  std::vector<bool> keep_;
  std::vector<cplx> ux_, uxx_, nl_;
  std::vector<double> rx_, rxx_;
  State k1_, k2s_, k3_, k4_, tmp_;
};

double state_norm(const State& s) {
  double acc = 0.0;
  for (std::size_t m = 0; m < s.u.size(); ++m) acc += std::norm(s.u[m]) + std::norm(s.v[m]);
  return std::sqrt(acc);
}

// Weights turning the half spectrum into the real value at one grid index.
struct PointEvaluator {
  std::vector<cplx> w;

  PointEvaluator(int n, int j) : w(n / 2 + 1) {
    for (int m = 0; m <= n / 2; ++m) {
      const bool self_conjugate = m == 0 || 2 * m == n;
      const double theta = 2.0 * std::numbers::pi * m * j / n;
      w[m] = std::polar((self_conjugate ? 1.0 : 2.0) / n, theta);
    }
  }

  double operator()(const std::vector<cplx>& spec) const {
    double acc = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m) acc += (w[m] * spec[m]).real();
    return acc;
  }
};

}  // namespace

const char* to_string(SimErrc code) {
  switch (code) {
    case SimErrc::InvalidParams: return "InvalidParams";
    case SimErrc::InvalidGrid: return "InvalidGrid";
    case SimErrc::StabilityBound: return "StabilityBound";
    case SimErrc::Instability: return "Instability";
    case SimErrc::BadSensorLocation: return "BadSensorLocation";
  }
  return "Unknown";
}

double MaterialParams::wave_speed() const { return std::sqrt(E / rho); }

void MaterialParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!(finite(rho) && rho > 0.0) || !(finite(E) && E > 0.0)) {
    throw SimError(SimErrc::InvalidParams, "material: rho and E must be positive");
  }
  for (double v : {eta, M, F, beta}) {
    if (!(finite(v) && v >= 0.0)) {
      throw SimError(SimErrc::InvalidParams, "material: eta, M, F, beta must be nonnegative");
    }
  }
}

void SimGrid::validate() const {
  if (n_points < 4 || n_points % 2 != 0) {
    throw SimError(SimErrc::InvalidGrid, "grid: n_points must be even and at least 4");
  }
  if (!(dx > 0.0) || !(dt > 0.0) || !std::isfinite(dx) || !std::isfinite(dt)) {
    throw SimError(SimErrc::InvalidGrid, "grid: dx and dt must be positive");
  }
  if (n_steps < 1 || stride < 1) throw SimError(SimErrc::InvalidGrid, "grid: n_steps and stride must be positive");
}

void check_stability(const MaterialParams& p, const SimGrid& g) {
  const double kmax = std::numbers::pi / g.dx;
  if (g.dt * p.wave_speed() * kmax > 0.5) {
    throw SimError(SimErrc::StabilityBound, "stability: dt*nu*k_max exceeds 0.5");
  }
  if (g.dt * p.eta * kmax * kmax > 0.5) {
    throw SimError(SimErrc::StabilityBound, "stability: dt*eta*k_max^2 exceeds 0.5");
  }
}

double max_stable_dt(const MaterialParams& p, double dx) {
  const double kmax = std::numbers::pi / dx;
  double dt = 0.5 / (p.wave_speed() * kmax);
  if (p.eta > 0.0) dt = std::min(dt, 0.5 / (p.eta * kmax * kmax));
  // Step below any rounding that would put the product just over 0.5.
  while (dt * p.wave_speed() * kmax > 0.5 || dt * p.eta * kmax * kmax > 0.5) dt = std::nextafter(dt, 0.0);
  return dt;
}

double linear_mode_growth(const MaterialParams& p, double k, double dissipation_sign) {
  const double k2 = k * k;
  const double inv_mass = 1.0 / (p.rho * (1.0 + p.M * k2));
  const double a = (-p.E * k2 + p.F * k2 * k2) * inv_mass;
  const double b = dissipation_sign * p.eta * k2 * inv_mass;
  const double disc = b * b + 4.0 * a;
  return disc >= 0.0 ? 0.5 * (b + std::sqrt(disc)) : 0.5 * b;
}

SensorTrace simulate(const MaterialParams& p, const SimGrid& g, const InitialCondition& ic,
                     double x_sensor, const SimOptions& opts, StateHistory* history) {
  p.validate();
  g.validate();
  check_stability(p, g);
  if (!(ic.sigma > 0.0) || !(3.0 * ic.sigma < g.length())) {
    throw SimError(SimErrc::InvalidParams, "initial condition: need 0 < 3*sigma < domain length");
  }

  const double pos = x_sensor / g.dx;
  const double jr = std::round(pos);
  if (!std::isfinite(pos) || std::abs(pos - jr) > 1e-9 || jr < 0.0 || jr >= g.n_points) {
    throw SimError(SimErrc::BadSensorLocation, "sensor must sit on a grid point inside [0, L)");
  }
  const int n = g.n_points;
  const PointEvaluator sensor(n, static_cast<int>(jr));

  const double nu = p.wave_speed();
  const double s2 = ic.sigma * ic.sigma;
  std::vector<double> u0(n), v0(n);
  for (int j = 0; j < n; ++j) {
    const double r = j * g.dx - ic.x0;
    u0[j] = std::exp(-r * r / (2.0 * s2));
    v0[j] = nu * r / s2 * u0[j];
  }

  Solver solver(p, g, opts.dissipation_sign);
  State state;
  solver.workspace().forward(u0, state.u);
  solver.workspace().forward(v0, state.v);
  const double norm0 = state_norm(state);

  auto record = [&](int step) {
    if (!history || opts.history_stride <= 0 || step % opts.history_stride != 0) return;
    std::vector<double> v;
    solver.workspace().backward(state.v, v);
    for (double& x : v) x /= n;
    history->times.push_back(step * g.dt);
    history->velocity.push_back(std::move(v));
  };
  if (history) {
    history->dx = g.dx;
    history->times.clear();
    history->velocity.clear();
  }

  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(g.n_steps / g.stride + 1));
  trace.push_back(sensor(state.v));
  record(0);
  for (int step = 1; step <= g.n_steps; ++step) {
    solver.rk4_step(state, g.dt);
    const double nrm = state_norm(state);
    if (!std::isfinite(nrm) || nrm > opts.blowup_factor * norm0) {
      throw SimError(SimErrc::Instability, "simulation diverged at step " + std::to_string(step));
    }
    if (step % g.stride == 0) trace.push_back(sensor(state.v));
    record(step);
  }

  return SensorTrace{Signal(std::move(trace), 0.0, g.dt * g.stride), p, 0};
}

double conservation_check(const StateHistory& h) {
  if (h.velocity.empty()) return 0.0;
  auto integral = [&](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc * h.dx;
  };
  double scale = 0.0;
  for (double x : h.velocity.front()) scale += std::abs(x);
  scale *= h.dx;
  const double i0 = integral(h.velocity.front());
  double drift = 0.0;
  for (const auto& v : h.velocity) drift = std::max(drift, std::abs(integral(v) - i0));
  return scale > 0.0 ? drift / scale : drift;
}

double arrival_time(const Signal& trace) {
  const auto s = trace.samples();
  const auto imax = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  const auto imin = static_cast<std::size_t>(std::min_element(s.begin(), s.end()) - s.begin());
  const std::size_t lo = std::min(imax, imin);
  const std::size_t hi = std::max(imax, imin);
  for (std::size_t i = lo; i < hi; ++i) {
    if ((s[i] > 0.0) != (s[i + 1] > 0.0)) {
      const double frac = s[i] / (s[i] - s[i + 1]);
      return trace.time(i) + frac * trace.dt();
    }
  }
  return trace.time(imax);
}

void ParamSpec::validate() const {
  for (const ParamRange& r : {rho, E, eta, M, F, beta}) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.hi < r.lo) {
      throw SimError(SimErrc::InvalidParams, "param spec: each range needs lo <= hi");
    }
  }
}

MaterialParams sample_params(std::uint64_t seed, const ParamSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(seed);
  auto draw = [&](const ParamRange& r) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return r.lo + (r.hi - r.lo) * u;
  };
  MaterialParams p;
  p.rho = draw(spec.rho);
  p.E = draw(spec.E);
  p.eta = draw(spec.eta);
  p.M = draw(spec.M);
  p.F = draw(spec.F);
  p.beta = draw(spec.beta);
  p.validate();
  return p;
}

}  // namespace scdtid::sim
