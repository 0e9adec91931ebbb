#pragma once

// Fourier pseudo-spectral solver for the damaged 1D elastic-wave equation
//
//   rho u_tt - E u_xx + eta u_txx - rho M u_ttxx - F u_xxxx + beta u_x u_xx = 0
//
// on a periodic domain, advanced with classical RK4 on the (u, u_t) system.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "scdtid/signal.hpp"

namespace scdtid::sim {

enum class SimErrc {
  InvalidParams,
  InvalidGrid,
  StabilityBound,
  Instability,
  BadSensorLocation,
};

class SimError : public std::runtime_error {
 public:
  SimError(SimErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  SimErrc code() const { return code_; }

 private:
  SimErrc code_;
};

const char* to_string(SimErrc code);

/// Sign applied to the eta k^2 u_t term of the Fourier-space acceleration.
/// Read literally, the equation gives +eta k^2 u_t, which grows every mode;
/// -1 makes eta a damping coefficient.
inline constexpr double kDissipationSign = -1.0;

struct MaterialParams {
  double rho{1.0};
  double E{1.0};
  double eta{0.0};
  double M{0.0};
  double F{0.0};
  double beta{0.0};

  double wave_speed() const;
  void validate() const;
};

struct SimGrid {
  int n_points{600};
  double dx{1.0};
  double dt{0.125};
  int n_steps{3600};
  int stride{1};  // keep every stride-th step in the sensor trace

  double length() const { return n_points * dx; }
  void validate() const;
};

struct InitialCondition {
  double x0{50.0};
  double sigma{7.0};
};

struct SensorTrace {
  Signal signal;
  MaterialParams params;
  std::uint64_t seed{0};
};

/// Velocity field snapshots for diagnostics.
struct StateHistory {
  double dx{1.0};
  std::vector<double> times;
  std::vector<std::vector<double>> velocity;
};

struct SimOptions {
  double dissipation_sign{kDissipationSign};
  /// Record the velocity field every this many steps (0 disables).
  int history_stride{0};
  /// Blow-up threshold on the spectral state norm, relative to t = 0.
  double blowup_factor{1e6};
};

/// Throws StabilityBound unless dt*nu*k_max <= 0.5 and dt*eta*k_max^2 <= 0.5
/// with k_max = pi/dx.
void check_stability(const MaterialParams& p, const SimGrid& g);

/// Largest dt meeting check_stability for these parameters and spacing.
double max_stable_dt(const MaterialParams& p, double dx);

/// Velocity trace u_t(x_sensor, t). x_sensor must be a grid point in [0, L).
SensorTrace simulate(const MaterialParams& p, const SimGrid& g, const InitialCondition& ic,
                     double x_sensor, const SimOptions& opts = {}, StateHistory* history = nullptr);

/// max_t |int u_t dx - int u_t dx at t=0|, divided by int |u_t| dx at t=0.
double conservation_check(const StateHistory& h);

/// Zero crossing of the trace between its maximum and minimum, linearly
/// interpolated. For a right-moving pulse with the default initial velocity
/// this is the time the pulse centre passes the sensor.
double arrival_time(const Signal& trace);

/// Largest real part over the two eigenvalues of the linear system for mode k.
double linear_mode_growth(const MaterialParams& p, double k, double dissipation_sign = kDissipationSign);

/// Uniform U(lo, hi); lo == hi is a fixed value.
struct ParamRange {
  double lo{0.0};
  double hi{0.0};
};

struct ParamSpec {
  ParamRange rho{1.0, 1.0};
  ParamRange E{0.95, 1.05};
  ParamRange eta{0.1, 0.2};
  ParamRange M{0.2, 0.3};
  ParamRange F{0.01, 0.01};
  ParamRange beta{0.0, 0.0};

  void validate() const;
};

/// One uniform draw per field in the order rho, E, eta, M, F, beta from a
/// 64-bit Mersenne twister seeded with `seed`.
MaterialParams sample_params(std::uint64_t seed, const ParamSpec& spec = {});

}  // namespace scdtid::sim
