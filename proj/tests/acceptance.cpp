// Acceptance gates. Usage: acceptance [work_dir]. Prints one PASS/FAIL line
// per criterion and exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "helpers.hpp"
#include "scdtid/analytic_models.hpp"
#include "scdtid/classifier.hpp"
#include "scdtid/cli.hpp"
#include "scdtid/experiments.hpp"
#include "scdtid/io.hpp"
#include "scdtid/simulator.hpp"
#include "scdtid/transform.hpp"

using namespace scdtid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass{true};
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

Outcome transform_round_trip() {
  Outcome o;
  std::mt19937_64 rng(101);
  double worst = 0.0;
  bool monotone = true;
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = testing::random_band_limited(rng);
    double previous = 1e300;
    for (std::size_t n : {256u, 512u, 1024u}) {
      const Signal s = testing::band_limited(n, p);
      const Signal back = transform::scdt_inverse(transform::scdt_forward(s, ReferenceDomain::midpoints(n)), s.axis());
      const double err = testing::rel_l1(back.samples(), s.samples());
      if (err >= previous) monotone = false;
      previous = err;
      if (n == 1024) worst = std::max(worst, err);
    }
  }
  o.require(worst < 2e-2, "max rel L1 at N=1024 " + fmt(worst));
  o.require(monotone, "monotone decay over 256/512/1024");
  return o;
}

Outcome composition() {
  Outcome o;
  std::mt19937_64 rng(102);
  const std::size_t n = 1024;
  const double dt = 0.05;
  const auto ref = ReferenceDomain::midpoints(n);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double c1 = testing::uniform(rng, 20.0, 26.0);
    const double c2 = c1 + testing::uniform(rng, 3.0, 6.0);
    const double s1 = testing::uniform(rng, 1.0, 2.5);
    const double s2 = testing::uniform(rng, 1.0, 2.5);
    const double a2 = testing::uniform(rng, 0.3, 1.2);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * dt;
      v[i] = testing::gaussian(t, c1, s1) - a2 * testing::gaussian(t, c2, s2);
    }
    // The warped pulse stays well inside the 51.2-long axis.
    const double omega = testing::uniform(rng, 0.8, 1.25);
    const double moved = testing::uniform(rng, 20.0, 26.0);
    const transform::AffineWarp g{omega, omega * moved - c1};
    worst = std::max(worst, transform::check_composition(Signal(v, 0.0, dt), g, ref));
  }
  o.require(worst <= 2 * dt, "max residual " + fmt(worst) + " vs 2dt " + fmt(2 * dt));
  return o;
}

Signal sample_template(const models::TemplateFn& phi, double lo, double hi, std::size_t n) {
  const double dz = (hi - lo) / static_cast<double>(n - 1);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = phi(lo + static_cast<double>(i) * dz);
  return Signal(std::move(v), lo, dz);
}

// Ratios of successive errors when the expansion step is halved.
bool quadratic_decay(const std::function<std::vector<double>(double)>& approx,
                     const std::function<std::vector<double>(double)>& exact, double p0, std::string& out) {
  bool ok = true;
  double prev = 0.0;
  for (double eps : {0.08, 0.04, 0.02, 0.01}) {
    const double err = max_abs_diff(approx(p0 + eps), exact(p0 + eps));
    if (prev > 0.0) {
      const double r = prev / err;
      out += (out.empty() ? "" : " ") + fmt(r);
      ok = ok && r >= 3.5 && r <= 4.5;
    }
    prev = err;
  }
  return ok;
}

Outcome analytic_identities() {
  using namespace models;
  Outcome o;

  {
    const WaveModel m{2.0, 300.0};
    const TimeAxis axis{0.0, 1.0, 1001};
    const auto t = axis.values();
    const TemplateFn phi = [](double z) { return testing::gaussian(z, 50.0, 7.0); };
    const auto g = wave_warp(m, t);
    const Signal w = transform::apply_warp(sample_template(phi, -400.0, 1400.0, 1'000'001), axis, g.values);
    const double e = testing::rel_linf(w.samples(), wave_sensor(m, phi, t));
    o.require(e < 1e-6, "wave " + fmt(e));
    const double rt = max_abs_diff(wave_inverse_warp(m, g.values), t);
    o.require(rt < 1e-10, "wave round trip " + fmt(rt));
  }
  {
    const DiffusionModel m{0.5, 2.0};
    const TimeAxis axis{0.05, 0.01, 1000};
    const auto t = axis.values();
    const auto tw = diffusion_template_warp(m, t);
    const Signal tmpl = sample_template([&](double z) { return diffusion_template(m, z); }, tw.warp.values.front(),
                                        tw.warp.values.back(), 100'001);
    const Signal w = transform::apply_warp(tmpl, axis, tw.warp.values);
    const double e = testing::rel_linf(w.samples(), diffusion_sensor(m, t));
    o.require(e < 1e-6, "diffusion " + fmt(e));
    const double rt = max_abs_diff(diffusion_inverse_warp(m, tw.warp.values), t);
    o.require(rt < 1e-10, "diffusion round trip " + fmt(rt));
  }
  ConvDiffModel m;
  m.nu = 1.0;
  m.D = 0.25;
  m.x_m = 300.0;
  {
    const std::size_t n = 30'000;
    const double lo = m.support_begin();
    const TimeAxis axis{lo, (m.support_end() - lo) / static_cast<double>(n - 1), n};
    auto t = axis.values();
    t.back() = std::min(t.back(), m.support_end());
    const auto g = convdiff_warp(m, t);
    const TemplateFn phi = [&](double z) { return convdiff_template(m, z); };
    const Signal w =
        transform::apply_warp(sample_template(phi, g.values.front(), g.values.back(), 1'000'001), axis, g.values);
    const double e = testing::rel_linf(w.samples(), convdiff_sensor(m, t));
    o.require(e < 1e-6, "convection-diffusion " + fmt(e));
    double rt = 0.0;
    const auto back = convdiff_inverse_warp(m, g.values);
    for (std::size_t i = 0; i < t.size(); ++i) rt = std::max(rt, std::abs(back[i] - t[i]) / t[i]);
    o.require(rt < 1e-10, "convection-diffusion round trip (relative) " + fmt(rt));
  }
  {
    std::vector<double> z;
    for (double v = 0.0; v <= 60.0; v += 0.5) z.push_back(v);
    auto exact = [&](double ConvDiffModel::*field) {
      return [&, field](double p) {
        ConvDiffModel c = m;
        c.*field = p;
        return convdiff_inverse_warp(c, z);
      };
    };
    const auto fd = taylor_inverse_warp_D(m, TaylorNeighborhood{m.D, 0.1}, z);
    const auto fn = taylor_inverse_warp_nu(m, TaylorNeighborhood{m.nu, 0.2}, z);
    std::string rd;
    std::string rn;
    const bool okd = quadratic_decay([&](double p) { return fd.at(p); }, exact(&ConvDiffModel::D), m.D, rd);
    const bool okn = quadratic_decay([&](double p) { return fn.at(p); }, exact(&ConvDiffModel::nu), m.nu, rn);
    o.require(okd, "Taylor D ratios " + rd);
    o.require(okn, "Taylor nu ratios " + rn);
  }
  return o;
}

Outcome velocity_recovery() {
  Outcome o;
  const sim::SimGrid g;
  const sim::InitialCondition ic;
  const double near = 100.0;
  const double far = 300.0;
  double worst = 0.0;
  for (double E : {0.8, 0.9, 1.0, 1.1, 1.2}) {
    sim::MaterialParams p;
    p.E = E;
    const Signal a = sim::simulate(p, g, ic, near).signal;
    const Signal b = sim::simulate(p, g, ic, far).signal;
    const auto ref = ReferenceDomain::midpoints(a.size());
    const double nu_hat =
        models::estimate_wave_speed(transform::scdt_forward(a, ref), transform::scdt_forward(b, ref), far - near);
    worst = std::max(worst, std::abs(nu_hat - p.wave_speed()) / p.wave_speed());
  }
  o.require(worst < 2e-2, "max relative speed error " + fmt(worst));
  return o;
}

Outcome simulator_validation() {
  Outcome o;
  const sim::SimGrid g;
  const sim::InitialCondition ic;
  const sim::MaterialParams linear;
  const auto tr = sim::simulate(linear, g, ic, 300.0);
  double num = 0.0;
  double den = 0.0;
  const double nu = linear.wave_speed();
  for (std::size_t i = 0; i < tr.signal.size(); ++i) {
    double e = 0.0;
    for (int k = -2; k <= 2; ++k) {
      const double r = 300.0 + k * g.length() - ic.x0 - nu * tr.signal.time(i);
      e += nu * r / (ic.sigma * ic.sigma) * std::exp(-r * r / (2.0 * ic.sigma * ic.sigma));
    }
    num += (tr.signal[i] - e) * (tr.signal[i] - e);
    den += e * e;
  }
  const double l2 = std::sqrt(num / den);
  o.require(l2 < 2e-2, "linear rel L2 " + fmt(l2));

  double drift = 0.0;
  for (double beta : {0.0, 0.2, 0.4, 0.6}) {
    sim::MaterialParams p = sim::sample_params(7);
    p.beta = beta;
    sim::StateHistory h;
    sim::SimOptions opts;
    opts.history_stride = 10;
    sim::simulate(p, g, ic, 300.0, opts, &h);
    drift = std::max(drift, sim::conservation_check(h));
  }
  o.require(drift < 1e-6, "max drift " + fmt(drift));

  const double arrival = sim::arrival_time(tr.signal);
  const double expected = (300.0 - ic.x0) / nu;
  o.require(std::abs(arrival - expected) <= 2 * g.dt, "arrival " + fmt(arrival) + " vs " + fmt(expected));
  return o;
}

// Generates the dataset unless `dir` already holds one with the same config.
exp::DatasetManifest dataset(const fs::path& dir, const std::string& kind) {
  exp::DatasetConfig c;
  c.id = kind;
  c.specs = exp::specs_for_kind(kind);
  c.n_train = 200;
  c.n_test = 50;
  c.base_seed = 1;
  if (fs::exists(dir / "manifest.json")) {
    try {
      const auto m = exp::load_manifest(dir);
      if (exp::to_json(m.config) == exp::to_json(c)) return m;
    } catch (const std::exception&) {
    }
  }
  fs::remove_all(dir);
  return exp::generate_dataset(c, dir, jobs());
}

Outcome beta_detection(const fs::path& work) {
  Outcome o;
  const auto dir = work / "detect-beta";
  dataset(dir, "detect-beta");
  exp::ClassifierConfig nls;
  exp::ClassifierConfig ns;
  ns.method = "ns";
  const auto a = exp::run_detection(dir, exp::FeatureConfig{}, nls, jobs());
  const auto b = exp::run_detection(dir, exp::FeatureConfig{}, ns, jobs());
  o.require(a.accuracy >= 0.9, "NLS accuracy " + fmt(a.accuracy));
  o.require(a.accuracy >= b.accuracy, "NS accuracy " + fmt(b.accuracy));
  return o;
}

Outcome beta_regression(const fs::path& work) {
  Outcome o;
  for (const auto& [kind, factor, cap] : {std::tuple{"regress-beta-3", 2.0, 6.0e-3}, {"regress-beta-10", 4.0, 8.3e-4}}) {
    const auto dir = work / kind;
    dataset(dir, kind);
    const auto m = exp::run_coarse_regression(dir, exp::FeatureConfig{}, exp::ClassifierConfig{}, jobs());
    const double mse = m.mse.value_or(1e300);
    const double bound = m.mse_lower_bound.value_or(0.0);
    o.require(mse <= factor * bound && mse <= cap, std::string(kind) + " MSE " + fmt(mse) + " (bound " + fmt(bound) +
                                                       ", accuracy " + fmt(m.accuracy) + ")");
  }
  return o;
}

Outcome m_experiments(const fs::path& work) {
  Outcome o;
  exp::DatasetConfig base;
  base.n_train = 200;
  base.n_test = 50;
  base.base_seed = 1;
  const auto rows = exp::run_dispersion_experiments(work / "dispersion", base, exp::FeatureConfig{},
                                                    exp::ClassifierConfig{}, jobs());
  for (const auto& m : rows) {
    if (m.experiment == "detect-M") {
      o.require(m.accuracy >= 0.9, "detect-M accuracy " + fmt(m.accuracy));
    } else {
      const double mse = m.mse.value_or(1e300);
      const double bound = m.mse_lower_bound.value_or(0.0);
      o.require(mse <= 2 * bound, m.experiment + " MSE " + fmt(mse) + " (bound " + fmt(bound) + ")");
    }
  }
  return o;
}

Outcome classifier_oracle() {
  using namespace classify;
  Outcome o;
  std::mt19937_64 rng(109);
  int instances = 0;
  int mismatched = 0;
  double residual_gap = 0.0;
  for (int trial = 0; trial < 200; ++trial, ++instances) {
    const auto inst = testing::random_instance(rng);
    const auto m = train_nls(inst.ts, inst.k);
    for (const auto& x : inst.queries) {
      if (predict_nls(m, x).label != testing::brute_force_nls(inst.ts, inst.k, x).label) ++mismatched;
    }
    auto equal = inst.ts;
    const std::size_t n = equal.min_class_size();
    for (auto& cls : equal.classes) cls.resize(n);
    const auto full = train_nls(equal, static_cast<int>(n));
    const auto ns = train_ns(equal);
    for (const auto& x : inst.queries) {
      const auto a = predict_nls(full, x);
      const auto b = predict_ns(ns, x);
      for (std::size_t c = 0; c < a.residuals.size(); ++c) {
        residual_gap = std::max(residual_gap, std::abs(a.residuals[c] - b.residuals[c]));
      }
    }
  }
  o.require(mismatched == 0, std::to_string(instances) + " instances, " + std::to_string(mismatched) + " label mismatches");
  o.require(residual_gap <= 1e-8, "NLS(k=L_c) vs NS residual gap " + fmt(residual_gap));
  return o;
}

Outcome determinism(const fs::path& work) {
  Outcome o;
  const auto data = work / "detect-beta";
  std::string hash[2];
  std::string csv[2];
  for (int r = 0; r < 2; ++r) {
    const auto out = work / ("determinism_" + std::to_string(r));
    std::ostringstream so;
    std::ostringstream se;
    const int code = cli::run({"scdtid", "eval", "--data", data.string(), "--jobs", std::to_string(r + 1), "--out",
                               out.string()},
                              so, se);
    if (code != 0) {
      o.require(false, "eval exit " + std::to_string(code) + " " + se.str());
      return o;
    }
    hash[r] = io::read_json_file(out / "summary.json").at("config_hash").get<std::string>();
    csv[r] = slurp(out / "metrics.csv");
  }
  o.require(hash[0] == hash[1], "config hash " + hash[0]);
  o.require(!csv[0].empty() && csv[0] == csv[1], "metrics.csv byte-identical");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "scdtid_acceptance";
  fs::create_directories(work);

  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"transform round trip", 5, transform_round_trip},
      {"composition residual", 5, composition},
      {"analytic model identities", 5, analytic_identities},
      {"velocity recovery", 30, velocity_recovery},
      {"simulator validation", 60, simulator_validation},
      {"beta detection", 20 * 60, [&] { return beta_detection(work); }},
      {"beta coarse regression", 45 * 60, [&] { return beta_regression(work); }},
      {"M detection and regression", 30 * 60, [&] { return m_experiments(work); }},
      {"classifier oracle", 0, classifier_oracle},
      {"determinism", 0, [&] { return determinism(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0) o.require(secs < c.budget_s, "runtime " + fmt(secs) + " s (budget " + fmt(c.budget_s) + " s)");
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
