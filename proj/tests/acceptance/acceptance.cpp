// Acceptance checks. Each criterion prints one line:
//   PASS|FAIL <name>: <measured values>
// Usage: bundlesim_acceptance <name>|all|--list

#include "bundlesim/correlations.hpp"
#include "bundlesim/effective_rate.hpp"
#include "bundlesim/evolution.hpp"
#include "bundlesim/rng.hpp"
#include "bundlesim/trajectories.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace bundlesim;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

SystemParams reference_params(double theta) {
  SystemParams p;  // omega_q = 5, lambda = 0.2, Omega = 0.06, gamma = 1e-4, kappa = 20 gamma
  p.theta = theta;
  return p;
}

double two_photon_resonance(const SystemParams& p) {
  const double target = p.omega_q + 2.0 * p.omega_r;
  return find_resonance(p, 2, {target - 0.25, target + 0.25});
}

double max_abs(const OperatorMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------------------

Outcome parity_algebra() {
  Outcome o;
  std::ostringstream d;
  bool ok = true;
  {
    const SystemParams p = reference_params(kPi / 2);
    const OperatorMatrix h = build_rabi_hamiltonian(p);
    const OperatorMatrix pi = build_parity_operator(p.n_max);
    const double comm = max_abs(pi * h - h * pi) / max_abs(h);
    const DressedBasis b = diagonalize(h, pi);
    const double worst = b.parities.cwiseAbs().minCoeff();
    ok = ok && comm <= 1e-12 && worst > 1.0 - 1e-9;
    d << "theta=pi/2 |[P,H]|/|H|=" << fmt(comm) << " 1-min|parity|=" << fmt(1.0 - worst);
  }
  {
    const SystemParams p = reference_params(kPi / 6);
    const OperatorMatrix h = build_rabi_hamiltonian(p);
    const OperatorMatrix pi = build_parity_operator(p.n_max);
    const double comm = max_abs(pi * h - h * pi) / max_abs(h);
    ok = ok && comm > 1e-3;
    d << "; theta=pi/6 |[P,H]|/|H|=" << fmt(comm);
  }
  o.pass = ok;
  o.detail = d.str();
  return o;
}

Outcome effective_rate() {
  Outcome o;
  std::ostringstream d;
  bool ok = true;
  const double analytic_half = omega_eff_analytic(reference_params(kPi / 2));
  ok = ok && std::abs(analytic_half - 2.357e-4) < 1e-7;
  d << "analytic(pi/2)=" << fmt(analytic_half);
  for (const auto& [label, theta] : std::vector<std::pair<const char*, double>>{
           {"pi/6", kPi / 6}, {"pi/4", kPi / 4}, {"pi/3", kPi / 3}, {"pi/2", kPi / 2}}) {
    const SystemParams p = reference_params(theta);
    const double a = omega_eff_analytic(p);
    const ResonanceFit fit = omega_eff_numeric(p);
    const double rel = std::abs(fit.omega_num - a) / a;
    ok = ok && rel < 0.10;
    d << "; " << label << " num=" << fmt(fit.omega_num) << " an=" << fmt(a) << " rel=" << fmt(rel);
  }
  o.pass = ok;
  o.detail = d.str();
  return o;
}

// Closed-system maxima of P_1e, P_3e relative to P_2e over two analytic
// super-Rabi cycles at the located resonance.
struct OddRatios {
  double r1 = 0.0, r3 = 0.0, drift = 0.0;
};

OddRatios odd_ratios(double theta) {
  SystemParams p = reference_params(theta);
  p.omega_L = two_photon_resonance(p);
  const double t_end = 2.0 * kPi / omega_eff_analytic(p);
  const double dt = 2.0 * kPi / p.omega_L / 16.0;
  const EvolutionResult r = schrodinger_evolve(p, basis_state(p.n_max, 0, Qubit::g), t_end, dt);
  const double m1 = r.population_series(1, Qubit::e).maxCoeff();
  const double m2 = r.population_series(2, Qubit::e).maxCoeff();
  const double m3 = r.population_series(3, Qubit::e).maxCoeff();
  return {m1 / m2, m3 / m2, r.max_norm_drift};
}

Outcome odd_photon_suppression() {
  const OddRatios half = odd_ratios(kPi / 2);
  const OddRatios sixth = odd_ratios(kPi / 6);
  const bool ok_half = half.r1 <= 0.05 && half.r3 <= 0.05;
  const bool ok_sixth = sixth.r1 > 0.2 && sixth.r3 > 0.2;
  std::ostringstream d;
  d << "pi/2 P1e/P2e=" << fmt(half.r1) << " P3e/P2e=" << fmt(half.r3) << (ok_half ? " (ok)" : " (fail)")
    << "; pi/6 P1e/P2e=" << fmt(sixth.r1) << " P3e/P2e=" << fmt(sixth.r3) << (ok_sixth ? " (ok)" : " (fail: need > 0.2)");
  return {ok_half && ok_sixth, d.str()};
}

// Detunings: 0.05 steps over [0.5, 4.5], refined to 0.01 within 0.15 of each
// integer multiple of omega_r.
std::vector<double> selection_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 80; ++i) g.push_back(0.5 + 0.05 * i);
  for (int j = 1; j <= 4; ++j) {
    for (int i = -15; i <= 15; ++i) g.push_back(j + 0.01 * i);
  }
  for (double& x : g) x = std::round(x * 1e6) / 1e6;
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

std::vector<double> spectrum_peaks(const std::vector<double>& grid, const std::vector<double>& xx, double& baseline) {
  std::vector<double> sorted = xx;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  baseline = sorted[sorted.size() / 2];
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < xx.size(); ++i) {
    if (xx[i] > xx[i - 1] && xx[i] > xx[i + 1] && xx[i] > 3.0 * baseline) peaks.push_back(grid[i]);
  }
  return peaks;
}

Outcome spectral_selection_rule() {
  const std::vector<double> grid = selection_grid();
  std::ostringstream d;
  bool ok = true;
  auto near = [](double x, int j) { return std::abs(x - j) <= 0.15; };
  for (const auto& [label, theta] : std::vector<std::pair<const char*, double>>{{"pi/2", kPi / 2}, {"pi/6", kPi / 6}}) {
    const SpectrumResult r = excitation_spectrum(reference_params(theta), grid, {.correlations = false});
    const bool all_ok = std::all_of(r.ok.begin(), r.ok.end(), [](bool b) { return b; });
    double baseline = 0.0;
    const std::vector<double> peaks = spectrum_peaks(grid, r.xx, baseline);
    const std::vector<int> allowed = theta == kPi / 2 ? std::vector<int>{2, 4} : std::vector<int>{1, 2, 3, 4};
    const std::vector<int> required = theta == kPi / 2 ? std::vector<int>{2} : std::vector<int>{1, 3};
    bool inside = true;
    for (double x : peaks) {
      inside = inside && std::any_of(allowed.begin(), allowed.end(), [&](int j) { return near(x, j); });
    }
    bool present = true;
    for (int j : required) present = present && std::any_of(peaks.begin(), peaks.end(), [&](double x) { return near(x, j); });
    ok = ok && all_ok && inside && present;
    d << (d.tellp() > 0 ? "; " : "") << label << " peaks at";
    for (double x : peaks) d << " " << fmt(x);
    d << " (baseline " << fmt(baseline) << ", " << grid.size() << " points"
      << (all_ok ? "" : ", flagged points") << (inside ? "" : ", peak outside allowed windows")
      << (present ? "" : ", required peak missing") << ")";
  }
  return {ok, d.str()};
}

Outcome correlation_dips() {
  SystemParams p = reference_params(kPi / 2);
  const double w = two_photon_resonance(p);
  const double center = w - p.omega_q;
  std::vector<double> offsets{0.0, 0.0025, 0.005, 0.0075, 0.01, 0.015, 0.02, 0.03, 0.05, 0.075, 0.1};
  std::vector<double> grid;
  for (double o : offsets) {
    grid.push_back(center - o);
    if (o > 0.0) grid.push_back(center + o);
  }
  std::sort(grid.begin(), grid.end());
  const SpectrumResult r = excitation_spectrum(p, grid);
  std::ostringstream d;
  d << "resonance dq=" << fmt(center);
  bool ok = true;
  const std::vector<std::pair<const char*, const std::vector<double>*>> series{
      {"g2", &r.g2}, {"g3", &r.g3}, {"g4", &r.g4}};
  for (const auto& [name, g] : series) {
    // Interior local minima of g_n; the dip is the lowest of them.
    std::size_t dip = 0;
    for (std::size_t i = 1; i + 1 < g->size(); ++i) {
      if ((*g)[i] < (*g)[i - 1] && (*g)[i] < (*g)[i + 1] && (dip == 0 || (*g)[i] < (*g)[dip])) dip = i;
    }
    bool good = dip != 0 && std::abs(grid[dip] - center) <= 0.1;
    double left = 0.0, right = 0.0;
    if (good) {
      left = *std::max_element(g->begin(), g->begin() + static_cast<long>(dip));
      right = *std::max_element(g->begin() + static_cast<long>(dip) + 1, g->end());
      const bool finite = std::all_of(g->begin(), g->end(), [](double v) { return std::isfinite(v); });
      good = finite && left > 1.0 && right > 1.0 && (*g)[dip - 1] > 1.0 && (*g)[dip + 1] > 1.0;
    }
    ok = ok && good;
    d << "; " << name;
    if (dip != 0) {
      d << " min " << fmt((*g)[dip]) << " at dq=" << fmt(grid[dip]) << " shoulders " << fmt(left) << "/" << fmt(right);
    } else {
      d << " no interior minimum";
    }
  }
  return {ok, d.str()};
}

// theta = pi/6: the two-photon rate exceeds kappa, so P_2e swings widely
// before damping sets in.
Outcome unraveling_oracle() {
  SystemParams p = reference_params(kPi / 6);
  p.omega_L = two_photon_resonance(p);
  const DrivenModel m = DrivenModel::build(p);
  const double period = m.period();
  const double t_end = 3000.0 * period;
  const double dt = 60.0 * period;
  const int n_traj = 500;

  const OperatorMatrix g = m.op_to_bare(OperatorMatrix(m.ground_state() * m.ground_state().adjoint()));
  const EvolutionResult me = lindblad_evolve(p, g, t_end, dt);
  const Eigen::VectorXd ref = me.population_series(2, Qubit::e);

  const KetPropagator prop(m, true);
  TrajectoryOptions opts;
  opts.population_indices = {basis_index(2, Qubit::e)};
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(ref.size());
  for (int i = 0; i < n_traj; ++i) {
    const TrajectoryResult r = mcwf_run(m, prop, derive_seed(2024, static_cast<std::uint64_t>(i)), t_end, dt, opts);
    sum += r.populations.col(0);
  }
  const Eigen::VectorXd mean = sum / n_traj;
  double worst = 0.0;
  double worst_t = 0.0;
  bool ok = true;
  for (Eigen::Index i = 0; i < ref.size(); ++i) {
    const double pr = std::clamp(ref(i), 0.0, 1.0);
    const double sigma = std::sqrt(pr * (1.0 - pr) / n_traj);
    const double dev = std::abs(mean(i) - ref(i));
    const double z = sigma > 0.0 ? dev / sigma : (dev > 0.0 ? INFINITY : 0.0);
    if (z > worst) {
      worst = z;
      worst_t = me.times[static_cast<std::size_t>(i)];
    }
    ok = ok && dev <= 3.0 * sigma;
  }
  std::ostringstream d;
  d << n_traj << " trajectories, " << ref.size() << " times to t=" << fmt(t_end) << ", max P2e(ME)=" << fmt(ref.maxCoeff())
    << ", worst deviation " << fmt(worst) << " sigma at t=" << fmt(worst_t);
  return {ok, d.str()};
}

PurityPoint purity_at(double theta, double kappa, int n_traj, double t_traj, std::uint64_t seed) {
  PurityOptions o;
  o.n_traj = n_traj;
  o.t_traj = t_traj;
  o.seed = seed;
  return purity_sweep(reference_params(theta), SweepVariable::kappa, {kappa}, o).front();
}

Outcome purity() {
  std::ostringstream d;
  const PurityPoint fig = purity_at(kPi / 2, 2e-3, 25, 1.6e6, 11);
  const bool ok_fig = fig.ok && fig.pi2 >= 0.9 && fig.stats.total >= 1000;
  d << "kappa=2e-3 pi/2 Pi2=" << fmt(fig.pi2) << "+-" << fmt(fig.stderr_pi2) << " events=" << fig.stats.total;
  const double kappa = std::pow(10.0, -1.6);
  const PurityPoint half = purity_at(kPi / 2, kappa, 20, 1e7, 12);
  const PurityPoint sixth = purity_at(kPi / 6, kappa, 20, 1e6, 13);
  const bool ok_order = half.ok && sixth.ok && half.pi2 - 3.0 * half.stderr_pi2 > sixth.pi2 + 3.0 * sixth.stderr_pi2;
  d << "; kappa=10^-1.6 pi/2 Pi2=" << fmt(half.pi2) << "+-" << fmt(half.stderr_pi2) << " (" << half.stats.total
    << " events), pi/6 Pi2=" << fmt(sixth.pi2) << "+-" << fmt(sixth.stderr_pi2) << " (" << sixth.stats.total
    << " events)";
  if (!fig.error.empty()) d << " error: " << fig.error;
  return {ok_fig && ok_order, d.str()};
}

Outcome bundle_crossover() {
  const std::vector<double> gammas{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  std::ostringstream d;
  bool ok = true;
  for (const auto& [label, theta] : std::vector<std::pair<const char*, double>>{{"pi/2", kPi / 2}, {"pi/6", kPi / 6}}) {
    SystemParams p = reference_params(theta);
    p.omega_L = two_photon_resonance(p);
    std::vector<double> g1, g2;
    for (double gamma : gammas) {
      p.gamma_q = gamma;
      p.kappa = 20.0 * gamma;
      const double tau = 1.0 / p.kappa;
      g1.push_back(g2_tau(p, {tau}, 1).g.front());
      g2.push_back(g2_tau(p, {tau}, 2).g.front());
    }
    d << (d.tellp() > 0 ? "; " : "") << label;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      d << " [gamma=" << fmt(gammas[i]) << " g1=" << fmt(g1[i]) << " g2=" << fmt(g2[i]) << "]";
    }
    if (theta == kPi / 2) {
      bool small = g2.front() < 1.0 && g2.back() > 1.0;
      // Small-gamma regime: every gamma with antibunched bundles.
      for (std::size_t i = 0; i < gammas.size(); ++i) {
        if (g2[i] < 1.0) small = small && g1[i] > 1.0;
      }
      ok = ok && small;
    } else {
      for (std::size_t i = 0; i < gammas.size(); ++i) ok = ok && !(g1[i] > 1.0 && g2[i] < 1.0);
    }
  }
  return {ok, d.str()};
}

Outcome conservation() {
  std::ostringstream d;
  bool ok = true;
  double worst_trace = 0.0, worst_eig = 1.0, worst_drift = 0.0;
  EvolutionOptions lenient;
  lenient.strict = false;
  for (double theta : {kPi / 2, kPi / 6}) {
    SystemParams p = reference_params(theta);
    p.omega_L = two_photon_resonance(p);
    const DrivenModel m = DrivenModel::build(p);
    const double period = m.period();
    const OperatorMatrix g = m.op_to_bare(OperatorMatrix(m.ground_state() * m.ground_state().adjoint()));
    // A short run sampled inside the period and a long one over many periods.
    for (const auto& [t_end, dt] : std::vector<std::pair<double, double>>{{20.0 * period, period / 8.0},
                                                                         {3000.0 * period, 25.0 * period}}) {
      const EvolutionResult r = lindblad_evolve(p, g, t_end, dt, {}, lenient);
      worst_trace = std::max(worst_trace, r.max_trace_error);
      worst_eig = std::min(worst_eig, r.min_eigenvalue);
    }
    const SteadyState s = periodic_steady_state(p);
    worst_eig = std::min(worst_eig, s.min_eigenvalue);
    worst_trace = std::max(worst_trace, std::abs(s.rho_bar.trace().real() - 1.0));

    SystemParams closed = p;
    closed.kappa = 0.0;
    closed.gamma_q = 0.0;
    const EvolutionResult c =
        schrodinger_evolve(closed, basis_state(p.n_max, 0, Qubit::g), 2000.0 * period, period / 4.0);
    worst_drift = std::max(worst_drift, c.max_norm_drift);
  }
  ok = worst_trace < 1e-8 && worst_eig >= -1e-8 && worst_drift < 1e-8;
  d << "max|Tr rho - 1|=" << fmt(worst_trace) << " min eig=" << fmt(worst_eig) << " max norm drift=" << fmt(worst_drift);
  return {ok, d.str()};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"parity_algebra", parity_algebra},
      {"effective_rate", effective_rate},
      {"odd_photon_suppression", odd_photon_suppression},
      {"spectral_selection_rule", spectral_selection_rule},
      {"correlation_dips", correlation_dips},
      {"unraveling_oracle", unraveling_oracle},
      {"purity", purity},
      {"bundle_crossover", bundle_crossover},
      {"conservation", conservation},
  };
  return all;
}

bool run_one(const Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << fmt(secs) << " s]" << std::endl;
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: " << argv[0] << " <criterion>|all|--list\n";
    return 2;
  }
  const std::string which = argv[1];
  if (which == "--list") {
    for (const auto& c : criteria()) std::cout << c.name << "\n";
    return 0;
  }
  bool ok = true;
  bool found = false;
  for (const auto& c : criteria()) {
    if (which == "all" || which == c.name) {
      found = true;
      ok = run_one(c) && ok;
    }
  }
  if (!found) {
    std::cerr << "unknown criterion '" << which << "'\n";
    return 2;
  }
  return ok ? 0 : 1;
}
