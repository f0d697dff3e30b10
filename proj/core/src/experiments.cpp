#include "bundlesim/experiments.hpp"

#include "bundlesim/csv.hpp"
#include "bundlesim/parallel.hpp"
#include "bundlesim/rng.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#ifndef BUNDLESIM_VERSION
#define BUNDLESIM_VERSION "unknown"
#endif

namespace bundlesim {

namespace {

int parse_population_label(const std::string& label, int n_max) {
  const char s = label.back();
  int n = 0;
  try {
    std::size_t used = 0;
    n = std::stoi(label.substr(0, label.size() - 1), &used);
    if (used != label.size() - 1) throw std::invalid_argument(label);
  } catch (const std::exception&) {
    throw ParameterError("populations", "bad label '" + label + "'");
  }
  if (n < 0 || n > n_max) throw ParameterError("populations", "photon number outside the truncation in '" + label + "'");
  return basis_index(n, s == 'g' ? Qubit::g : Qubit::e);
}

SystemParams at_resonance(const RunConfig& cfg) {
  SystemParams p = cfg.params;
  if (!cfg.locate_resonance) return p;
  const double target = p.omega_q + cfg.resonance_order * p.omega_r;
  ResonanceOptions ro;
  ro.model = model_options(cfg);
  p.omega_L = find_resonance(p, cfg.resonance_order, {target - cfg.bracket_halfwidth, target + cfg.bracket_halfwidth}, ro);
  return p;
}

std::string side_path(const std::string& output, const std::string& suffix) {
  const auto dot = output.rfind('.');
  const auto slash = output.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return output + suffix;
  return output.substr(0, dot) + suffix;
}

void resonance_meta(std::ostream& out, const RunConfig& cfg, const SystemParams& p) {
  if (!cfg.locate_resonance) return;
  write_meta(out, "located_omega_L", p.omega_L);
  write_meta(out, "located_detuning", (p.omega_L - p.omega_q) / p.omega_r);
}

ExperimentReport run_spectrum(const RunConfig& cfg, std::ostream& out) {
  SpectrumOptions so;
  so.steady = steady_options(cfg);
  so.threads = cfg.threads;
  const SpectrumResult r = excitation_spectrum(cfg.params, cfg.detuning_grid, so);
  ExperimentReport rep;
  for (std::size_t i = 0; i < r.ok.size(); ++i) {
    if (!r.ok[i]) {
      ++rep.flagged;
      rep.notes.push_back("detuning " + format_double(r.detunings[i]) + ": " + r.errors[i]);
    }
  }
  write_meta(out, "max_levels", std::to_string(r.levels));
  write_spectrum_csv(out, r);
  return rep;
}

ExperimentReport run_rabi(const RunConfig& cfg, std::ostream& out) {
  const SystemParams p = at_resonance(cfg);
  EvolutionOptions eo = closed_system_defaults();
  eo.propagator = propagator_options(cfg);
  if (cfg.levels != 0) eo.model.levels = cfg.levels;
  const EvolutionResult r = schrodinger_evolve(p, basis_state(p.n_max, 0, Qubit::g), cfg.t_end, cfg.dt_out, {}, eo);
  std::vector<int> cols;
  std::vector<std::string> header{"t"};
  for (const auto& label : cfg.populations) {
    cols.push_back(parse_population_label(label, p.n_max));
    header.push_back("P_" + label);
  }
  resonance_meta(out, cfg, p);
  write_meta(out, "levels", std::to_string(r.levels));
  write_meta(out, "max_norm_drift", r.max_norm_drift);
  write_header(out, header);
  std::vector<double> row;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    row.assign(1, r.times[i]);
    for (int c : cols) row.push_back(r.populations(static_cast<Eigen::Index>(i), c));
    write_row(out, row);
  }
  ExperimentReport rep;
  if (r.max_norm_drift > 1e-8) rep.notes.push_back("norm drift " + format_double(r.max_norm_drift) + " exceeds 1e-8");
  return rep;
}

ExperimentReport run_trajectories(const RunConfig& cfg, std::ostream& out) {
  const SystemParams p = at_resonance(cfg);
  const DrivenModel model = DrivenModel::build(p, model_options(cfg));
  const KetPropagator prop(model, true, propagator_options(cfg));
  TrajectoryOptions to;
  to.propagator = propagator_options(cfg);
  for (const auto& label : cfg.populations) to.population_indices.push_back(parse_population_label(label, p.n_max));

  std::vector<TrajectoryResult> runs(static_cast<std::size_t>(cfg.n_traj));
  parallel_for(runs.size(), cfg.threads, [&](std::size_t i) {
    runs[i] = mcwf_run(model, prop, derive_seed(cfg.seed, i), cfg.t_end, cfg.dt_out, to);
  });

  std::vector<std::vector<ClickRecord>> clicks;
  BundleStats stats;
  const double window = p.kappa > 0.0 ? cfg.window_kappa / p.kappa : 0.0;
  for (const auto& r : runs) {
    clicks.push_back(r.clicks);
    if (window > 0.0) stats.merge(classify_bundles(r.clicks, window, cfg.t_end));
  }
  resonance_meta(out, cfg, p);
  write_meta(out, "levels", std::to_string(model.levels()));
  if (window > 0.0) {
    write_meta(out, "bundle_window", window);
    write_meta(out, "clusters_total", std::to_string(stats.total));
    write_meta(out, "Pi_2", stats.purity(2));
    write_meta(out, "qubit_clicks", std::to_string(stats.qubit_clicks));
  }
  write_clicks_csv(out, clicks);

  ExperimentReport rep;
  if (!cfg.output.empty()) {
    const std::string path = side_path(cfg.output, ".populations.csv");
    std::ofstream pf(path);
    if (!pf) throw std::runtime_error("cannot open " + path);
    write_run_header(pf, cfg);
    std::vector<std::string> header{"trajectory_id", "t"};
    for (const auto& label : cfg.populations) header.push_back("P_" + label);
    write_header(pf, header);
    for (std::size_t k = 0; k < runs.size(); ++k) {
      for (std::size_t i = 0; i < runs[k].times.size(); ++i) {
        std::vector<std::string> cells{std::to_string(k), format_double(runs[k].times[i])};
        for (Eigen::Index c = 0; c < runs[k].populations.cols(); ++c) {
          cells.push_back(format_double(runs[k].populations(static_cast<Eigen::Index>(i), c)));
        }
        write_cells(pf, cells);
      }
    }
    rep.files.push_back(path);
  }
  return rep;
}

ExperimentReport run_purity(const RunConfig& cfg, std::ostream& out) {
  PurityOptions po;
  po.model = model_options(cfg);
  po.trajectory.propagator = propagator_options(cfg);
  po.resonance.model = po.model;
  po.bracket_halfwidth = cfg.bracket_halfwidth;
  po.n_traj = cfg.n_traj;
  po.t_traj = cfg.t_traj;
  po.window_kappa = cfg.window_kappa;
  po.seed = cfg.seed;
  po.threads = cfg.threads;
  const SweepVariable var = cfg.sweep == "theta" ? SweepVariable::theta : SweepVariable::kappa;
  const auto points = purity_sweep(cfg.params, var, cfg.sweep_grid, po);
  ExperimentReport rep;
  for (const auto& pt : points) {
    if (!pt.ok) {
      ++rep.flagged;
      rep.notes.push_back(cfg.sweep + " " + format_double(pt.value) + ": " + pt.error);
    }
  }
  write_purity_csv(out, var, points);
  return rep;
}

ExperimentReport run_g2tau(const RunConfig& cfg, std::ostream& out) {
  const SystemParams p = at_resonance(cfg);
  CorrelationOptions co;
  co.steady = steady_options(cfg);
  co.n_phase = cfg.corr_phases;
  std::vector<double> taus;
  for (double t : cfg.tau_grid) taus.push_back(t / p.kappa);
  const CorrelationCurve c = g2_tau(p, taus, cfg.order, co);
  resonance_meta(out, cfg, p);
  write_meta(out, "levels", std::to_string(c.levels));
  write_meta(out, "denominator", c.denominator);
  ExperimentReport rep;
  if (!c.warning.empty()) {
    write_meta(out, "warning", c.warning);
    rep.notes.push_back(c.warning);
  }
  write_header(out, {"tau", "tau_kappa", "g", "valid"});
  for (std::size_t i = 0; i < c.tau.size(); ++i) {
    if (!c.valid[i]) ++rep.flagged;
    write_cells(out, {format_double(c.tau[i]), format_double(c.tau[i] * p.kappa), format_double(c.g[i]),
                      c.valid[i] ? "1" : "0"});
  }
  return rep;
}

ExperimentReport run_omega_eff(const RunConfig& cfg, std::ostream& out) {
  RateOptions ro;
  ro.resonance.model = model_options(cfg);
  ro.bracket_halfwidth = cfg.bracket_halfwidth;
  ro.duration = cfg.duration;
  ro.n_phase = cfg.n_phase;
  std::vector<RateComparison> rows(cfg.theta_grid.size());
  std::vector<std::string> errors(rows.size());
  parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
    SystemParams p = cfg.params;
    p.theta = cfg.theta_grid[i];
    rows[i].theta = p.theta;
    try {
      rows[i].analytic = omega_eff_analytic(p);
      rows[i].fit = omega_eff_numeric(p, ro);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      rows[i].fit.omega_num = std::nan("");
      rows[i].fit.quality = std::nan("");
    }
  });
  ExperimentReport rep;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!errors[i].empty()) {
      ++rep.flagged;
      rep.notes.push_back("theta " + format_double(rows[i].theta) + ": " + errors[i]);
    }
  }
  write_rate_csv(out, rows);
  return rep;
}

}  // namespace

const char* version() noexcept { return BUNDLESIM_VERSION; }

ModelOptions model_options(const RunConfig& cfg) {
  ModelOptions m;
  m.levels = cfg.levels;
  m.level_window = cfg.level_window;
  m.jumps.excluded_fraction = cfg.excluded_fraction;
  return m;
}

PropagatorOptions propagator_options(const RunConfig& cfg) {
  PropagatorOptions p;
  p.integrator.rtol = cfg.rtol;
  p.integrator.atol = cfg.atol;
  p.n_phase = cfg.n_phase;
  return p;
}

SteadyStateOptions steady_options(const RunConfig& cfg) {
  SteadyStateOptions s;
  s.evolution.model = model_options(cfg);
  s.evolution.propagator = propagator_options(cfg);
  s.method = cfg.steady_method == "iterate" ? SteadyStateMethod::iterate : SteadyStateMethod::fixed_point;
  s.tolerance = cfg.steady_tolerance;
  s.max_periods = cfg.max_periods;
  return s;
}

void write_run_header(std::ostream& out, const RunConfig& cfg) {
  write_meta(out, "tool", std::string("bundlesim ") + version());
  std::istringstream lines(describe_config(cfg));
  std::string line;
  while (std::getline(lines, line)) out << "# " << line << '\n';
  write_meta(out, "basis", "index = 2 n + s with s = 0 for g and 1 for e");
  switch (cfg.kind) {
    case ExperimentKind::spectrum:
      write_meta(out, "observable", "period-averaged <X^dag X> in the periodic steady state");
      write_meta(out, "steady_state", cfg.steady_method == "iterate"
                                           ? "one-period map iterated until the period-averaged <X^dag X> changes by less than steady_tolerance"
                                           : "fixed point of the one-period map");
      break;
    case ExperimentKind::g2tau:
      write_meta(out, "phase_average", std::to_string(cfg.corr_phases) + " start phases per drive period");
      write_meta(out, "tau_min", "1/kappa");
      break;
    case ExperimentKind::omega_eff:
      write_meta(out, "rate_convention", "period-averaged P_2e ~ A sin^2(omega_numeric t)");
      break;
    case ExperimentKind::purity_sweep:
    case ExperimentKind::trajectories:
      write_meta(out, "clustering", "cavity clicks with consecutive gaps below window_kappa/kappa; qubit clicks excluded");
      write_meta(out, "seeding", "splitmix64(seed, point, trajectory) into mt19937_64");
      break;
    case ExperimentKind::rabi:
      write_meta(out, "initial_state", "|0,g>");
      break;
  }
}

ExperimentReport run_experiment(const RunConfig& cfg, std::ostream& out) {
  validate_config(cfg);
  write_run_header(out, cfg);
  ExperimentReport rep;
  switch (cfg.kind) {
    case ExperimentKind::spectrum: rep = run_spectrum(cfg, out); break;
    case ExperimentKind::rabi: rep = run_rabi(cfg, out); break;
    case ExperimentKind::trajectories: rep = run_trajectories(cfg, out); break;
    case ExperimentKind::purity_sweep: rep = run_purity(cfg, out); break;
    case ExperimentKind::g2tau: rep = run_g2tau(cfg, out); break;
    case ExperimentKind::omega_eff: rep = run_omega_eff(cfg, out); break;
  }
  rep.exit_code = rep.flagged > 0 ? kExitFlagged : kExitOk;
  return rep;
}

}  // namespace bundlesim
