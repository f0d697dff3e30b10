#include "bundlesim/correlations.hpp"

#include "bundlesim/csv.hpp"
#include "bundlesim/parallel.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace bundlesim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

OperatorMatrix power(const OperatorMatrix& x, int n) {
  OperatorMatrix r = OperatorMatrix::Identity(x.rows(), x.cols());
  for (int i = 0; i < n; ++i) r = r * x;
  return r;
}

}  // namespace

double g_n_equal_time(const OperatorMatrix& rho, const OperatorMatrix& x, int n) {
  if (n < 2) throw ParameterError("n", "correlation order must be at least 2");
  if (rho.rows() != x.rows() || rho.cols() != x.cols()) throw ParameterError("rho", "dimension mismatch");
  const Complex den = (rho * x.adjoint() * x).trace();
  if (std::abs(den) < kDenominatorFloor) {
    throw DenominatorUnderflow("<X^dag X> = " + format_double(std::abs(den)) + " is below the floor");
  }
  const OperatorMatrix xn = power(x, n);
  const Complex num = (rho * xn.adjoint() * xn).trace();
  return num.real() / std::pow(den.real(), n);
}

double g_n_equal_time(const OperatorMatrix& rho_bar, const JumpOperators& jumps, int n) {
  return g_n_equal_time(rho_bar, jumps.X, n);
}

SpectrumResult excitation_spectrum(const SystemParams& p, const std::vector<double>& dq_grid,
                                   const SpectrumOptions& options) {
  p.validate();
  if (dq_grid.empty()) throw ParameterError("dq_grid", "grid is empty");
  for (std::size_t i = 1; i < dq_grid.size(); ++i) {
    if (!(dq_grid[i] > dq_grid[i - 1])) throw ParameterError("dq_grid", "grid must be strictly increasing");
  }
  if (p.kappa <= 0.0 || p.gamma_q <= 0.0) throw ParameterError("kappa", "spectrum needs kappa > 0 and gamma > 0");

  const DrivenModel base = DrivenModel::build(p, options.steady.evolution.model);
  const std::size_t n = dq_grid.size();
  SpectrumResult r;
  r.detunings = dq_grid;
  r.xx.assign(n, kNaN);
  r.g2.assign(n, kNaN);
  r.g3.assign(n, kNaN);
  r.g4.assign(n, kNaN);
  r.ok.assign(n, false);
  r.errors.assign(n, "");
  r.n_phase = options.steady.evolution.propagator.n_phase;
  std::vector<int> levels(n, 0);

  parallel_for(n, options.threads, [&](std::size_t i) {
    try {
      const DrivenModel model = base.with_drive_frequency(p.omega_q + dq_grid[i] * p.omega_r);
      levels[i] = model.levels();
      const DensityPropagator prop(model, options.steady.evolution.propagator);
      const SteadyState s = periodic_steady_state(model, prop, options.steady);
      r.xx[i] = s.xx_mean;
      r.ok[i] = true;
      if (options.correlations) {
        const OperatorMatrix x = model.x();
        try {
          r.g2[i] = g_n_equal_time(s.rho_bar_frame, x, 2);
          r.g3[i] = g_n_equal_time(s.rho_bar_frame, x, 3);
          r.g4[i] = g_n_equal_time(s.rho_bar_frame, x, 4);
        } catch (const DenominatorUnderflow& e) {
          r.errors[i] = e.what();
        }
      }
    } catch (const std::exception& e) {
      r.errors[i] = e.what();
    }
  });
  r.levels = *std::max_element(levels.begin(), levels.end());
  return r;
}

CorrelationCurve g2_tau(const DrivenModel& model, const DensityPropagator& prop, const SteadyState& steady,
                        const std::vector<double>& tau_grid, int order, int n_phase) {
  const SystemParams& p = model.params();
  if (order < 1) throw ParameterError("order", "must be at least 1");
  if (p.kappa <= 0.0) throw ParameterError("kappa", "delays are measured in units of 1/kappa");
  if (n_phase < 1 || prop.n_phase() % n_phase != 0) {
    throw ParameterError("n_phase", "must divide the propagator phase count " + std::to_string(prop.n_phase()));
  }
  if (tau_grid.empty()) throw ParameterError("tau_grid", "grid is empty");
  const double tau_min = 1.0 / p.kappa;
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    if (!std::isfinite(tau_grid[i]) || tau_grid[i] < tau_min * (1.0 - 1e-12)) {
      throw ParameterError("tau_grid", "delays must be at least 1/kappa = " + format_double(tau_min));
    }
    if (i > 0 && !(tau_grid[i] > tau_grid[i - 1])) throw ParameterError("tau_grid", "grid must be strictly increasing");
  }

  const int k = model.levels();
  const OperatorMatrix xs = power(model.x(), order);
  const OperatorMatrix ns = xs.adjoint() * xs;
  const Eigen::VectorXd ns_coords = hermitian_coords(ns);
  const int stride = prop.n_phase() / n_phase;
  const double period = prop.period();

  CorrelationCurve c;
  c.order = order;
  c.tau = tau_grid;
  c.tau_min = tau_min;
  c.n_phase = n_phase;
  c.levels = k;
  c.g.assign(tau_grid.size(), kNaN);
  c.valid.assign(tau_grid.size(), false);

  MapPowers<Eigen::MatrixXd> powers(prop.period_map());
  std::vector<double> numerator(tau_grid.size(), 0.0);
  double weight = 0.0;
  for (int j = 0; j < n_phase; ++j) {
    const int phase = j * stride;
    const double t0 = period * phase / prop.n_phase();
    const OperatorMatrix rho = from_hermitian_coords(prop.phase_map(phase) * steady.coords0, k);
    OperatorMatrix cond = xs * rho * xs.adjoint();
    cond = 0.5 * (cond + cond.adjoint());
    weight += cond.trace().real();
    Eigen::VectorXd r = hermitian_coords(cond);
    double t = t0;
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
      r = prop.advance(r, t, t0 + tau_grid[i], &powers);
      t = t0 + tau_grid[i];
      numerator[i] += r.dot(ns_coords);
    }
  }
  c.denominator = weight / n_phase;
  if (c.denominator < kDenominatorFloor) {
    c.warning = "denominator underflow";
    return c;
  }
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    c.g[i] = numerator[i] / n_phase / (c.denominator * c.denominator);
    c.valid[i] = true;
  }
  return c;
}

CorrelationCurve g2_tau(const SystemParams& p, const std::vector<double>& tau_grid, int order,
                        const CorrelationOptions& options) {
  p.validate();
  const DrivenModel model = DrivenModel::build(p, options.steady.evolution.model);
  if (p.Omega_d == 0.0) {
    // Undriven: the steady state is the dressed ground state, which X annihilates.
    CorrelationCurve c;
    c.order = order;
    c.tau = tau_grid;
    c.tau_min = p.kappa > 0.0 ? 1.0 / p.kappa : 0.0;
    c.n_phase = options.n_phase;
    c.levels = model.levels();
    c.g.assign(tau_grid.size(), kNaN);
    c.valid.assign(tau_grid.size(), false);
    c.warning = "denominator underflow";
    return c;
  }
  const DensityPropagator prop(model, options.steady.evolution.propagator);
  const SteadyState s = periodic_steady_state(model, prop, options.steady);
  return g2_tau(model, prop, s, tau_grid, order, options.n_phase);
}

void write_spectrum_csv(std::ostream& out, const SpectrumResult& r) {
  write_header(out, {"detuning", "xx", "g2", "g3", "g4", "ok", "error"});
  for (std::size_t i = 0; i < r.detunings.size(); ++i) {
    std::string err = r.errors[i];
    for (char& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    write_cells(out, {format_double(r.detunings[i]), format_double(r.xx[i]), format_double(r.g2[i]),
                      format_double(r.g3[i]), format_double(r.g4[i]), r.ok[i] ? "1" : "0", err});
  }
}

void write_curve_csv(std::ostream& out, const CorrelationCurve& c) {
  const bool with_error = !c.error.empty();
  std::vector<std::string> header{"tau", "g", "valid"};
  if (with_error) header.push_back("error");
  write_header(out, header);
  for (std::size_t i = 0; i < c.tau.size(); ++i) {
    std::vector<std::string> cells{format_double(c.tau[i]), format_double(c.g[i]), c.valid[i] ? "1" : "0"};
    if (with_error) cells.push_back(format_double(c.error[i]));
    write_cells(out, cells);
  }
}

}  // namespace bundlesim
