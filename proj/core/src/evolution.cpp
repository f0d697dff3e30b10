#include "bundlesim/evolution.hpp"

#include "bundlesim/csv.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

namespace bundlesim {

namespace {

constexpr Complex kI{0.0, 1.0};

double expectation(const StateVector& bare, const OperatorMatrix& op) {
  return bare.dot(op * bare).real();
}

double expectation(const OperatorMatrix& rho, const OperatorMatrix& op) {
  return (rho * op).trace().real();
}

OperatorMatrix dissipator(const OperatorMatrix& c, const OperatorMatrix& rho) {
  const OperatorMatrix cd = c.adjoint();
  const OperatorMatrix cdc = cd * c;
  return c * rho * cd - 0.5 * (rho * cdc + cdc * rho);
}

void start_result(EvolutionResult& r, const std::vector<double>& times, int dim,
                  const std::vector<Observable>& observables) {
  r.times = times;
  r.populations.resize(static_cast<Eigen::Index>(times.size()), dim);
  r.observables.resize(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(observables.size()));
  for (const auto& o : observables) {
    if (o.op.rows() != dim || o.op.cols() != dim) throw ParameterError(o.name, "observable dimension mismatch");
    r.observable_names.push_back(o.name);
  }
}

}  // namespace

std::vector<double> output_grid(double t_end, double dt_out) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ParameterError("t_end", "must be finite and non-negative");
  if (!(dt_out > 0.0) || !std::isfinite(dt_out)) throw ParameterError("dt_out", "must be positive");
  std::vector<double> grid;
  const long n = static_cast<long>(std::floor(t_end / dt_out + 1e-9));
  grid.reserve(static_cast<std::size_t>(n) + 2);
  for (long i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) * dt_out);
  if (t_end - grid.back() > 1e-9 * dt_out) grid.push_back(t_end);
  return grid;
}

EvolutionOptions closed_system_defaults() {
  EvolutionOptions o;
  o.model.levels = -1;
  return o;
}

EvolutionResult schrodinger_evolve(const SystemParams& p, const StateVector& psi0, double t_end,
                                   double dt_out, const std::vector<Observable>& observables,
                                   EvolutionOptions options) {
  p.validate();
  if (psi0.size() != p.dim()) throw ParameterError("psi0", "dimension mismatch");
  if (std::abs(psi0.squaredNorm() - 1.0) > 1e-8) throw ParameterError("psi0", "state is not normalized");
  const auto grid = output_grid(t_end, dt_out);

  const DrivenModel model = DrivenModel::build(p, options.model);
  EvolutionResult r;
  r.levels = model.levels();
  start_result(r, grid, p.dim(), observables);

  StateVector v = model.ket_to_frame(psi0);
  r.discarded_weight = std::max(0.0, 1.0 - v.squaredNorm());
  if (r.discarded_weight > 0.0) v /= v.norm();
  const StateVector v0 = v;

  const bool driven = p.Omega_d != 0.0;
  const Eigen::VectorXd e = model.energies();
  std::optional<KetPropagator> prop;
  MapPowers<Eigen::MatrixXcd> powers;
  if (driven) {
    prop.emplace(model, false, options.propagator);
    if (prop->has_maps()) powers = MapPowers<Eigen::MatrixXcd>(prop->period_map());
  }

  // With maps, outputs are reached from the last period boundary so that no
  // step integrates across a boundary.
  StateVector at_boundary = v;
  long boundary = 0;
  double t_prev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    if (driven && prop->has_maps()) {
      const double period = prop->period();
      const long whole = static_cast<long>(std::floor(t / period + 1e-12));
      if (whole > boundary) {
        at_boundary = powers.apply(at_boundary, whole - boundary);
        boundary = whole;
      }
      v = at_boundary;
      prop->advance(v, static_cast<double>(boundary) * period, std::max(t, static_cast<double>(boundary) * period));
    } else if (driven) {
      prop->advance(v, t_prev, t);
    } else {
      for (Eigen::Index m = 0; m < v.size(); ++m) v(m) = v0(m) * std::polar(1.0, -e(m) * t);
    }
    t_prev = t;
    const StateVector bare = model.ket_to_bare(v);
    r.max_norm_drift = std::max(r.max_norm_drift, std::abs(v.squaredNorm() - 1.0));
    r.populations.row(static_cast<Eigen::Index>(i)) = bare.cwiseAbs2().transpose();
    for (std::size_t k = 0; k < observables.size(); ++k) {
      r.observables(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = expectation(bare, observables[k].op);
    }
  }
  r.final_state = model.ket_to_bare(v);
  return r;
}

OperatorMatrix lindblad_rhs(const OperatorMatrix& rho, const OperatorMatrix& h_t, const JumpOperators& jumps,
                            double kappa, double gamma_q) {
  OperatorMatrix out = kI * (rho * h_t - h_t * rho);
  if (kappa != 0.0) out += kappa * dissipator(jumps.X, rho);
  if (gamma_q != 0.0) out += gamma_q * dissipator(jumps.D, rho);
  return out;
}

EvolutionResult lindblad_evolve(const SystemParams& p, const OperatorMatrix& rho0, double t_end, double dt_out,
                                const std::vector<Observable>& observables, const EvolutionOptions& options) {
  p.validate();
  if (rho0.rows() != p.dim() || rho0.cols() != p.dim()) throw ParameterError("rho0", "dimension mismatch");
  if (hermiticity_error(rho0) > 1e-10) throw ParameterError("rho0", "not Hermitian");
  if (std::abs(rho0.trace().real() - 1.0) > options.trace_tol) throw ParameterError("rho0", "trace differs from 1");
  const auto grid = output_grid(t_end, dt_out);

  const DrivenModel model = DrivenModel::build(p, options.model);
  const int k = model.levels();
  EvolutionResult r;
  r.levels = k;
  start_result(r, grid, p.dim(), observables);

  OperatorMatrix frame = model.op_to_frame(rho0);
  frame = 0.5 * (frame + frame.adjoint());
  const double kept = frame.trace().real();
  r.discarded_weight = std::max(0.0, 1.0 - kept);
  frame /= kept;

  // Maps pay off once the run spans many more periods than there are
  // coordinates to propagate.
  PropagatorOptions po = options.propagator;
  const double periods = t_end / model.period();
  po.build_maps = po.build_maps && periods > 2.0 * k * k && p.Omega_d != 0.0;
  const DensityPropagator prop(model, po);
  MapPowers<Eigen::MatrixXd> powers;
  if (prop.has_maps()) powers = MapPowers<Eigen::MatrixXd>(prop.period_map());

  std::vector<OperatorMatrix> frame_obs;
  for (const auto& o : observables) frame_obs.push_back(model.op_to_frame(o.op));

  Eigen::VectorXd coords = hermitian_coords(frame);
  Eigen::VectorXd at_boundary = coords;
  long boundary = 0;
  double t_prev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    if (prop.has_maps()) {
      const double period = prop.period();
      const long whole = static_cast<long>(std::floor(t / period + 1e-12));
      if (whole > boundary) {
        at_boundary = powers.apply(std::move(at_boundary), whole - boundary);
        boundary = whole;
      }
      const double t_b = static_cast<double>(boundary) * period;
      coords = prop.advance(at_boundary, t_b, std::max(t, t_b));
    } else {
      coords = prop.advance(coords, t_prev, t);
    }
    t_prev = t;
    const OperatorMatrix rho = from_hermitian_coords(coords, k);
    const double trace_err = std::abs(rho.trace().real() - 1.0);
    const OperatorMatrix bare = model.op_to_bare(rho);
    const double herm = hermiticity_error(bare);
    const double min_eig = Eigen::SelfAdjointEigenSolver<OperatorMatrix>(rho, Eigen::EigenvaluesOnly).eigenvalues()(0);
    r.max_trace_error = std::max(r.max_trace_error, trace_err);
    r.max_hermiticity_error = std::max(r.max_hermiticity_error, herm);
    r.min_eigenvalue = std::min(r.min_eigenvalue, min_eig);
    if (options.strict) {
      if (trace_err > options.trace_tol) throw InvariantViolation("trace drift " + format_double(trace_err), t);
      if (min_eig < -options.positivity_tol) {
        throw InvariantViolation("negative eigenvalue " + format_double(min_eig), t);
      }
    }
    const auto row = static_cast<Eigen::Index>(i);
    r.populations.row(row) = model.bare_populations(rho).transpose();
    for (std::size_t j = 0; j < frame_obs.size(); ++j) {
      r.observables(row, static_cast<Eigen::Index>(j)) = expectation(rho, frame_obs[j]);
    }
    if (i + 1 == grid.size()) r.final_density = bare;
  }
  return r;
}

SteadyState periodic_steady_state(const SystemParams& p, const SteadyStateOptions& options) {
  p.validate();
  const DrivenModel model = DrivenModel::build(p, options.evolution.model);
  PropagatorOptions po = options.evolution.propagator;
  po.build_maps = p.Omega_d != 0.0;
  const DensityPropagator prop(model, po);
  return periodic_steady_state(model, prop, options);
}

SteadyState periodic_steady_state(const DrivenModel& model, const DensityPropagator& prop,
                                  const SteadyStateOptions& options) {
  const SystemParams& p = model.params();
  if (p.kappa <= 0.0 && p.gamma_q <= 0.0) throw ParameterError("kappa", "steady state needs kappa > 0 or gamma > 0");
  const int k = model.levels();
  const Eigen::Index kk = static_cast<Eigen::Index>(k) * k;
  const OperatorMatrix xx = model.x().adjoint() * model.x();
  const Eigen::VectorXd xx_coords = hermitian_coords(xx);

  SteadyState s;
  s.levels = k;
  s.n_phase = prop.n_phase();
  s.method = options.method == SteadyStateMethod::fixed_point ? "fixed_point" : "iterate";

  auto average = [&](const Eigen::VectorXd& r0) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(kk);
    for (int j = 0; j < prop.n_phase(); ++j) acc += prop.phase_map(j) * r0;
    return Eigen::VectorXd(acc / prop.n_phase());
  };

  const Eigen::VectorXd ground = hermitian_coords(OperatorMatrix(model.ground_state() * model.ground_state().adjoint()));
  if (p.Omega_d == 0.0) {
    s.coords0 = ground;
    s.rho_bar_frame = from_hermitian_coords(ground, k);
  } else if (!prop.has_maps()) {
    throw ParameterError("build_maps", "steady state needs the period maps");
  } else if (options.method == SteadyStateMethod::fixed_point) {
    Eigen::MatrixXd a = prop.period_map() - Eigen::MatrixXd::Identity(kk, kk);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(kk);
    a.row(0).setZero();
    for (int m = 0; m < k; ++m) a(0, static_cast<Eigen::Index>(m) * k + m) = 1.0;
    b(0) = 1.0;
    Eigen::VectorXd r = a.partialPivLu().solve(b);
    s.residual = (prop.period_map() * r - r).norm();
    s.coords0 = r;
    s.rho_bar_frame = from_hermitian_coords(average(r), k);
  } else {
    Eigen::VectorXd r = ground;
    double prev = average(r).dot(xx_coords);
    bool converged = false;
    for (long n = 1; n <= options.max_periods; ++n) {
      r = prop.period_map() * r;
      const double cur = average(r).dot(xx_coords);
      s.residual = std::abs(cur - prev) / std::max(std::abs(cur), 1e-300);
      s.periods = n;
      prev = cur;
      if (s.residual < options.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw ConvergenceError("period-averaged <X^dag X> still changing by " + format_double(s.residual) +
                             " after " + std::to_string(options.max_periods) + " periods");
    }
    s.coords0 = r;
    s.rho_bar_frame = from_hermitian_coords(average(r), k);
  }
  s.xx_mean = (s.rho_bar_frame * xx).trace().real();
  s.rho_bar = model.op_to_bare(s.rho_bar_frame);
  s.min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<OperatorMatrix>(s.rho_bar_frame, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return s;
}

void write_evolution_csv(std::ostream& out, const EvolutionResult& r, int max_photon) {
  const int dim = static_cast<int>(r.populations.cols());
  const int cols = max_photon < 0 ? dim : std::min(dim, basis_dim(max_photon));
  std::vector<std::string> header{"t"};
  for (int i = 0; i < cols; ++i) header.push_back("P_" + basis_label(i));
  for (const auto& n : r.observable_names) header.push_back(n);
  write_header(out, header);
  std::vector<double> row;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    row.clear();
    row.push_back(r.times[i]);
    const auto ri = static_cast<Eigen::Index>(i);
    for (int c = 0; c < cols; ++c) row.push_back(r.populations(ri, c));
    for (Eigen::Index c = 0; c < r.observables.cols(); ++c) row.push_back(r.observables(ri, c));
    write_row(out, row);
  }
}

}  // namespace bundlesim
