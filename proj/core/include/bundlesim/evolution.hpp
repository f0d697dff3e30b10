#pragma once

#include "bundlesim/propagator.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace bundlesim {

/// Named bare-basis observable recorded along an evolution.
struct Observable {
  std::string name;
  OperatorMatrix op;
};

struct EvolutionOptions {
  ModelOptions model;
  PropagatorOptions propagator;
  /// Lindblad runs: report a positivity violation below this eigenvalue.
  double positivity_tol = 1e-8;
  double trace_tol = 1e-8;
  /// Rethrow invariant violations instead of only recording them.
  bool strict = true;
};

struct EvolutionResult {
  std::vector<double> times;
  Eigen::MatrixXd populations;        ///< rows: times, cols: bare basis index 2n+s
  std::vector<std::string> observable_names;
  Eigen::MatrixXd observables;        ///< rows: times, cols: observables
  StateVector final_state;            ///< bare basis (closed runs)
  OperatorMatrix final_density;       ///< bare basis (Lindblad runs)
  double max_norm_drift = 0.0;        ///< closed runs: max | <psi|psi> - 1 |
  double max_trace_error = 0.0;       ///< Lindblad runs: max |Tr rho - 1|
  double min_eigenvalue = 1.0;        ///< Lindblad runs: smallest eigenvalue seen
  double max_hermiticity_error = 0.0;
  /// Weight of the initial state outside the evolved levels (renormalized away).
  double discarded_weight = 0.0;
  int levels = 0;

  double population(std::size_t t_index, int n, Qubit s) const {
    return populations(static_cast<Eigen::Index>(t_index), basis_index(n, s));
  }
  /// Column of P_{n,s}(t).
  Eigen::VectorXd population_series(int n, Qubit s) const { return populations.col(basis_index(n, s)); }
};

/// Raised when a density matrix leaves the physical set beyond tolerance.
class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(const std::string& what, double time)
      : std::runtime_error(what + " at t = " + std::to_string(time)), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Output grid 0, dt, 2 dt, ..., ending exactly at t_end.
std::vector<double> output_grid(double t_end, double dt_out);

/// Defaults for closed-system runs (all levels).
EvolutionOptions closed_system_defaults();

/// i d|psi>/dt = H(t)|psi> with the full driven Hamiltonian. By default every
/// level of the truncated space is kept.
EvolutionResult schrodinger_evolve(const SystemParams& p, const StateVector& psi0, double t_end,
                                   double dt_out, const std::vector<Observable>& observables = {},
                                   EvolutionOptions options = closed_system_defaults());

/// i[rho, H] + kappa L[X] rho + gamma L[D] rho with
/// L[C] rho = (2 C rho C^dag - rho C^dag C - C^dag C rho)/2, all in the bare basis.
OperatorMatrix lindblad_rhs(const OperatorMatrix& rho, const OperatorMatrix& h_t,
                            const JumpOperators& jumps, double kappa, double gamma_q);

/// Time-dependent master equation from a bare-basis rho0.
EvolutionResult lindblad_evolve(const SystemParams& p, const OperatorMatrix& rho0, double t_end,
                                double dt_out, const std::vector<Observable>& observables = {},
                                const EvolutionOptions& options = {});

enum class SteadyStateMethod {
  fixed_point,  ///< solve M r = r for the one-period map
  iterate,      ///< apply the map from the dressed ground state until converged
};

struct SteadyStateOptions {
  EvolutionOptions evolution;
  SteadyStateMethod method = SteadyStateMethod::fixed_point;
  /// Period-to-period relative change of the period-averaged <X^dag X>.
  double tolerance = 1e-6;
  long max_periods = 2'000'000;
};

struct SteadyState {
  OperatorMatrix rho_bar;        ///< period-averaged, bare basis
  OperatorMatrix rho_bar_frame;  ///< period-averaged, retained dressed frame
  Eigen::VectorXd coords0;       ///< Hermitian coordinates of rho(t = 0 mod T)
  double xx_mean = 0.0;          ///< period-averaged <X^dag X>
  double residual = 0.0;         ///< |M r - r| (fixed point) or last relative change
  long periods = 0;              ///< periods iterated (iterate method)
  int n_phase = 0;
  int levels = 0;
  double min_eigenvalue = 0.0;
  std::string method;
};

/// Raised when the period-to-period change stays above tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Periodic steady state of the driven master equation, averaged over one
/// drive period with n_phase samples. Requires kappa > 0 or gamma > 0.
SteadyState periodic_steady_state(const SystemParams& p, const SteadyStateOptions& options = {});

/// Same, reusing a model and a prepared density propagator.
SteadyState periodic_steady_state(const DrivenModel& model, const DensityPropagator& prop,
                                  const SteadyStateOptions& options = {});

/// CSV: header row t, P_0g, P_0e, ..., observables; '#' metadata lines come from the caller.
void write_evolution_csv(std::ostream& out, const EvolutionResult& r, int max_photon = -1);

}  // namespace bundlesim
