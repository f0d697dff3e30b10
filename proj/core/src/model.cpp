#include "bundlesim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bundlesim {

DrivenModel DrivenModel::build(const SystemParams& p, const ModelOptions& options) {
  p.validate();
  auto shared = std::make_shared<Shared>();
  shared->h_rabi = build_rabi_hamiltonian(p);
  shared->basis = diagonalize(shared->h_rabi, build_parity_operator(p.n_max),
                              options.jumps.degeneracy_tol);
  const auto cav = build_cavity_ops(p.n_max);
  const auto q = build_qubit_ops(p.n_max);
  shared->jumps = build_jump_operators(shared->basis, cav.a, q.sigma, options.jumps);
  shared->sx_dressed = shared->basis.states.adjoint() * q.sigma_x * shared->basis.states;

  DrivenModel m;
  m.params_ = p;
  m.options_ = options;
  m.shared_ = std::move(shared);
  m.select_levels();
  return m;
}

DrivenModel DrivenModel::with_drive_frequency(double omega_L) const {
  DrivenModel m = *this;
  m.params_.omega_L = omega_L;
  m.params_.validate();
  m.select_levels();
  return m;
}

DrivenModel DrivenModel::with_rates(double Omega_d, double kappa, double gamma_q) const {
  DrivenModel m = *this;
  m.params_.Omega_d = Omega_d;
  m.params_.kappa = kappa;
  m.params_.gamma_q = gamma_q;
  m.params_.validate();
  return m;
}

void DrivenModel::select_levels() {
  const auto& e = shared_->basis.energies;
  const int dim = static_cast<int>(e.size());
  if (options_.levels < 0) {
    levels_ = dim;
  } else if (options_.levels > 0) {
    levels_ = std::min(options_.levels, dim);
  } else {
    const double cutoff = e(0) + params_.omega_L + options_.level_window * params_.omega_r;
    levels_ = static_cast<int>(std::upper_bound(e.data(), e.data() + dim, cutoff) - e.data());
    levels_ = std::clamp(levels_, std::min(dim, 4), dim);
  }
}

double DrivenModel::period() const {
  // Without a drive any period works; pick the cavity one.
  if (params_.Omega_d == 0.0 && params_.omega_L <= 0.0) return 2.0 * std::numbers::pi / params_.omega_r;
  if (params_.omega_L <= 0.0) throw ParameterError("omega_L", "drive frequency must be positive");
  return 2.0 * std::numbers::pi / params_.omega_L;
}

OperatorMatrix DrivenModel::decay() const {
  const OperatorMatrix xk = x();
  const OperatorMatrix dk = d();
  OperatorMatrix g = params_.kappa * (xk.adjoint() * xk) + params_.gamma_q * (dk.adjoint() * dk);
  return 0.5 * (g + g.adjoint());
}

StateVector DrivenModel::ground_state() const {
  StateVector v = StateVector::Zero(levels_);
  v(0) = 1.0;
  return v;
}

Eigen::VectorXd DrivenModel::bare_populations(const StateVector& v) const {
  return (projector() * v).cwiseAbs2();
}

Eigen::VectorXd DrivenModel::bare_populations(const OperatorMatrix& rho) const {
  const auto p = projector();
  const OperatorMatrix tmp = p * rho;
  Eigen::VectorXd pops(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    pops(i) = (tmp.row(i) * p.row(i).adjoint())(0, 0).real();
  }
  return pops;
}

}  // namespace bundlesim
