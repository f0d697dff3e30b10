#pragma once

#include "bundlesim/dressed.hpp"

#include <memory>

namespace bundlesim {

struct ModelOptions {
  /// Number of dressed levels evolved. 0 selects an energy window, a negative
  /// value keeps every level of the truncated space.
  int levels = 0;
  /// Window above the drive frequency, in units of omega_r, used when levels == 0.
  double level_window = 3.0;
  JumpOptions jumps;
};

/// The driven, damped system expressed in the energy-sorted eigenbasis of H_R
/// and restricted to its lowest `levels()` states.
///
/// In that frame H(t) = diag(E) + cos(omega_L t) S with S = Omega <psi|sx|psi>,
/// and the jump operators are strictly upper triangular. Copies share the
/// diagonalization, so re-targeting the drive frequency is cheap.
class DrivenModel {
 public:
  static DrivenModel build(const SystemParams& p, const ModelOptions& options = {});

  /// Same Hamiltonian, different drive frequency (the level window is re-evaluated).
  DrivenModel with_drive_frequency(double omega_L) const;
  /// Same Hamiltonian, different drive amplitude and decay rates.
  DrivenModel with_rates(double Omega_d, double kappa, double gamma_q) const;

  const SystemParams& params() const noexcept { return params_; }
  const ModelOptions& options() const noexcept { return options_; }
  const DressedBasis& basis() const noexcept { return shared_->basis; }
  const JumpOperators& jumps() const noexcept { return shared_->jumps; }
  const OperatorMatrix& hamiltonian() const noexcept { return shared_->h_rabi; }

  int levels() const noexcept { return levels_; }
  int dim() const noexcept { return params_.dim(); }
  double period() const;

  /// Lowest `levels()` energies.
  Eigen::VectorXd energies() const { return shared_->basis.energies.head(levels_); }
  /// Omega <psi_m| sx |psi_n> on the retained levels.
  OperatorMatrix drive() const { return params_.Omega_d * shared_->sx_dressed.topLeftCorner(levels_, levels_); }
  OperatorMatrix x() const { return shared_->jumps.X_dressed.topLeftCorner(levels_, levels_); }
  OperatorMatrix d() const { return shared_->jumps.D_dressed.topLeftCorner(levels_, levels_); }
  /// kappa X^dag X + gamma D^dag D on the retained levels.
  OperatorMatrix decay() const;

  /// Retained eigenvectors as columns (dim x levels).
  auto projector() const { return shared_->basis.states.leftCols(levels_); }

  StateVector ket_to_frame(const StateVector& bare) const { return projector().adjoint() * bare; }
  StateVector ket_to_bare(const StateVector& v) const { return projector() * v; }
  OperatorMatrix op_to_frame(const OperatorMatrix& bare) const {
    return projector().adjoint() * bare * projector();
  }
  OperatorMatrix op_to_bare(const OperatorMatrix& m) const {
    return projector() * m * projector().adjoint();
  }

  /// Dressed ground state in the frame (unit vector e_0).
  StateVector ground_state() const;

  /// Bare-basis populations |<n,s|psi>|^2 of a frame ket (not renormalized).
  Eigen::VectorXd bare_populations(const StateVector& v) const;
  /// Diagonal of a frame density matrix in the bare basis.
  Eigen::VectorXd bare_populations(const OperatorMatrix& rho) const;

 private:
  struct Shared {
    OperatorMatrix h_rabi;
    DressedBasis basis;
    JumpOperators jumps;
    OperatorMatrix sx_dressed;
  };

  DrivenModel() = default;
  void select_levels();

  SystemParams params_;
  ModelOptions options_;
  std::shared_ptr<const Shared> shared_;
  int levels_ = 0;
};

}  // namespace bundlesim
