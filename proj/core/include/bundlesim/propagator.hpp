#pragma once

#include "bundlesim/integrator.hpp"
#include "bundlesim/model.hpp"

#include <vector>

namespace bundlesim {

struct PropagatorOptions {
  IntegratorOptions integrator;
  /// Step ceiling as a fraction of the drive period.
  int steps_per_period_min = 50;
  /// Phases per period at which partial maps are stored.
  int n_phase = 16;
  /// Build the one-period and partial maps at construction. Without them
  /// advance() falls back to direct integration.
  bool build_maps = true;
};

/// Coordinates of a Hermitian K x K matrix in the orthonormal basis
/// {E_mm, (E_mn + E_nm)/sqrt2, i(E_mn - E_nm)/sqrt2}. Tr(A B) equals the dot
/// product of the coordinate vectors.
Eigen::VectorXd hermitian_coords(const OperatorMatrix& rho);
OperatorMatrix from_hermitian_coords(const Eigen::VectorXd& r, int levels);

/// Powers M^(2^k) of a square map, for fast M^q applications.
template <typename Matrix>
class MapPowers {
 public:
  MapPowers() = default;
  explicit MapPowers(const Matrix& map) { powers_.push_back(map); }

  /// Returns M^q v.
  template <typename Vector>
  Vector apply(Vector v, long q) {
    int bit = 0;
    while (q > 0) {
      while (static_cast<int>(powers_.size()) <= bit) {
        const Matrix& last = powers_.back();
        powers_.push_back(last * last);
      }
      if (q & 1L) v = powers_[bit] * v;
      q >>= 1;
      ++bit;
    }
    return v;
  }

 private:
  std::vector<Matrix> powers_;
};

/// Ket dynamics under H(t) = diag(E) + cos(omega_L t) S, optionally with the
/// non-Hermitian decay term -(i/2)(kappa X^dag X + gamma D^dag D).
///
/// Integration runs in the interaction picture of diag(E), restarted at each
/// segment, with adaptive Dormand-Prince steps capped at period/50.
class KetPropagator {
 public:
  KetPropagator(const DrivenModel& model, bool with_decay, const PropagatorOptions& options = {});

  /// Direct integration of the columns of `kets` from t0 to t1.
  void propagate(Eigen::MatrixXcd& kets, double t0, double t1) const;

  /// One-period map U(T, 0) and partial maps U(kT/N, 0), k = 0..N.
  const Eigen::MatrixXcd& period_map() const { return phase_maps_.at(options_.n_phase); }
  const Eigen::MatrixXcd& phase_map(int k) const { return phase_maps_.at(k); }
  int n_phase() const noexcept { return options_.n_phase; }
  double period() const noexcept { return period_; }
  int levels() const noexcept { return static_cast<int>(energies_.size()); }
  bool has_maps() const noexcept { return !phase_maps_.empty(); }

  /// psi(t1) from psi(t0), using the period map for whole periods.
  void advance(StateVector& psi, double t0, double t1, MapPowers<Eigen::MatrixXcd>* powers = nullptr) const;

  long rhs_evaluations() const noexcept { return rhs_evals_; }

 private:
  void integrate_segment(Eigen::MatrixXcd& y, double t0, double t1, double& hint) const;

  Eigen::VectorXd energies_;
  OperatorMatrix drive_;
  OperatorMatrix decay_half_;  // Gamma / 2
  bool with_decay_;
  double omega_L_;
  double period_;
  PropagatorOptions options_;
  std::vector<Eigen::MatrixXcd> phase_maps_;
  mutable long rhs_evals_ = 0;
};

/// Lindblad dynamics d rho/dt = -i[H(t), rho] + kappa L[X] rho + gamma L[D] rho
/// in the retained dressed frame. Hermiticity is preserved exactly by the
/// right-hand side, so the one-period map is real in Hermitian coordinates.
class DensityPropagator {
 public:
  DensityPropagator(const DrivenModel& model, const PropagatorOptions& options = {});

  /// Direct integration of a batch of Hermitian matrices stored side by side
  /// (K x K*m).
  void propagate(Eigen::MatrixXcd& batch, double t0, double t1) const;

  /// Right-hand side at time t for a batch (lab frame); used in tests.
  void rhs(double t, const Eigen::MatrixXcd& batch, Eigen::MatrixXcd& out) const;

  const Eigen::MatrixXd& period_map() const { return phase_maps_.at(options_.n_phase); }
  const Eigen::MatrixXd& phase_map(int k) const { return phase_maps_.at(k); }
  int n_phase() const noexcept { return options_.n_phase; }
  double period() const noexcept { return period_; }
  int levels() const noexcept { return static_cast<int>(energies_.size()); }
  bool has_maps() const noexcept { return !phase_maps_.empty(); }

  /// rho(t1) from rho(t0) in Hermitian coordinates.
  Eigen::VectorXd advance(const Eigen::VectorXd& r, double t0, double t1,
                          MapPowers<Eigen::MatrixXd>* powers = nullptr) const;

 private:
  void rhs_interaction(double s, double t_abs, const Eigen::MatrixXcd& b, Eigen::MatrixXcd& out) const;
  void integrate_segment(Eigen::MatrixXcd& y, double t0, double t1, double& hint) const;

  Eigen::VectorXd energies_;
  OperatorMatrix drive_;
  OperatorMatrix decay_half_;
  OperatorMatrix x_;
  OperatorMatrix d_;
  double kappa_;
  double gamma_;
  double omega_L_;
  double period_;
  PropagatorOptions options_;
  std::vector<Eigen::MatrixXd> phase_maps_;
};

}  // namespace bundlesim
