#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bundlesim {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

/// Raised when a parameter set or argument violates a documented precondition.
class ParameterError : public std::invalid_argument {
 public:
  ParameterError(const std::string& key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(key) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Model constants for the driven qubit-cavity system.
///
/// All frequencies and rates are angular and share one unit; the usual
/// convention is omega_r = 1.
struct SystemParams {
  double omega_r = 1.0;
  double omega_q = 5.0;
  double lambda_c = 0.2;
  double theta = std::numbers::pi / 2;
  double Omega_d = 0.06;
  double omega_L = 7.0;
  double kappa = 2e-3;
  double gamma_q = 1e-4;
  int n_max = 20;

  /// Qubit detuning Delta_q = omega_L - omega_q.
  double detuning() const noexcept { return omega_L - omega_q; }

  /// Hilbert space dimension 2 (n_max + 1).
  int dim() const noexcept { return 2 * (n_max + 1); }

  /// Throws ParameterError naming the first offending field.
  void validate() const;
};

enum class Qubit : int { g = 0, e = 1 };

// Basis ordering: index = 2 n + s with s = 0 for |g>, 1 for |e>.
// Everything outside this header goes through these accessors.
constexpr int basis_index(int n, Qubit s) noexcept { return 2 * n + static_cast<int>(s); }
constexpr int photon_number(int index) noexcept { return index / 2; }
constexpr Qubit qubit_state(int index) noexcept { return index % 2 == 0 ? Qubit::g : Qubit::e; }
constexpr int basis_dim(int n_max) noexcept { return 2 * (n_max + 1); }

/// Human-readable label such as "2e" or "0g".
std::string basis_label(int index);

struct CavityOps {
  OperatorMatrix a;
  OperatorMatrix a_dag;
};

struct QubitOps {
  OperatorMatrix sigma;    ///< |g><e| on the qubit, identity on the cavity
  OperatorMatrix sigma_x;
  OperatorMatrix sigma_z;  ///< |e><e| - |g><g|
};

CavityOps build_cavity_ops(int n_max);
QubitOps build_qubit_ops(int n_max);

/// H_R = (omega_q/2) sz + omega_r a^dag a + lambda (cos t sz - sin t sx)(a^dag + a).
OperatorMatrix build_rabi_hamiltonian(const SystemParams& p);

/// H(t) = H_R + Omega cos(omega_L t) sx.
OperatorMatrix build_full_hamiltonian(const SystemParams& p, double t);

/// Pi = exp{i pi [a^dag a + (sz + 1)/2]}, diagonal with entries (-1)^(n+s).
OperatorMatrix build_parity_operator(int n_max);

/// Basis state |n, s> as a unit vector.
StateVector basis_state(int n_max, int n, Qubit s);

/// Largest absolute entry.
double max_abs(const OperatorMatrix& m);

/// max |[A, B]| entry.
double commutator_norm(const OperatorMatrix& a, const OperatorMatrix& b);

/// max |H - H^dag| entry.
double hermiticity_error(const OperatorMatrix& m);

}  // namespace bundlesim
