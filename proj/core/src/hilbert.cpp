#include "bundlesim/hilbert.hpp"

#include <cmath>

namespace bundlesim {

void SystemParams::validate() const {
  auto non_negative = [](double v, const char* key) {
    if (!std::isfinite(v)) throw ParameterError(key, "must be finite");
    if (v < 0.0) throw ParameterError(key, "must be non-negative");
  };
  non_negative(omega_r, "omega_r");
  non_negative(omega_q, "omega_q");
  non_negative(lambda_c, "lambda_c");
  non_negative(Omega_d, "Omega_d");
  non_negative(omega_L, "omega_L");
  non_negative(kappa, "kappa");
  non_negative(gamma_q, "gamma_q");
  if (!std::isfinite(theta)) throw ParameterError("theta", "must be finite");
  if (n_max < 1) throw ParameterError("n_max", "must be at least 1");
}

std::string basis_label(int index) {
  return std::to_string(photon_number(index)) + (qubit_state(index) == Qubit::g ? "g" : "e");
}

CavityOps build_cavity_ops(int n_max) {
  if (n_max < 1) throw ParameterError("n_max", "must be at least 1");
  const int dim = basis_dim(n_max);
  OperatorMatrix a = OperatorMatrix::Zero(dim, dim);
  for (int n = 1; n <= n_max; ++n) {
    const double amp = std::sqrt(static_cast<double>(n));
    for (Qubit s : {Qubit::g, Qubit::e}) {
      a(basis_index(n - 1, s), basis_index(n, s)) = amp;
    }
  }
  OperatorMatrix a_dag = a.adjoint();
  return {std::move(a), std::move(a_dag)};
}

QubitOps build_qubit_ops(int n_max) {
  if (n_max < 1) throw ParameterError("n_max", "must be at least 1");
  const int dim = basis_dim(n_max);
  OperatorMatrix sigma = OperatorMatrix::Zero(dim, dim);
  OperatorMatrix sigma_z = OperatorMatrix::Zero(dim, dim);
  for (int n = 0; n <= n_max; ++n) {
    const int g = basis_index(n, Qubit::g);
    const int e = basis_index(n, Qubit::e);
    sigma(g, e) = 1.0;
    sigma_z(g, g) = -1.0;
    sigma_z(e, e) = 1.0;
  }
  OperatorMatrix sigma_x = sigma + sigma.adjoint();
  return {std::move(sigma), std::move(sigma_x), std::move(sigma_z)};
}

OperatorMatrix build_rabi_hamiltonian(const SystemParams& p) {
  p.validate();
  const auto cav = build_cavity_ops(p.n_max);
  const auto q = build_qubit_ops(p.n_max);
  const OperatorMatrix field = cav.a + cav.a_dag;
  const OperatorMatrix coupling = std::cos(p.theta) * q.sigma_z - std::sin(p.theta) * q.sigma_x;
  OperatorMatrix h = 0.5 * p.omega_q * q.sigma_z + p.omega_r * (cav.a_dag * cav.a) +
                     p.lambda_c * (coupling * field);
  // sz and sx act on a different tensor factor than the field, so the product
  // is Hermitian in exact arithmetic; symmetrize away the round-off.
  return 0.5 * (h + h.adjoint());
}

OperatorMatrix build_full_hamiltonian(const SystemParams& p, double t) {
  OperatorMatrix h = build_rabi_hamiltonian(p);
  const double drive = p.Omega_d * std::cos(p.omega_L * t);
  if (drive != 0.0) h += drive * build_qubit_ops(p.n_max).sigma_x;
  return h;
}

OperatorMatrix build_parity_operator(int n_max) {
  if (n_max < 1) throw ParameterError("n_max", "must be at least 1");
  const int dim = basis_dim(n_max);
  OperatorMatrix pi = OperatorMatrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const int exponent = photon_number(i) + static_cast<int>(qubit_state(i));
    pi(i, i) = exponent % 2 == 0 ? 1.0 : -1.0;
  }
  return pi;
}

StateVector basis_state(int n_max, int n, Qubit s) {
  if (n < 0 || n > n_max) throw ParameterError("n", "photon number outside truncation");
  StateVector v = StateVector::Zero(basis_dim(n_max));
  v(basis_index(n, s)) = 1.0;
  return v;
}

double max_abs(const OperatorMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double commutator_norm(const OperatorMatrix& a, const OperatorMatrix& b) {
  return max_abs(a * b - b * a);
}

double hermiticity_error(const OperatorMatrix& m) { return max_abs(m - m.adjoint()); }

}  // namespace bundlesim
