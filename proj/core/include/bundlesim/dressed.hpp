#pragma once

#include "bundlesim/hilbert.hpp"

#include <iosfwd>
#include <vector>

namespace bundlesim {

/// Eigen-decomposition of the undriven Hamiltonian, sorted by energy.
struct DressedBasis {
  Eigen::VectorXd energies;  ///< ascending
  OperatorMatrix states;     ///< orthonormal eigenvectors as columns, bare basis
  Eigen::VectorXd parities;  ///< <psi_n|Pi|psi_n>, real in [-1, 1]

  int size() const noexcept { return static_cast<int>(energies.size()); }

  /// Index of the eigenstate with the largest overlap with the bare state |n, s>.
  int dominant_index(int n, Qubit s) const;
};

/// Diagonalizes a Hermitian H. Eigenvectors inside (near-)degenerate clusters
/// are rotated to diagonalize Pi, so every vector has definite parity whenever
/// [Pi, H] = 0.
///
/// Throws ParameterError when H is not Hermitian to 1e-10 (relative).
DressedBasis diagonalize(const OperatorMatrix& h, const OperatorMatrix& parity,
                         double degeneracy_tol = 1e-9);

/// Dressed jump operators for the cavity (X) and qubit (D) channels.
struct JumpOperators {
  OperatorMatrix X;          ///< bare basis
  OperatorMatrix D;          ///< bare basis
  OperatorMatrix X_dressed;  ///< same operator in the energy-sorted eigenbasis
  OperatorMatrix D_dressed;
  int retained_levels = 0;   ///< levels that take part in the sums
};

struct JumpOptions {
  /// Fraction of the top of the truncated spectrum left out of the sums.
  double excluded_fraction = 0.2;
  /// Energy gap below which two levels count as degenerate (no term).
  double degeneracy_tol = 1e-9;
};

/// X = sum_{E_m > E_n} <psi_n|(a + a^dag)|psi_m> |psi_n><psi_m|, and D likewise
/// with (sigma + sigma^dag). Only the lowest retained levels contribute.
JumpOperators build_jump_operators(const DressedBasis& basis, const OperatorMatrix& a,
                                   const OperatorMatrix& sigma, const JumpOptions& options = {});

/// Number of levels kept after dropping the top fraction; never splits a
/// degenerate cluster.
int retained_level_count(const DressedBasis& basis, double excluded_fraction,
                         double degeneracy_tol = 1e-9);

/// Groups consecutive levels whose energies differ by less than tol.
std::vector<std::pair<int, int>> degenerate_clusters(const Eigen::VectorXd& energies, int count,
                                                     double tol);

struct TruncationReport {
  int n_max = 0;
  int n_max_reference = 0;
  int levels_compared = 0;
  double energy_shift = 0.0;   ///< max relative shift of compared energies
  double element_shift = 0.0;  ///< max relative shift of |X| blocks among them
  double tolerance = 1e-6;
  bool converged = true;
};

/// Re-diagonalizes at n_max + extra_photons and compares the lowest `levels`
/// energies and the X matrix elements among them. Element comparison uses
/// Frobenius norms of blocks between degenerate clusters, which do not depend
/// on the arbitrary basis choice inside a cluster.
TruncationReport check_truncation(const DressedBasis& basis, const SystemParams& p, int levels,
                                  double tolerance = 1e-6, int extra_photons = 5);

/// CSV rows: index, energy, parity, dominant bare state.
void write_dressed_csv(std::ostream& out, const DressedBasis& basis, int count);

}  // namespace bundlesim
