#include "bundlesim/dressed.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace bundlesim {

int DressedBasis::dominant_index(int n, Qubit s) const {
  const int row = basis_index(n, s);
  if (row >= states.rows()) throw ParameterError("n", "bare state outside truncation");
  Eigen::Index best = 0;
  states.row(row).cwiseAbs2().maxCoeff(&best);
  return static_cast<int>(best);
}

std::vector<std::pair<int, int>> degenerate_clusters(const Eigen::VectorXd& energies, int count,
                                                     double tol) {
  std::vector<std::pair<int, int>> clusters;
  int begin = 0;
  for (int i = 1; i <= count; ++i) {
    if (i == count || energies(i) - energies(i - 1) > tol) {
      clusters.emplace_back(begin, i);
      begin = i;
    }
  }
  return clusters;
}

DressedBasis diagonalize(const OperatorMatrix& h, const OperatorMatrix& parity,
                         double degeneracy_tol) {
  if (h.rows() != h.cols()) throw ParameterError("H", "matrix is not square");
  if (parity.rows() != h.rows() || parity.cols() != h.cols()) {
    throw ParameterError("Pi", "dimension mismatch with H");
  }
  const double scale = std::max(1.0, max_abs(h));
  if (hermiticity_error(h) > 1e-10 * scale) throw ParameterError("H", "matrix is not Hermitian");

  Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigen-solver failed to converge");

  DressedBasis basis;
  basis.energies = solver.eigenvalues();
  basis.states = solver.eigenvectors();
  const int dim = basis.size();

  const double tol = degeneracy_tol * scale;
  for (auto [lo, hi] : degenerate_clusters(basis.energies, dim, tol)) {
    const int width = hi - lo;
    if (width < 2) continue;
    auto block = basis.states.middleCols(lo, width);
    OperatorMatrix pi_block = block.adjoint() * parity * block;
    pi_block = 0.5 * (pi_block + pi_block.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> rot(pi_block);
    OperatorMatrix rotated = block * rot.eigenvectors();
    block = rotated;
    const double mean = basis.energies.segment(lo, width).mean();
    basis.energies.segment(lo, width).setConstant(mean);
  }

  // Fix the global phase of each vector: largest component real positive.
  for (int k = 0; k < dim; ++k) {
    Eigen::Index imax = 0;
    basis.states.col(k).cwiseAbs().maxCoeff(&imax);
    const Complex c = basis.states(imax, k);
    basis.states.col(k) *= std::conj(c) / std::abs(c);
  }

  basis.parities.resize(dim);
  for (int k = 0; k < dim; ++k) {
    basis.parities(k) = (basis.states.col(k).adjoint() * parity * basis.states.col(k))(0, 0).real();
  }
  return basis;
}

int retained_level_count(const DressedBasis& basis, double excluded_fraction,
                         double degeneracy_tol) {
  if (excluded_fraction < 0.0 || excluded_fraction >= 1.0) {
    throw ParameterError("excluded_fraction", "must lie in [0, 1)");
  }
  const int dim = basis.size();
  int keep = static_cast<int>(std::ceil((1.0 - excluded_fraction) * dim - 1e-9));
  keep = std::clamp(keep, 1, dim);
  const double scale = std::max(1.0, basis.energies.cwiseAbs().maxCoeff());
  // Drop a cluster straddling the cut rather than split it.
  while (keep < dim && keep > 1 &&
         basis.energies(keep) - basis.energies(keep - 1) <= degeneracy_tol * scale) {
    --keep;
  }
  return keep;
}

namespace {

OperatorMatrix positive_frequency_part(const DressedBasis& basis, const OperatorMatrix& op,
                                       int retained, double tol) {
  const auto v = basis.states.leftCols(retained);
  OperatorMatrix elems = v.adjoint() * op * v;
  const int dim = basis.size();
  OperatorMatrix out = OperatorMatrix::Zero(dim, dim);
  for (int m = 0; m < retained; ++m) {
    for (int n = 0; n < retained; ++n) {
      if (basis.energies(m) - basis.energies(n) > tol) out(n, m) = elems(n, m);
    }
  }
  return out;
}

}  // namespace

JumpOperators build_jump_operators(const DressedBasis& basis, const OperatorMatrix& a,
                                   const OperatorMatrix& sigma, const JumpOptions& options) {
  const int dim = basis.size();
  if (a.rows() != dim || a.cols() != dim || sigma.rows() != dim || sigma.cols() != dim) {
    throw ParameterError("operators", "dimension mismatch with the dressed basis");
  }
  const double scale = std::max(1.0, basis.energies.cwiseAbs().maxCoeff());
  const double tol = options.degeneracy_tol * scale;
  JumpOperators j;
  j.retained_levels = retained_level_count(basis, options.excluded_fraction, options.degeneracy_tol);
  j.X_dressed = positive_frequency_part(basis, a + a.adjoint(), j.retained_levels, tol);
  j.D_dressed = positive_frequency_part(basis, sigma + sigma.adjoint(), j.retained_levels, tol);
  j.X = basis.states * j.X_dressed * basis.states.adjoint();
  j.D = basis.states * j.D_dressed * basis.states.adjoint();
  return j;
}

TruncationReport check_truncation(const DressedBasis& basis, const SystemParams& p, int levels,
                                  double tolerance, int extra_photons) {
  TruncationReport report;
  report.n_max = p.n_max;
  report.n_max_reference = p.n_max + extra_photons;
  report.tolerance = tolerance;
  levels = std::clamp(levels, 1, basis.size());
  report.levels_compared = levels;

  SystemParams ref_params = p;
  ref_params.n_max = report.n_max_reference;
  const DressedBasis ref = diagonalize(build_rabi_hamiltonian(ref_params),
                                       build_parity_operator(ref_params.n_max));

  for (int k = 0; k < levels; ++k) {
    const double scale = std::max({std::abs(ref.energies(k)), p.omega_r, 1e-300});
    report.energy_shift = std::max(report.energy_shift,
                                   std::abs(basis.energies(k) - ref.energies(k)) / scale);
  }

  // Field quadrature elements among the compared levels, grouped by cluster.
  auto field_elements = [](const DressedBasis& b, int n_max, int count) {
    const auto cav = build_cavity_ops(n_max);
    const auto v = b.states.leftCols(count);
    return OperatorMatrix(v.adjoint() * (cav.a + cav.a_dag) * v);
  };
  const OperatorMatrix x_here = field_elements(basis, p.n_max, levels);
  const OperatorMatrix x_ref = field_elements(ref, ref_params.n_max, levels);
  const double cluster_tol = 1e-9 * std::max(1.0, ref.energies.head(levels).cwiseAbs().maxCoeff());
  const auto clusters = degenerate_clusters(ref.energies, levels, cluster_tol);
  double largest = 0.0;
  for (const auto& [r0, r1] : clusters) {
    for (const auto& [c0, c1] : clusters) {
      if (c0 <= r0) continue;
      largest = std::max(largest, x_ref.block(r0, c0, r1 - r0, c1 - c0).norm());
    }
  }
  for (const auto& [r0, r1] : clusters) {
    for (const auto& [c0, c1] : clusters) {
      if (c0 <= r0) continue;
      const double here = x_here.block(r0, c0, r1 - r0, c1 - c0).norm();
      const double there = x_ref.block(r0, c0, r1 - r0, c1 - c0).norm();
      if (largest > 0.0) {
        report.element_shift = std::max(report.element_shift, std::abs(here - there) / largest);
      }
    }
  }
  report.converged = report.energy_shift <= tolerance && report.element_shift <= tolerance;
  return report;
}

void write_dressed_csv(std::ostream& out, const DressedBasis& basis, int count) {
  count = std::clamp(count, 0, basis.size());
  out << "index,energy,parity,dominant_state,dominant_weight\n";
  const std::streamsize old = out.precision(17);
  for (int k = 0; k < count; ++k) {
    Eigen::Index row = 0;
    const double weight = basis.states.col(k).cwiseAbs2().maxCoeff(&row);
    out << k << ',' << basis.energies(k) << ',' << basis.parities(k) << ','
        << basis_label(static_cast<int>(row)) << ',' << weight << '\n';
  }
  out.precision(old);
}

}  // namespace bundlesim
