#include "bundlesim/dressed.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

using namespace bundlesim;

namespace {

struct Fixture {
  SystemParams p;
  DressedBasis basis;
  JumpOperators jumps;
};

Fixture make(double theta, double lambda = 0.2, int n_max = 20) {
  Fixture f;
  f.p.theta = theta;
  f.p.lambda_c = lambda;
  f.p.n_max = n_max;
  f.basis = diagonalize(build_rabi_hamiltonian(f.p), build_parity_operator(n_max));
  const auto cav = build_cavity_ops(n_max);
  const auto q = build_qubit_ops(n_max);
  f.jumps = build_jump_operators(f.basis, cav.a, q.sigma);
  return f;
}

}  // namespace

TEST(Diagonalize, DecoupledLowestLevels) {
  const Fixture f = make(std::numbers::pi / 2, 0.0);
  EXPECT_NEAR(f.basis.energies(0), -2.5, 1e-12);
  EXPECT_NEAR(f.basis.energies(1), -1.5, 1e-12);
  EXPECT_NEAR(f.basis.energies(2), -0.5, 1e-12);
  EXPECT_EQ(f.basis.dominant_index(0, Qubit::g), 0);
  EXPECT_EQ(f.basis.dominant_index(2, Qubit::g), 2);
  EXPECT_NEAR(f.basis.parities(0), 1.0, 1e-12);
}

TEST(Diagonalize, OrthonormalSortedDefiniteParity) {
  const Fixture f = make(std::numbers::pi / 2);
  const int n = f.basis.size();
  EXPECT_LT(max_abs(f.basis.states.adjoint() * f.basis.states - OperatorMatrix::Identity(n, n)), 1e-10);
  for (int i = 1; i < n; ++i) EXPECT_GE(f.basis.energies(i), f.basis.energies(i - 1));
  for (int i = 0; i < n; ++i) EXPECT_GT(std::abs(f.basis.parities(i)), 1.0 - 1e-9) << "level " << i;
}

TEST(Diagonalize, DegenerateClustersGetDefiniteParity) {
  // lambda = 0 with omega_q = 5 omega_r has exact crossings |n,e> ~ |n+5,g>.
  const Fixture f = make(std::numbers::pi / 2, 0.0, 12);
  const int n = f.basis.size();
  EXPECT_LT(max_abs(f.basis.states.adjoint() * f.basis.states - OperatorMatrix::Identity(n, n)), 1e-10);
  for (int i = 0; i < n; ++i) EXPECT_GT(std::abs(f.basis.parities(i)), 1.0 - 1e-9);
}

TEST(Diagonalize, NearDegeneratePairStaysOrthonormal) {
  OperatorMatrix h = OperatorMatrix::Zero(4, 4);
  h(0, 0) = 1.0;
  h(1, 1) = 1.0 + 1e-11;
  h(2, 2) = 2.0;
  h(3, 3) = -1.0;
  h(0, 1) = h(1, 0) = 1e-12;
  OperatorMatrix pi = OperatorMatrix::Identity(4, 4);
  pi(1, 1) = -1.0;
  pi(3, 3) = -1.0;
  const DressedBasis b = diagonalize(h, pi);
  EXPECT_LT(max_abs(b.states.adjoint() * b.states - OperatorMatrix::Identity(4, 4)), 1e-10);
  EXPECT_NEAR(b.energies(0), -1.0, 1e-15);
}

TEST(Diagonalize, RejectsNonHermitian) {
  OperatorMatrix h = OperatorMatrix::Zero(2, 2);
  h(0, 1) = 1.0;
  EXPECT_THROW(diagonalize(h, OperatorMatrix::Identity(2, 2)), ParameterError);
}

TEST(Diagonalize, BrokenSymmetryHasMixedParity) {
  const Fixture f = make(std::numbers::pi / 6);
  double least = 1.0;
  for (int i = 0; i < 10; ++i) least = std::min(least, std::abs(f.basis.parities(i)));
  EXPECT_LT(least, 1.0 - 1e-6);
}

TEST(JumpOperators, DecoupledLimitIsBareLowering) {
  const Fixture f = make(std::numbers::pi / 2, 0.0, 10);
  const auto cav = build_cavity_ops(10);
  const auto q = build_qubit_ops(10);
  // Compare on the levels that take part in the sums.
  const auto v = f.basis.states.leftCols(f.jumps.retained_levels);
  const OperatorMatrix p = v * v.adjoint();
  EXPECT_LT(max_abs(f.jumps.X - p * cav.a * p), 1e-12);
  EXPECT_LT(max_abs(f.jumps.D - p * q.sigma * p), 1e-12);
}

TEST(JumpOperators, StrictlyLoweringAndAnnihilateGround) {
  for (double theta : {std::numbers::pi / 2, std::numbers::pi / 6}) {
    const Fixture f = make(theta);
    const int n = f.basis.size();
    for (int m = 0; m < n; ++m) {
      for (int k = 0; k < n; ++k) {
        if (f.basis.energies(m) >= f.basis.energies(k)) {
          EXPECT_EQ(std::abs(f.jumps.X_dressed(m, k)), 0.0);
          EXPECT_EQ(std::abs(f.jumps.D_dressed(m, k)), 0.0);
        }
      }
    }
    EXPECT_LT((f.jumps.X * f.basis.states.col(0)).norm(), 1e-12);
    EXPECT_LT((f.jumps.D * f.basis.states.col(0)).norm(), 1e-12);
  }
}

TEST(JumpOperators, ReconstructsOffDiagonalField) {
  const Fixture f = make(std::numbers::pi / 6);
  const auto cav = build_cavity_ops(f.p.n_max);
  const int r = f.jumps.retained_levels;
  const auto v = f.basis.states.leftCols(r);
  OperatorMatrix field = v.adjoint() * (cav.a + cav.a_dag) * v;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      if (std::abs(f.basis.energies(i) - f.basis.energies(j)) < 1e-9) field(i, j) = 0.0;
    }
  }
  const OperatorMatrix sum = f.jumps.X_dressed + f.jumps.X_dressed.adjoint();
  EXPECT_LT(max_abs(sum.topLeftCorner(r, r) - field), 1e-12);
}

TEST(JumpOperators, ParitySelectionRule) {
  const Fixture f = make(std::numbers::pi / 2);
  for (int m = 0; m < f.basis.size(); ++m) {
    for (int k = 0; k < f.basis.size(); ++k) {
      if (f.basis.parities(m) * f.basis.parities(k) > 0.0) {
        EXPECT_LT(std::abs(f.jumps.X_dressed(m, k)), 1e-10);
      }
    }
  }
}

TEST(JumpOperators, ExcludedFractionDoesNotSplitClusters) {
  const Fixture f = make(std::numbers::pi / 2);
  const int r = f.jumps.retained_levels;
  EXPECT_GT(r, 0);
  EXPECT_LE(r, f.basis.size());
  EXPECT_NEAR(r, 0.8 * f.basis.size(), 2.0);
  if (r < f.basis.size()) EXPECT_GT(f.basis.energies(r) - f.basis.energies(r - 1), 1e-9);
  // Nothing couples to a dropped level.
  EXPECT_EQ(f.jumps.X_dressed.rightCols(f.basis.size() - r).norm(), 0.0);
}

TEST(JumpOperators, DimensionMismatch) {
  const Fixture f = make(std::numbers::pi / 2, 0.2, 4);
  const auto cav = build_cavity_ops(5);
  const auto q = build_qubit_ops(4);
  EXPECT_THROW(build_jump_operators(f.basis, cav.a, q.sigma), ParameterError);
}

TEST(Truncation, DecoupledIsExact) {
  const Fixture f = make(std::numbers::pi / 2, 0.0);
  const TruncationReport r = check_truncation(f.basis, f.p, 20);
  EXPECT_LT(r.energy_shift, 1e-12);
  EXPECT_LT(r.element_shift, 1e-12);
  EXPECT_TRUE(r.converged);
}

TEST(Truncation, ReferenceParametersConverged) {
  const Fixture f = make(std::numbers::pi / 2);
  const TruncationReport r = check_truncation(f.basis, f.p, 20);
  EXPECT_EQ(r.n_max_reference, 25);
  EXPECT_LT(r.energy_shift, 1e-6);
  EXPECT_LT(r.element_shift, 1e-6);
  EXPECT_TRUE(r.converged);
}

TEST(Truncation, DeepStrongUnderTruncatedFlagged) {
  const Fixture f = make(std::numbers::pi / 2, 2.0, 5);
  const TruncationReport r = check_truncation(f.basis, f.p, 10);
  EXPECT_FALSE(r.converged);
}

TEST(DressedCsv, Rows) {
  const Fixture f = make(std::numbers::pi / 2, 0.2, 6);
  std::ostringstream out;
  write_dressed_csv(out, f.basis, 3);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "index,energy,parity,dominant_state,dominant_weight");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
  EXPECT_NE(s.find(",0g,"), std::string::npos);
}
