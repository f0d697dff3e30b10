#pragma once

#include "bundlesim/evolution.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace bundlesim {

/// Raised when a correlation denominator falls below the numerical floor.
class DenominatorUnderflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kDenominatorFloor = 1e-12;

/// Tr(rho X^dag^n X^n) / Tr(rho X^dag X)^n for a bare-basis rho.
double g_n_equal_time(const OperatorMatrix& rho_bar, const JumpOperators& jumps, int n);

/// Same on the retained dressed frame of a model.
double g_n_equal_time(const OperatorMatrix& rho_frame, const OperatorMatrix& x_frame, int n);

struct SpectrumOptions {
  SteadyStateOptions steady;
  /// Also record g^(n)_1 for n = 2, 3, 4.
  bool correlations = true;
  int threads = 1;
};

struct SpectrumResult {
  std::vector<double> detunings;  ///< Delta_q / omega_r
  std::vector<double> xx;         ///< period-averaged <X^dag X>
  std::vector<double> g2, g3, g4; ///< NaN where not computed or flagged
  std::vector<bool> ok;               ///< steady state found; g values may still be NaN
  std::vector<std::string> errors;   ///< failure or g underflow message per point
  int n_phase = 0;
  int levels = 0;
};

/// Steady period-averaged <X^dag X> (and g^(n)_1) for each Delta_q in the grid.
/// A failing point is flagged and the sweep continues.
SpectrumResult excitation_spectrum(const SystemParams& p, const std::vector<double>& dq_grid,
                                   const SpectrumOptions& options = {});

struct CorrelationOptions {
  SteadyStateOptions steady;
  /// Start phases per drive period; must divide the propagator's n_phase.
  int n_phase = 8;
};

struct CorrelationCurve {
  int order = 2;                   ///< s: 1 for photons, 2 for two-photon bundles
  std::vector<double> tau;
  std::vector<double> g;           ///< NaN where flagged
  std::vector<bool> valid;
  double denominator = 0.0;        ///< phase-averaged <X^dag^s X^s>
  double tau_min = 0.0;            ///< 1/kappa
  int n_phase = 0;
  int levels = 0;
  /// Trajectory estimator only: one-sigma counting errors and event count.
  std::vector<double> error;
  long events = 0;
  std::string warning;
};

/// <X^dag^s(0) X^dag^s(tau) X^s(tau) X^s(0)> / <X^dag^s X^s>^2 by quantum
/// regression, averaged over start phases spanning one drive period.
/// Every delay must be at least 1/kappa.
CorrelationCurve g2_tau(const SystemParams& p, const std::vector<double>& tau_grid, int order,
                        const CorrelationOptions& options = {});
CorrelationCurve g2_tau(const DrivenModel& model, const DensityPropagator& prop, const SteadyState& steady,
                        const std::vector<double>& tau_grid, int order, int n_phase);

inline CorrelationCurve g2_bundle_tau(const SystemParams& p, const std::vector<double>& tau_grid,
                                      const CorrelationOptions& options = {}) {
  return g2_tau(p, tau_grid, 2, options);
}
inline CorrelationCurve g2_photon_tau(const SystemParams& p, const std::vector<double>& tau_grid,
                                      const CorrelationOptions& options = {}) {
  return g2_tau(p, tau_grid, 1, options);
}

void write_spectrum_csv(std::ostream& out, const SpectrumResult& r);
void write_curve_csv(std::ostream& out, const CorrelationCurve& c);

}  // namespace bundlesim
