#pragma once

#include "bundlesim/propagator.hpp"

#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace bundlesim {

/// Raised when no usable resonance or oscillation can be extracted.
class ResonanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed-form two-photon super-Rabi rate
/// (sqrt2 Omega lambda^2 / 2) { sin^2(theta) [1/(wq+wr) + 1/(wq-wr)] [1/(2 wr) - 1/(wq+wr)]
///                              + 2 cos^2(theta) / wr^2 }.
/// Throws ParameterError near the pole wq = wr.
double omega_eff_analytic(const SystemParams& p);

struct ResonanceOptions {
  ModelOptions model;
  PropagatorOptions propagator{.integrator = {}, .steps_per_period_min = 50, .n_phase = 1, .build_maps = true};
  /// Probe duration for max_t P_{j,e}; 0 picks 2 pi / Omega_eff for j = 2 and 5e4 / omega_r otherwise.
  double probe_time = 0.0;
  /// Scan window half-width and step around the dressed transition frequency.
  double scan_halfwidth = 0.02;
  double scan_step = 1e-4;
  /// Relative tolerance of the golden-section refinement.
  double rel_tol = 1e-7;
};

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
};

/// Drive frequency maximizing max_t P_{j,e}(t) for a closed-system run from |0,g>.
double find_resonance(const SystemParams& p, int j, Bracket bracket, const ResonanceOptions& options = {});

/// max_t P_{j,e}(t) sampled once per drive period at p.omega_L.
double peak_population(const SystemParams& p, int j, double probe_time, const ResonanceOptions& options = {});

struct RateOptions {
  ResonanceOptions resonance;
  /// Resonance bracket: omega_q + 2 omega_r +- bracket_halfwidth.
  double bracket_halfwidth = 0.25;
  /// Evolution length; 0 picks six oscillations of the analytic rate.
  double duration = 0.0;
  /// Levels evolved for the fit (negative: all).
  int levels = -1;
  int n_phase = 16;
  double min_quality = 0.9;
};

struct ResonanceFit {
  double omega_L = 0.0;      ///< located drive frequency
  double omega_num = 0.0;    ///< extracted rate, P_{2e} ~ A sin^2(omega_num t)
  double quality = 0.0;      ///< R^2 of the sinusoidal fit
  double amplitude = 0.0;    ///< peak-to-peak of the fitted oscillation
  double duration = 0.0;
  long periods = 0;
};

/// Locates the two-photon resonance and extracts the slow oscillation rate of
/// the period-averaged P_{2e}(t). P oscillates at 2 omega_num.
ResonanceFit omega_eff_numeric(const SystemParams& p, const RateOptions& options = {});

/// Frequency of the dominant oscillation in a uniformly sampled series and the
/// R^2 of the best single-sinusoid fit.
struct SpectralPeak {
  double frequency = 0.0;  ///< angular
  double quality = 0.0;
  double amplitude = 0.0;
};
SpectralPeak dominant_frequency(const std::vector<double>& samples, double dt);

struct RateComparison {
  double theta = 0.0;
  double analytic = 0.0;
  ResonanceFit fit;
};

void write_rate_csv(std::ostream& out, const std::vector<RateComparison>& rows);

}  // namespace bundlesim
