#pragma once

#include "bundlesim/hilbert.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bundlesim {

enum class ExperimentKind { spectrum, rabi, trajectories, purity_sweep, g2tau, omega_eff };

std::string_view kind_name(ExperimentKind k) noexcept;
/// Accepts "purity-sweep", "purity_sweep", ...; throws ParameterError("kind", ...) otherwise.
ExperimentKind parse_kind(std::string_view name);

/// Flat run description parsed from "key = value" lines.
struct RunConfig {
  SystemParams params;
  ExperimentKind kind = ExperimentKind::spectrum;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output;

  // Grids.
  std::vector<double> detuning_grid;  ///< spectrum: Delta_q / omega_r
  std::vector<double> tau_grid;       ///< g2tau: delays in units of 1/kappa
  std::vector<double> sweep_grid;     ///< purity-sweep values
  std::string sweep = "kappa";        ///< purity-sweep variable
  std::vector<double> theta_grid;     ///< omega-eff angles

  // Dynamics.
  double t_end = 0.0;
  double dt_out = 0.0;
  int n_traj = 100;
  double t_traj = 1e6;
  double window_kappa = 10.0;
  int order = 2;  ///< g2tau: 1 photons, 2 bundles
  std::vector<std::string> populations{"0g", "1e", "2e", "3e"};
  bool locate_resonance = true;
  int resonance_order = 2;
  double bracket_halfwidth = 0.25;
  double duration = 0.0;  ///< omega-eff evolution length (0: automatic)

  // Numerics.
  int levels = 0;
  double level_window = 3.0;
  double excluded_fraction = 0.2;
  int n_phase = 16;
  int corr_phases = 8;
  double rtol = 1e-10;
  double atol = 1e-12;
  double steady_tolerance = 1e-6;
  std::string steady_method = "fixed_point";
  long max_periods = 2'000'000;

  /// Keys exactly as given, for the output header.
  std::vector<std::pair<std::string, std::string>> entries;
};

/// Parses and validates a config document. Unknown keys, malformed values,
/// invalid parameters and empty grids required by the experiment are rejected
/// with a ParameterError naming the key. Missing keys keep their defaults.
/// A given `kind` (the CLI subcommand) must agree with any kind in the text.
RunConfig parse_config(std::string_view text, std::optional<ExperimentKind> kind = std::nullopt);

/// Reads a number; accepts "pi", "pi/6", "2*pi/3" style multiples of pi.
double parse_number(std::string_view key, std::string_view text);

/// Comma list, "linspace(a, b, n)" or "logspace(a, b, n)" (powers of ten).
std::vector<double> parse_grid(std::string_view key, std::string_view text);

/// Checks the cross-field constraints for the selected experiment.
void validate_config(const RunConfig& cfg);

/// key = value lines reproducing every setting.
std::string describe_config(const RunConfig& cfg);

}  // namespace bundlesim
