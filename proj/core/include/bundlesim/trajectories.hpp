#pragma once

#include "bundlesim/correlations.hpp"
#include "bundlesim/effective_rate.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bundlesim {

enum class Channel : int { cavity = 0, qubit = 1 };

const char* channel_name(Channel c) noexcept;

struct ClickRecord {
  double time = 0.0;
  Channel channel = Channel::cavity;
};

struct TrajectoryOptions {
  PropagatorOptions propagator;
  /// Bisection stops once |<psi|psi> - r| is below this.
  double norm_tol = 1e-10;
  /// Record bare populations on the output grid.
  bool record_populations = true;
  /// Bare basis columns recorded; empty means all.
  std::vector<int> population_indices;
};

struct TrajectoryResult {
  std::vector<ClickRecord> clicks;
  std::vector<double> times;
  Eigen::MatrixXd populations;  ///< rows: times, cols: population_indices (or all)
  std::vector<int> population_indices;
  std::uint64_t seed = 0;
  double t_end = 0.0;
};

/// Quantum-jump unraveling of the master equation. Between jumps the
/// unnormalized state follows H_eff(t) = H(t) - (i/2)(kappa X^dag X + gamma D^dag D);
/// a jump fires when <psi|psi> reaches a uniform threshold, the channel is drawn
/// with weights kappa |X psi|^2 and gamma |D psi|^2.
///
/// The propagator must be built from `model` with decay. Starts from psi0 (frame)
/// or the dressed ground state.
TrajectoryResult mcwf_run(const DrivenModel& model, const KetPropagator& prop, std::uint64_t seed, double t_end,
                          double dt_out, const TrajectoryOptions& options = {},
                          const std::optional<StateVector>& psi0 = std::nullopt);

/// Convenience overload building the model and propagator.
TrajectoryResult mcwf_run(const SystemParams& p, std::uint64_t seed, double t_end, double dt_out,
                          const TrajectoryOptions& options = {}, const ModelOptions& model = {});

struct BundleStats {
  std::map<int, long> counts;  ///< cluster size -> events
  long total = 0;              ///< all cavity clusters
  long qubit_clicks = 0;
  long cavity_clicks = 0;
  double observed_time = 0.0;

  /// Pi_n = counts[n] / total; NaN when no events.
  double purity(int n) const;
  /// Binomial standard error of Pi_n.
  double purity_stderr(int n) const;
  /// Clusters per unit time; NaN when observed_time is 0.
  double emission_rate() const;
  bool empty() const noexcept { return total == 0; }

  BundleStats& merge(const BundleStats& other);
};

/// Groups cavity clicks into maximal clusters with consecutive gaps below
/// `window`. Qubit clicks are only counted.
BundleStats classify_bundles(const std::vector<ClickRecord>& clicks, double window, double observed_time = 0.0);

/// Centers of the size-n clusters.
std::vector<double> cluster_centers(const std::vector<ClickRecord>& clicks, double window, int size);

enum class SweepVariable { kappa, theta };

struct PurityOptions {
  TrajectoryOptions trajectory;
  ModelOptions model;
  ResonanceOptions resonance;
  /// Resonance bracket half-width around omega_q + 2 omega_r.
  double bracket_halfwidth = 0.25;
  int n_traj = 100;
  double t_traj = 1e6;
  /// Cluster window in units of 1/kappa.
  double window_kappa = 10.0;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct PurityPoint {
  double value = 0.0;
  double omega_L = 0.0;
  BundleStats stats;
  double pi2 = 0.0;
  double stderr_pi2 = 0.0;
  bool ok = false;
  std::string error;
};

/// Pi_2 versus kappa or theta. The two-photon resonance is located for every
/// point; trajectory seeds derive from (seed, point index, trajectory index).
std::vector<PurityPoint> purity_sweep(const SystemParams& p, SweepVariable variable, const std::vector<double>& grid,
                                      const PurityOptions& options = {});

/// Runs n_traj trajectories at p and merges their bundle statistics. Clicks of
/// every trajectory are returned when `clicks_out` is given.
BundleStats run_ensemble(const SystemParams& p, const PurityOptions& options, std::uint64_t stream,
                         std::vector<std::vector<ClickRecord>>* clicks_out = nullptr);

/// g2 of two-photon bundles from cluster centers: delay histogram normalized by
/// the uncorrelated expectation. `durations[i]` is the length of record i.
CorrelationCurve bundle_g2_estimator(const std::vector<std::vector<ClickRecord>>& ensemble,
                                     const std::vector<double>& durations, const std::vector<double>& tau_edges,
                                     double window, int size = 2, long min_events = 1000);

/// trajectory_id, time, channel
void write_clicks_csv(std::ostream& out, const std::vector<std::vector<ClickRecord>>& ensemble);
void write_purity_csv(std::ostream& out, SweepVariable variable, const std::vector<PurityPoint>& points);

}  // namespace bundlesim
