#pragma once

#include "bundlesim/config.hpp"
#include "bundlesim/correlations.hpp"
#include "bundlesim/effective_rate.hpp"
#include "bundlesim/trajectories.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace bundlesim {

const char* version() noexcept;

/// Exit codes of run_experiment.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitFlagged = 3 };

struct ExperimentReport {
  int exit_code = kExitOk;
  int flagged = 0;                  ///< grid points that failed
  std::vector<std::string> files;   ///< side files written next to cfg.output
  std::vector<std::string> notes;   ///< diagnostics for the log
};

// Option bundles derived from a config.
ModelOptions model_options(const RunConfig& cfg);
PropagatorOptions propagator_options(const RunConfig& cfg);
SteadyStateOptions steady_options(const RunConfig& cfg);

/// Header lines ('#' prefixed) with the version, every setting and the
/// conventions used by `cfg.kind`.
void write_run_header(std::ostream& out, const RunConfig& cfg);

/// Runs the experiment and writes its main CSV to `out`. Side files
/// (trajectory populations) go next to cfg.output when it is set. Rows are
/// written in grid order; failing points are flagged in their row.
ExperimentReport run_experiment(const RunConfig& cfg, std::ostream& out);

}  // namespace bundlesim
