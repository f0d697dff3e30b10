#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace bundlesim {

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what + " at t = " + std::to_string(time)), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Hard step ceiling; 0 means unbounded.
  double max_step = 0.0;
  /// Steps below this are reported as underflow.
  double min_step = 1e-13;
  long max_steps = 50'000'000;
};

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

using MatrixRhs = std::function<void(double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dy)>;

/// Adaptive Dormand-Prince 5(4) stepping of dy/dt = f(t, y) from t0 to t1,
/// landing exactly on t1. `step_hint` carries the last accepted step size
/// between calls (0 lets the integrator choose).
IntegrationStats integrate_dopri5(const MatrixRhs& f, double t0, double t1, Eigen::MatrixXcd& y,
                                  const IntegratorOptions& options, double& step_hint);

}  // namespace bundlesim
