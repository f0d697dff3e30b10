#include "bundlesim/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace bundlesim {

namespace {

// Dormand & Prince (1980) RK5(4)7M coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b_hat (error weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Eigen::MatrixXcd& err, const Eigen::MatrixXcd& y0,
                  const Eigen::MatrixXcd& y1, double rtol, double atol) {
  double worst = 0.0;
  const Eigen::Index n = err.size();
  const auto* pe = err.data();
  const auto* p0 = y0.data();
  const auto* p1 = y1.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc = atol + rtol * std::max(std::abs(p0[i]), std::abs(p1[i]));
    worst = std::max(worst, std::abs(pe[i]) / sc);
  }
  return worst;
}

}  // namespace

IntegrationStats integrate_dopri5(const MatrixRhs& f, double t0, double t1, Eigen::MatrixXcd& y,
                                  const IntegratorOptions& opt, double& step_hint) {
  IntegrationStats stats;
  const double span = t1 - t0;
  if (span == 0.0) return stats;
  if (span < 0.0) throw IntegrationError("backward integration is not supported", t0);

  double h_cap = opt.max_step > 0.0 ? opt.max_step : span;
  double h = step_hint > 0.0 ? std::min(step_hint, h_cap) : std::min(h_cap, span / 8.0);

  Eigen::MatrixXcd k1(y.rows(), y.cols()), k2(k1), k3(k1), k4(k1), k5(k1), k6(k1), k7(k1);
  Eigen::MatrixXcd tmp(k1), y_new(k1);
  double t = t0;
  f(t, y, k1);
  ++stats.rhs_evals;

  while (t < t1) {
    if (stats.accepted + stats.rejected >= opt.max_steps) {
      throw IntegrationError("step budget exhausted", t);
    }
    bool last = false;
    if (t + h >= t1 || t1 - (t + h) < 1e-12 * std::abs(span)) {
      h = t1 - t;
      last = true;
    }
    if (h < opt.min_step && !last) throw IntegrationError("step size underflow", t);

    tmp = y + h * a21 * k1;
    f(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, tmp, k6);
    y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h, y_new, k7);
    stats.rhs_evals += 6;

    tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = error_norm(tmp, y, y_new, opt.rtol, opt.atol);

    if (err <= 1.0) {
      t = last ? t1 : t + h;
      y.swap(y_new);
      k1.swap(k7);
      ++stats.accepted;
      if (!last) step_hint = h;
      const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
      h = std::min(h * grow, h_cap);
    } else {
      ++stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h < opt.min_step) throw IntegrationError("step size underflow", t);
    }
  }
  return stats;
}

}  // namespace bundlesim
