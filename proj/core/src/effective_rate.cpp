#include "bundlesim/effective_rate.hpp"

#include "bundlesim/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace bundlesim {

namespace {

constexpr double kGolden = 0.6180339887498949;

template <typename F>
double golden_max(F&& f, double a, double b, double tol) {
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (std::abs(b - a) > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Least-squares fit of c0 + c1 cos(w t) + c2 sin(w t); returns R^2 and amplitude.
std::pair<double, double> sinusoid_fit(const std::vector<double>& y, double dt, double w) {
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d aty = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = static_cast<double>(i) * dt;
    const Eigen::Vector3d row(1.0, std::cos(w * t), std::sin(w * t));
    ata += row * row.transpose();
    aty += row * y[i];
  }
  const Eigen::Vector3d c = ata.ldlt().solve(aty);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = static_cast<double>(i) * dt;
    const double fit = c(0) + c(1) * std::cos(w * t) + c(2) * std::sin(w * t);
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  return {r2, 2.0 * std::hypot(c(1), c(2))};
}

double auto_probe_time(const SystemParams& p, int j) {
  if (j == 2) {
    const double rate = omega_eff_analytic(p);
    if (rate > 0.0) return 2.0 * std::numbers::pi / rate;
  }
  return 5e4 / p.omega_r;
}

}  // namespace

double omega_eff_analytic(const SystemParams& p) {
  p.validate();
  const double wr = p.omega_r;
  const double wq = p.omega_q;
  if (!(wr > 0.0)) throw ParameterError("omega_r", "must be positive");
  if (std::abs(wq - wr) < 1e-6 * wr) throw ParameterError("omega_q", "too close to the pole at omega_q = omega_r");
  const double s = std::sin(p.theta);
  const double c = std::cos(p.theta);
  const double bracket = s * s * (1.0 / (wq + wr) + 1.0 / (wq - wr)) * (1.0 / (2.0 * wr) - 1.0 / (wq + wr)) +
                         2.0 * c * c / (wr * wr);
  return std::numbers::sqrt2 * p.Omega_d * p.lambda_c * p.lambda_c / 2.0 * bracket;
}

double peak_population(const SystemParams& p, int j, double probe_time, const ResonanceOptions& options) {
  const DrivenModel model = DrivenModel::build(p, options.model);
  if (j < 0 || j > p.n_max) throw ParameterError("j", "photon number outside the truncation");
  const KetPropagator prop(model, false, options.propagator);
  StateVector v = model.ket_to_frame(basis_state(p.n_max, 0, Qubit::g));
  v /= v.norm();
  const Eigen::RowVectorXcd probe = model.projector().row(basis_index(j, Qubit::e));
  const long periods = std::max(1L, static_cast<long>(std::ceil(probe_time / prop.period())));
  const Eigen::MatrixXcd& u = prop.period_map();
  double best = 0.0;
  for (long n = 0; n < periods; ++n) {
    v = u * v;
    best = std::max(best, std::norm(probe.dot(v.conjugate())));
  }
  return best;
}

double find_resonance(const SystemParams& p, int j, Bracket bracket, const ResonanceOptions& options) {
  p.validate();
  if (!(bracket.hi > bracket.lo) || bracket.lo <= 0.0) throw ParameterError("bracket", "need 0 < lo < hi");
  const double probe = options.probe_time > 0.0 ? options.probe_time : auto_probe_time(p, j);

  // Start from the dressed transition |0,g> -> |j,e>.
  const DrivenModel undriven = DrivenModel::build(p, options.model);
  const DressedBasis& b = undriven.basis();
  const double guess = b.energies(b.dominant_index(j, Qubit::e)) - b.energies(b.dominant_index(0, Qubit::g));
  const double center = (guess > bracket.lo && guess < bracket.hi) ? guess : 0.5 * (bracket.lo + bracket.hi);
  const double lo = std::max(bracket.lo, center - options.scan_halfwidth);
  const double hi = std::min(bracket.hi, center + options.scan_halfwidth);
  const int n = std::max(3, static_cast<int>(std::ceil((hi - lo) / options.scan_step)) + 1);

  auto f = [&](double w) {
    SystemParams q = p;
    q.omega_L = w;
    return peak_population(q, j, probe, options);
  };
  std::vector<double> grid(n), vals(n);
  for (int i = 0; i < n; ++i) {
    grid[i] = lo + (hi - lo) * i / (n - 1);
    vals[i] = f(grid[i]);
  }
  const int best = static_cast<int>(std::max_element(vals.begin(), vals.end()) - vals.begin());
  if (best == 0 || best == n - 1) {
    throw ResonanceError("no interior maximum of P_" + std::to_string(j) + "e in [" + format_double(lo) + ", " +
                         format_double(hi) + "]");
  }
  return golden_max(f, grid[best - 1], grid[best + 1], options.rel_tol * grid[best]);
}

SpectralPeak dominant_frequency(const std::vector<double>& samples, double dt) {
  const std::size_t n = samples.size();
  if (n < 8) throw ResonanceError("series too short for a spectral estimate");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);

  // Hann-windowed DFT over the lowest bins.
  const std::size_t kmax = std::min<std::size_t>(n / 2, 512);
  const double span = dt * static_cast<double>(n);
  std::size_t best_k = 1;
  double best_power = -1.0;
  for (std::size_t k = 1; k <= kmax; ++k) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / span;
    Complex acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
      acc += hann * (samples[i] - mean) * std::polar(1.0, -w * static_cast<double>(i) * dt);
    }
    if (std::norm(acc) > best_power) {
      best_power = std::norm(acc);
      best_k = k;
    }
  }
  const double bin = 2.0 * std::numbers::pi / span;
  const double a = std::max(0.5 * bin, (static_cast<double>(best_k) - 1.0) * bin);
  const double b = (static_cast<double>(best_k) + 1.0) * bin;
  const double w = golden_max([&](double x) { return sinusoid_fit(samples, dt, x).first; }, a, b, 1e-6 * bin);
  const auto [r2, amp] = sinusoid_fit(samples, dt, w);
  return {w, r2, amp};
}

ResonanceFit omega_eff_numeric(const SystemParams& p, const RateOptions& options) {
  p.validate();
  const double target = p.omega_q + 2.0 * p.omega_r;
  ResonanceFit fit;
  fit.omega_L = find_resonance(p, 2, {target - options.bracket_halfwidth, target + options.bracket_halfwidth},
                               options.resonance);
  double duration = options.duration;
  if (duration <= 0.0) {
    const double guess = omega_eff_analytic(p);
    if (!(guess > 0.0)) throw ParameterError("duration", "no analytic rate to size the run; set it explicitly");
    duration = 6.0 * std::numbers::pi / guess;
  }

  SystemParams q = p;
  q.omega_L = fit.omega_L;
  ModelOptions mo = options.resonance.model;
  mo.levels = options.levels;
  const DrivenModel model = DrivenModel::build(q, mo);
  PropagatorOptions po = options.resonance.propagator;
  po.n_phase = options.n_phase;
  po.build_maps = true;
  const KetPropagator prop(model, false, po);
  const long periods = static_cast<long>(std::ceil(duration / prop.period()));
  const Eigen::RowVectorXcd probe = model.projector().row(basis_index(2, Qubit::e));

  // Stack the partial maps so one product gives all phase samples of a period.
  const int k = model.levels();
  Eigen::MatrixXcd stacked(static_cast<Eigen::Index>(k) * po.n_phase, k);
  for (int i = 0; i < po.n_phase; ++i) stacked.middleRows(static_cast<Eigen::Index>(i) * k, k) = prop.phase_map(i);

  StateVector v = model.ket_to_frame(basis_state(p.n_max, 0, Qubit::g));
  v /= v.norm();
  std::vector<double> series;
  series.reserve(static_cast<std::size_t>(periods));
  Eigen::VectorXcd samples;
  for (long n = 0; n < periods; ++n) {
    samples.noalias() = stacked * v;
    double acc = 0.0;
    for (int i = 0; i < po.n_phase; ++i) {
      acc += std::norm(probe.dot(samples.segment(static_cast<Eigen::Index>(i) * k, k).conjugate()));
    }
    series.push_back(acc / po.n_phase);
    v = prop.period_map() * v;
  }
  const SpectralPeak peak = dominant_frequency(series, prop.period());
  fit.omega_num = 0.5 * peak.frequency;
  fit.quality = peak.quality;
  fit.amplitude = peak.amplitude;
  fit.duration = static_cast<double>(periods) * prop.period();
  fit.periods = periods;
  if (fit.quality < options.min_quality) {
    throw ResonanceError("no clear oscillation in P_2e: fit R^2 = " + format_double(fit.quality));
  }
  return fit;
}

void write_rate_csv(std::ostream& out, const std::vector<RateComparison>& rows) {
  write_header(out, {"theta", "omega_analytic", "omega_numeric", "fit_quality", "omega_L"});
  for (const auto& r : rows) {
    const double vals[] = {r.theta, r.analytic, r.fit.omega_num, r.fit.quality, r.fit.omega_L};
    write_row(out, vals);
  }
}

}  // namespace bundlesim
