#include "bundlesim/trajectories.hpp"

#include "bundlesim/csv.hpp"
#include "bundlesim/parallel.hpp"
#include "bundlesim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace bundlesim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxPowerBits = 40;

}  // namespace

const char* channel_name(Channel c) noexcept { return c == Channel::cavity ? "cavity" : "qubit"; }

TrajectoryResult mcwf_run(const DrivenModel& model, const KetPropagator& prop, std::uint64_t seed, double t_end,
                          double dt_out, const TrajectoryOptions& options, const std::optional<StateVector>& psi0) {
  const SystemParams& p = model.params();
  if (prop.levels() != model.levels()) throw ParameterError("propagator", "level count differs from the model");
  TrajectoryResult res;
  res.seed = seed;
  res.t_end = t_end;

  std::vector<double> grid;
  if (options.record_populations) grid = output_grid(t_end, dt_out);
  else if (!(t_end >= 0.0)) throw ParameterError("t_end", "must be non-negative");
  res.times = grid;
  res.population_indices = options.population_indices;
  if (res.population_indices.empty()) {
    for (int i = 0; i < p.dim(); ++i) res.population_indices.push_back(i);
  }
  res.populations.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(res.population_indices.size()));

  StateVector psi = psi0 ? *psi0 : model.ground_state();
  if (psi.size() != model.levels()) throw ParameterError("psi0", "dimension differs from the model frame");
  psi /= psi.norm();

  const OperatorMatrix x = model.x();
  const OperatorMatrix d = model.d();
  const double period = prop.period();
  const double eps = 1e-12 * period;
  UniformSource uniform(seed);
  double threshold = uniform();

  std::vector<Eigen::MatrixXcd> powers;
  if (prop.has_maps()) powers.push_back(prop.period_map());

  auto evolve = [&](const StateVector& v, double a, double b) {
    if (b - a <= eps) return v;
    Eigen::MatrixXcd m = v;
    prop.propagate(m, a, b);
    return StateVector(m.col(0));
  };
  std::size_t next_out = 0;
  auto record = [&](const StateVector& v) {
    const Eigen::VectorXd pops = model.bare_populations(StateVector(v / v.norm()));
    for (std::size_t c = 0; c < res.population_indices.size(); ++c) {
      res.populations(static_cast<Eigen::Index>(next_out), static_cast<Eigen::Index>(c)) = pops(res.population_indices[c]);
    }
    ++next_out;
  };

  double t = 0.0;
  long boundary = 0;  // t == boundary * period while at_boundary
  bool at_boundary = true;
  if (next_out < grid.size() && grid[next_out] <= eps) record(psi);

  while (t < t_end - eps) {
    const double target = next_out < grid.size() ? std::min(t_end, grid[next_out]) : t_end;

    if (at_boundary && !powers.empty()) {
      long remaining = static_cast<long>(std::floor((target - t) / period + 1e-9));
      if (remaining >= 1) {
        const int top = std::min(kMaxPowerBits, static_cast<int>(std::floor(std::log2(static_cast<double>(remaining)))));
        while (static_cast<int>(powers.size()) <= top) powers.push_back(powers.back() * powers.back());
        for (int k = top; k >= 0; --k) {
          while ((1L << k) <= remaining) {
            StateVector cand = powers[static_cast<std::size_t>(k)] * psi;
            if (cand.squaredNorm() <= threshold) break;
            psi = std::move(cand);
            boundary += 1L << k;
            remaining -= 1L << k;
          }
        }
        t = static_cast<double>(boundary) * period;
        if (remaining == 0) {
          if (next_out < grid.size() && std::abs(t - grid[next_out]) <= eps) record(psi);
          continue;
        }
      }
    }

    const double next_boundary = static_cast<double>(static_cast<long>(std::floor(t / period + 1e-9)) + 1) * period;
    const double seg_end = std::min(target, next_boundary);
    StateVector next = evolve(psi, t, seg_end);
    if (next.squaredNorm() > threshold) {
      psi = std::move(next);
      t = seg_end;
      at_boundary = std::abs(t - next_boundary) <= eps;
      if (at_boundary) {
        boundary = static_cast<long>(std::llround(t / period));
        t = static_cast<double>(boundary) * period;
      }
      if (next_out < grid.size() && std::abs(t - grid[next_out]) <= eps) record(psi);
      continue;
    }

    // Threshold crossed inside (t, seg_end]: bisect on the squared norm.
    double lo = t, hi = seg_end;
    StateVector at_hi = std::move(next);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      StateVector v = evolve(psi, t, mid);
      const double n2 = v.squaredNorm();
      if (n2 > threshold) {
        lo = mid;
      } else {
        hi = mid;
        at_hi = std::move(v);
      }
      if (std::abs(at_hi.squaredNorm() - threshold) < options.norm_tol || hi - lo < 1e-15 * std::max(1.0, hi)) break;
    }
    const double tj = hi;
    psi = std::move(at_hi);
    const double wx = p.kappa * (x * psi).squaredNorm();
    const double wd = p.gamma_q * (d * psi).squaredNorm();
    if (!(wx + wd > 0.0)) throw IntegrationError("jump with no open channel", tj);
    const Channel ch = uniform() * (wx + wd) < wx ? Channel::cavity : Channel::qubit;
    psi = ch == Channel::cavity ? StateVector(x * psi) : StateVector(d * psi);
    psi /= psi.norm();
    res.clicks.push_back({tj, ch});
    threshold = uniform();
    t = tj;
    at_boundary = false;
    if (next_out < grid.size() && std::abs(t - grid[next_out]) <= eps) record(psi);
  }
  while (next_out < grid.size()) record(psi);
  return res;
}

TrajectoryResult mcwf_run(const SystemParams& p, std::uint64_t seed, double t_end, double dt_out,
                          const TrajectoryOptions& options, const ModelOptions& model_options) {
  p.validate();
  if (p.kappa <= 0.0 && p.gamma_q <= 0.0 && p.Omega_d == 0.0 && p.omega_L <= 0.0) {
    throw ParameterError("omega_L", "nothing to evolve");
  }
  const DrivenModel model = DrivenModel::build(p, model_options);
  const KetPropagator prop(model, true, options.propagator);
  return mcwf_run(model, prop, seed, t_end, dt_out, options);
}

double BundleStats::purity(int n) const {
  if (total == 0) return kNaN;
  const auto it = counts.find(n);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

double BundleStats::purity_stderr(int n) const {
  if (total == 0) return kNaN;
  const double q = purity(n);
  return std::sqrt(q * (1.0 - q) / static_cast<double>(total));
}

double BundleStats::emission_rate() const {
  return observed_time > 0.0 ? static_cast<double>(total) / observed_time : kNaN;
}

BundleStats& BundleStats::merge(const BundleStats& other) {
  for (const auto& [size, count] : other.counts) counts[size] += count;
  total += other.total;
  qubit_clicks += other.qubit_clicks;
  cavity_clicks += other.cavity_clicks;
  observed_time += other.observed_time;
  return *this;
}

namespace {

template <typename F>
void for_each_cluster(const std::vector<ClickRecord>& clicks, double window, F&& f) {
  double first = 0.0, last = 0.0;
  int size = 0;
  for (const auto& c : clicks) {
    if (c.channel != Channel::cavity) continue;
    if (size > 0 && c.time - last < window) {
      ++size;
    } else {
      if (size > 0) f(size, first, last);
      size = 1;
      first = c.time;
    }
    last = c.time;
  }
  if (size > 0) f(size, first, last);
}

}  // namespace

BundleStats classify_bundles(const std::vector<ClickRecord>& clicks, double window, double observed_time) {
  if (!(window > 0.0)) throw ParameterError("window", "must be positive");
  BundleStats s;
  s.observed_time = observed_time;
  for (const auto& c : clicks) {
    if (c.channel == Channel::qubit) ++s.qubit_clicks;
    else ++s.cavity_clicks;
  }
  for_each_cluster(clicks, window, [&](int size, double, double) {
    ++s.counts[size];
    ++s.total;
  });
  return s;
}

std::vector<double> cluster_centers(const std::vector<ClickRecord>& clicks, double window, int size) {
  std::vector<double> out;
  for_each_cluster(clicks, window, [&](int n, double first, double last) {
    if (n == size) out.push_back(0.5 * (first + last));
  });
  return out;
}

BundleStats run_ensemble(const SystemParams& p, const PurityOptions& options, std::uint64_t stream,
                         std::vector<std::vector<ClickRecord>>* clicks_out) {
  p.validate();
  if (options.n_traj < 1) throw ParameterError("n_traj", "must be at least 1");
  if (!(p.kappa > 0.0)) throw ParameterError("kappa", "bundle windows are measured in units of 1/kappa");
  const DrivenModel model = DrivenModel::build(p, options.model);
  const KetPropagator prop(model, true, options.trajectory.propagator);
  TrajectoryOptions to = options.trajectory;
  to.record_populations = false;
  const double window = options.window_kappa / p.kappa;
  const std::uint64_t base = derive_seed(options.seed, stream);

  std::vector<BundleStats> stats(static_cast<std::size_t>(options.n_traj));
  std::vector<std::vector<ClickRecord>> clicks(clicks_out ? stats.size() : 0);
  parallel_for(stats.size(), options.threads, [&](std::size_t i) {
    TrajectoryResult r = mcwf_run(model, prop, derive_seed(base, i), options.t_traj, options.t_traj, to);
    stats[i] = classify_bundles(r.clicks, window, options.t_traj);
    if (clicks_out) clicks[i] = std::move(r.clicks);
  });
  BundleStats total;
  for (const auto& s : stats) total.merge(s);
  if (clicks_out) *clicks_out = std::move(clicks);
  return total;
}

std::vector<PurityPoint> purity_sweep(const SystemParams& p, SweepVariable variable, const std::vector<double>& grid,
                                      const PurityOptions& options) {
  p.validate();
  if (grid.empty()) throw ParameterError("grid", "grid is empty");
  if (options.n_traj < 1) throw ParameterError("n_traj", "must be at least 1");
  std::vector<PurityPoint> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    PurityPoint& pt = out[i];
    pt.value = grid[i];
    try {
      SystemParams q = p;
      if (variable == SweepVariable::kappa) q.kappa = grid[i];
      else q.theta = grid[i];
      const double target = q.omega_q + 2.0 * q.omega_r;
      q.omega_L = find_resonance(q, 2, {target - options.bracket_halfwidth, target + options.bracket_halfwidth},
                                 options.resonance);
      pt.omega_L = q.omega_L;
      pt.stats = run_ensemble(q, options, i);
      pt.pi2 = pt.stats.purity(2);
      pt.stderr_pi2 = pt.stats.purity_stderr(2);
      pt.ok = !pt.stats.empty();
      if (!pt.ok) pt.error = "no emission events";
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
  }
  return out;
}

CorrelationCurve bundle_g2_estimator(const std::vector<std::vector<ClickRecord>>& ensemble,
                                     const std::vector<double>& durations, const std::vector<double>& tau_edges,
                                     double window, int size, long min_events) {
  if (ensemble.size() != durations.size()) throw ParameterError("durations", "one duration per record is required");
  if (tau_edges.size() < 2) throw ParameterError("tau_edges", "need at least two bin edges");
  for (std::size_t i = 1; i < tau_edges.size(); ++i) {
    if (!(tau_edges[i] > tau_edges[i - 1])) throw ParameterError("tau_edges", "edges must be strictly increasing");
  }
  if (tau_edges.front() < 0.0) throw ParameterError("tau_edges", "delays must be non-negative");
  const std::size_t bins = tau_edges.size() - 1;
  const double tau_max = tau_edges.back();

  std::vector<double> counts(bins, 0.0);
  long events = 0;
  double total_time = 0.0;
  std::vector<std::vector<double>> centers(ensemble.size());
  for (std::size_t r = 0; r < ensemble.size(); ++r) {
    centers[r] = cluster_centers(ensemble[r], window, size);
    events += static_cast<long>(centers[r].size());
    total_time += durations[r];
    const auto& c = centers[r];
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        const double dly = c[j] - c[i];
        if (dly >= tau_max) break;
        const auto it = std::upper_bound(tau_edges.begin(), tau_edges.end(), dly);
        if (it == tau_edges.begin()) continue;
        counts[static_cast<std::size_t>(it - tau_edges.begin()) - 1] += 1.0;
      }
    }
  }

  CorrelationCurve curve;
  curve.order = size;
  curve.events = events;
  curve.g.assign(bins, kNaN);
  curve.error.assign(bins, kNaN);
  curve.valid.assign(bins, false);
  if (events < min_events) {
    curve.warning = "only " + std::to_string(events) + " bundle events (recommended " + std::to_string(min_events) + ")";
  }
  const double rate = total_time > 0.0 ? static_cast<double>(events) / total_time : 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = tau_edges[b], hi = tau_edges[b + 1];
    curve.tau.push_back(0.5 * (lo + hi));
    double expected = 0.0;
    for (double dur : durations) {
      const double h = std::min(hi, dur);
      if (h > lo) expected += rate * rate * ((h - lo) * dur - 0.5 * (h * h - lo * lo));
    }
    if (expected > 0.0) {
      curve.g[b] = counts[b] / expected;
      curve.error[b] = std::sqrt(std::max(counts[b], 1.0)) / expected;
      curve.valid[b] = true;
    }
  }
  return curve;
}

void write_clicks_csv(std::ostream& out, const std::vector<std::vector<ClickRecord>>& ensemble) {
  write_header(out, {"trajectory_id", "time", "channel"});
  for (std::size_t r = 0; r < ensemble.size(); ++r) {
    for (const auto& c : ensemble[r]) write_cells(out, {std::to_string(r), format_double(c.time), channel_name(c.channel)});
  }
}

void write_purity_csv(std::ostream& out, SweepVariable variable, const std::vector<PurityPoint>& points) {
  write_header(out, {variable == SweepVariable::kappa ? "kappa" : "theta", "Pi_2", "stderr_Pi_2", "events",
                     "omega_L", "ok", "error"});
  for (const auto& pt : points) {
    std::string err = pt.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    write_cells(out, {format_double(pt.value), format_double(pt.pi2), format_double(pt.stderr_pi2),
                      std::to_string(pt.stats.total), format_double(pt.omega_L), pt.ok ? "1" : "0", err});
  }
}

}  // namespace bundlesim
