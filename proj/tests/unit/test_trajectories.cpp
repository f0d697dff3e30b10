#include "bundlesim/evolution.hpp"
#include "bundlesim/rng.hpp"
#include "bundlesim/trajectories.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace bundlesim;

namespace {

SystemParams damped() {
  SystemParams p;
  p.theta = std::numbers::pi / 6;
  p.n_max = 8;
  p.Omega_d = 0.3;
  p.omega_L = 6.0;
  p.kappa = 0.05;
  p.gamma_q = 0.02;
  return p;
}

std::vector<ClickRecord> cavity(const std::vector<double>& times) {
  std::vector<ClickRecord> out;
  for (double t : times) out.push_back({t, Channel::cavity});
  return out;
}

}  // namespace

TEST(Rng, SeedsAreDeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
  UniformSource a(derive_seed(1, 0)), b(derive_seed(1, 0));
  for (int i = 0; i < 100; ++i) {
    const double u = a();
    EXPECT_EQ(u, b());
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Mcwf, NoDissipationNoClicks) {
  SystemParams p = damped();
  p.kappa = 0.0;
  p.gamma_q = 0.0;
  TrajectoryOptions o;
  ModelOptions mo;
  mo.levels = -1;
  const TrajectoryResult r = mcwf_run(p, 11, 200.0, 10.0, o, mo);
  EXPECT_TRUE(r.clicks.empty());
  const EvolutionResult s = schrodinger_evolve(p, basis_state(p.n_max, 0, Qubit::g), 200.0, 10.0);
  // The trajectory starts in the dressed ground state; compare against that.
  const DrivenModel m = DrivenModel::build(p, mo);
  const EvolutionResult s2 = schrodinger_evolve(p, m.ket_to_bare(m.ground_state()), 200.0, 10.0);
  EXPECT_LT((r.populations - s2.populations).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(r.times, s.times);
}

TEST(Mcwf, Reproducible) {
  const SystemParams p = damped();
  const auto a = mcwf_run(p, 42, 2000.0, 100.0);
  const auto b = mcwf_run(p, 42, 2000.0, 100.0);
  const auto c = mcwf_run(p, 43, 2000.0, 100.0);
  ASSERT_FALSE(a.clicks.empty());
  ASSERT_EQ(a.clicks.size(), b.clicks.size());
  for (std::size_t i = 0; i < a.clicks.size(); ++i) {
    EXPECT_EQ(a.clicks[i].time, b.clicks[i].time);
    EXPECT_EQ(a.clicks[i].channel, b.clicks[i].channel);
  }
  EXPECT_EQ(a.populations, b.populations);
  bool differs = a.clicks.size() != c.clicks.size();
  for (std::size_t i = 0; !differs && i < a.clicks.size(); ++i) differs = a.clicks[i].time != c.clicks[i].time;
  EXPECT_TRUE(differs);
  for (std::size_t i = 1; i < a.clicks.size(); ++i) EXPECT_GE(a.clicks[i].time, a.clicks[i - 1].time);
}

TEST(Mcwf, CavityClicksRemoveOnePhotonWhenDecoupled) {
  SystemParams p;
  p.lambda_c = 0.0;
  p.Omega_d = 0.0;
  p.n_max = 6;
  p.kappa = 0.1;
  p.gamma_q = 0.0;
  const DrivenModel m = DrivenModel::build(p);
  const KetPropagator prop(m, true);
  const StateVector start = m.ket_to_frame(basis_state(p.n_max, 3, Qubit::g));
  TrajectoryOptions o;
  o.population_indices = {basis_index(0, Qubit::g), basis_index(1, Qubit::g), basis_index(2, Qubit::g),
                          basis_index(3, Qubit::g)};
  const TrajectoryResult r = mcwf_run(m, prop, 5, 400.0, 0.5, o, start);
  ASSERT_EQ(r.clicks.size(), 3u);
  for (const auto& c : r.clicks) EXPECT_EQ(c.channel, Channel::cavity);
  // Between clicks the photon number is sharp and drops by one at each click.
  std::size_t next = 0;
  int expected = 3;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    while (next < r.clicks.size() && r.clicks[next].time <= r.times[i]) {
      ++next;
      --expected;
    }
    EXPECT_NEAR(r.populations(static_cast<Eigen::Index>(i), expected), 1.0, 1e-9) << "t = " << r.times[i];
  }
}

TEST(Mcwf, EnsembleMatchesMasterEquation) {
  const SystemParams p = damped();
  const DrivenModel m = DrivenModel::build(p);
  const KetPropagator prop(m, true);
  const int n_traj = 500;
  const double t_end = 120.0, dt = 12.0;
  const int col = basis_index(0, Qubit::g);
  TrajectoryOptions o;
  o.population_indices = {col, basis_index(1, Qubit::e)};
  Eigen::MatrixXd sum;
  Eigen::MatrixXd sum2;
  for (int i = 0; i < n_traj; ++i) {
    const auto r = mcwf_run(m, prop, derive_seed(99, static_cast<std::uint64_t>(i)), t_end, dt, o);
    if (i == 0) {
      sum = Eigen::MatrixXd::Zero(r.populations.rows(), r.populations.cols());
      sum2 = sum;
    }
    sum += r.populations;
    sum2 += r.populations.cwiseAbs2();
  }
  const Eigen::MatrixXd mean = sum / n_traj;
  const Eigen::MatrixXd var = (sum2 / n_traj - mean.cwiseAbs2()).cwiseMax(0.0);
  const OperatorMatrix g = m.basis().states.col(0) * m.basis().states.col(0).adjoint();
  const EvolutionResult me = lindblad_evolve(p, g, t_end, dt);
  for (Eigen::Index t = 1; t < mean.rows(); ++t) {
    for (int c = 0; c < 2; ++c) {
      const double ref = me.populations(t, o.population_indices[static_cast<std::size_t>(c)]);
      const double sigma = std::sqrt(std::max(var(t, c), ref * (1.0 - ref)) / n_traj);
      EXPECT_NEAR(mean(t, c), ref, 3.0 * sigma + 1e-9) << "t index " << t << " col " << c;
    }
  }
}

TEST(Bundles, SyntheticClusters) {
  const double kappa = 2e-3;
  const BundleStats s = classify_bundles(cavity({0.0, 0.5 / kappa, 100.0 / kappa}), 10.0 / kappa);
  EXPECT_EQ(s.total, 2);
  EXPECT_EQ(s.counts.at(2), 1);
  EXPECT_EQ(s.counts.at(1), 1);
  EXPECT_DOUBLE_EQ(s.purity(2), 0.5);
  EXPECT_DOUBLE_EQ(s.purity(1) + s.purity(2), 1.0);
}

TEST(Bundles, QubitClicksDoNotChangeSizes) {
  std::vector<ClickRecord> clicks = cavity({0.0, 1.0, 50.0});
  clicks.insert(clicks.begin() + 1, {0.5, Channel::qubit});
  const BundleStats s = classify_bundles(clicks, 10.0);
  EXPECT_EQ(s.qubit_clicks, 1);
  EXPECT_EQ(s.counts.at(2), 1);
  EXPECT_EQ(s.counts.at(1), 1);
}

TEST(Bundles, EmptyInput) {
  const BundleStats s = classify_bundles({}, 1.0);
  EXPECT_EQ(s.total, 0);
  EXPECT_TRUE(std::isnan(s.purity(2)));
  EXPECT_TRUE(s.empty());
  EXPECT_THROW(classify_bundles({}, 0.0), ParameterError);
}

TEST(Bundles, MergeIsOrderIndependent) {
  const BundleStats a = classify_bundles(cavity({0.0, 1.0, 30.0}), 5.0, 100.0);
  const BundleStats b = classify_bundles(cavity({0.0, 1.0, 2.0}), 5.0, 50.0);
  const BundleStats c = classify_bundles(cavity({7.0}), 5.0, 10.0);
  BundleStats x = a;
  x.merge(b).merge(c);
  BundleStats y = c;
  y.merge(a).merge(b);
  EXPECT_EQ(x.counts, y.counts);
  EXPECT_EQ(x.total, y.total);
  EXPECT_DOUBLE_EQ(x.observed_time, y.observed_time);
  EXPECT_DOUBLE_EQ(x.emission_rate(), 4.0 / 160.0);
  double sum = 0.0;
  for (const auto& [n, count] : x.counts) sum += x.purity(n);
  EXPECT_DOUBLE_EQ(sum, 1.0);
  EXPECT_DOUBLE_EQ(x.purity(2), 0.25);
  EXPECT_NEAR(x.purity_stderr(2), std::sqrt(0.25 * 0.75 / 4.0), 1e-15);
}

TEST(Estimator, PoissonPairsAreFlat) {
  UniformSource u(derive_seed(3, 0));
  const double rate = 1e-3, dur = 2e6, window = 5.0;
  std::vector<std::vector<ClickRecord>> ensemble(4);
  for (auto& rec : ensemble) {
    double t = 0.0;
    for (;;) {
      t += -std::log(u()) / rate;
      if (t > dur) break;
      rec.push_back({t, Channel::cavity});
      rec.push_back({t + 1.0, Channel::cavity});
    }
  }
  std::vector<double> edges;
  for (int i = 0; i <= 10; ++i) edges.push_back(200.0 + 300.0 * i);
  const CorrelationCurve c = bundle_g2_estimator(ensemble, std::vector<double>(4, dur), edges, window);
  EXPECT_GT(c.events, 1000);
  EXPECT_TRUE(c.warning.empty());
  for (std::size_t i = 0; i < c.g.size(); ++i) EXPECT_NEAR(c.g[i], 1.0, 3.0 * c.error[i] + 0.02);
}

TEST(Estimator, WarnsOnFewEvents) {
  const std::vector<std::vector<ClickRecord>> ensemble{cavity({0.0, 1.0, 500.0, 501.0})};
  const CorrelationCurve c = bundle_g2_estimator(ensemble, {1000.0}, {100.0, 600.0}, 5.0);
  EXPECT_EQ(c.events, 2);
  EXPECT_FALSE(c.warning.empty());
  EXPECT_THROW(bundle_g2_estimator(ensemble, {}, {100.0, 600.0}, 5.0), ParameterError);
}

TEST(ClickCsv, Format) {
  std::ostringstream out;
  write_clicks_csv(out, {{{1.5, Channel::cavity}}, {{2.0, Channel::qubit}}});
  EXPECT_EQ(out.str(), "trajectory_id,time,channel\n0,1.5,cavity\n1,2,qubit\n");
}

TEST(PuritySweep, Validation) {
  const SystemParams p = damped();
  EXPECT_THROW(purity_sweep(p, SweepVariable::kappa, {}), ParameterError);
  PurityOptions o;
  o.n_traj = 0;
  EXPECT_THROW(purity_sweep(p, SweepVariable::kappa, {0.01}, o), ParameterError);
}

TEST(PuritySweep, FlagsFailingPoint) {
  SystemParams p = damped();
  PurityOptions o;
  o.n_traj = 1;
  o.t_traj = 10.0;
  o.bracket_halfwidth = 1e-3;  // far too narrow to contain the resonance peak
  o.resonance.scan_step = 2e-4;
  const auto pts = purity_sweep(p, SweepVariable::theta, {std::numbers::pi / 2}, o);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_FALSE(pts[0].ok);
  EXPECT_FALSE(pts[0].error.empty());
}
