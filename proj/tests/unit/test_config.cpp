#include "bundlesim/config.hpp"
#include "bundlesim/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace bundlesim;

namespace {

std::string key_of(const std::string& text, std::optional<ExperimentKind> kind = std::nullopt) {
  try {
    parse_config(text, kind);
  } catch (const ParameterError& e) {
    return e.key();
  }
  return "";
}

std::string first_lines_after_header(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    out += line + "\n";
  }
  return out;
}

}  // namespace

TEST(Config, MinimalSpectrumConfig) {
  const RunConfig c = parse_config(
      "# photon excitation spectrum\n"
      "kind = spectrum\n"
      "omega_q = 5\n"
      "lambda_c = 0.2\n"
      "theta = pi/2\n"
      "detuning_grid = linspace(1.5, 2.5, 11)\n");
  EXPECT_EQ(c.kind, ExperimentKind::spectrum);
  EXPECT_DOUBLE_EQ(c.params.omega_q / c.params.omega_r, 5.0);
  EXPECT_DOUBLE_EQ(c.params.lambda_c / c.params.omega_r, 0.2);
  EXPECT_DOUBLE_EQ(c.params.theta, std::numbers::pi / 2);
  ASSERT_EQ(c.detuning_grid.size(), 11u);
  EXPECT_DOUBLE_EQ(c.detuning_grid[5], 2.0);
  const std::string echo = describe_config(c);
  EXPECT_NE(echo.find("omega_q = 5"), std::string::npos);
  EXPECT_NE(echo.find("n_max = 20"), std::string::npos);
}

TEST(Config, DefaultTruncation) {
  const RunConfig c = parse_config("detuning_grid = 2\n", ExperimentKind::spectrum);
  EXPECT_EQ(c.params.n_max, 20);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(key_of("kappa = -0.1\ndetuning_grid = 2\n", ExperimentKind::spectrum), "kappa");
  EXPECT_EQ(key_of("kapa = 0.1\n", ExperimentKind::spectrum), "kapa");
  EXPECT_EQ(key_of("kappa = 0.1\nkappa = 0.2\n", ExperimentKind::spectrum), "kappa");
  EXPECT_EQ(key_of("theta = half\n", ExperimentKind::spectrum), "theta");
  EXPECT_EQ(key_of("n_max = 2.5\n", ExperimentKind::spectrum), "n_max");
  EXPECT_EQ(key_of("kind = rabi\n", ExperimentKind::spectrum), "kind");
  EXPECT_EQ(key_of("kind = fourier\n"), "kind");
  EXPECT_EQ(key_of("omega_L = 7\ndetuning = 2\ndetuning_grid = 2\n", ExperimentKind::spectrum), "detuning");
}

TEST(Config, EmptyGridsAreRejected) {
  EXPECT_EQ(key_of("kind = spectrum\n"), "detuning_grid");
  EXPECT_EQ(key_of("kind = spectrum\ndetuning_grid =\n"), "detuning_grid");
  EXPECT_EQ(key_of("kind = purity-sweep\n"), "sweep_grid");
  EXPECT_EQ(key_of("kind = g2tau\n"), "tau_grid");
  EXPECT_EQ(key_of("kind = g2tau\ntau_grid = 0.5, 2\n"), "tau_grid");
  EXPECT_EQ(key_of("kind = omega-eff\n"), "theta_grid");
  EXPECT_EQ(key_of("kind = rabi\ndt_out = 1\n"), "t_end");
}

TEST(Config, Numbers) {
  EXPECT_DOUBLE_EQ(parse_number("x", "pi"), std::numbers::pi);
  EXPECT_DOUBLE_EQ(parse_number("x", "pi/6"), std::numbers::pi / 6);
  EXPECT_DOUBLE_EQ(parse_number("x", "2*pi/3"), 2 * std::numbers::pi / 3);
  EXPECT_DOUBLE_EQ(parse_number("x", "-pi"), -std::numbers::pi);
  EXPECT_DOUBLE_EQ(parse_number("x", " 2e-3 "), 2e-3);
  EXPECT_THROW(parse_number("x", "pi/0"), ParameterError);
  EXPECT_THROW(parse_number("x", "3 apples"), ParameterError);
}

TEST(Config, Grids) {
  const auto lin = parse_grid("g", "linspace(0, 1, 5)");
  ASSERT_EQ(lin.size(), 5u);
  EXPECT_DOUBLE_EQ(lin[1], 0.25);
  const auto lg = parse_grid("g", "logspace(-4, -2, 3)");
  ASSERT_EQ(lg.size(), 3u);
  EXPECT_NEAR(lg[0], 1e-4, 1e-18);
  EXPECT_NEAR(lg[2], 1e-2, 1e-16);
  const auto list = parse_grid("g", "pi/6, pi/4, pi/2");
  ASSERT_EQ(list.size(), 3u);
  EXPECT_DOUBLE_EQ(list[1], std::numbers::pi / 4);
  EXPECT_THROW(parse_grid("g", "linspace(0, 1)"), ParameterError);
  EXPECT_THROW(parse_grid("g", "linspace(0, 1, 0)"), ParameterError);
}

TEST(Config, DetuningSetsDriveFrequency) {
  const RunConfig c = parse_config("omega_q = 5\ndetuning = 2\ndetuning_grid = 2\n", ExperimentKind::spectrum);
  EXPECT_DOUBLE_EQ(c.params.omega_L, 7.0);
  EXPECT_DOUBLE_EQ(c.params.detuning(), 2.0);
}

TEST(Config, KindNames) {
  EXPECT_EQ(parse_kind("purity-sweep"), ExperimentKind::purity_sweep);
  EXPECT_EQ(parse_kind("purity_sweep"), ExperimentKind::purity_sweep);
  EXPECT_EQ(parse_kind("omega-eff"), ExperimentKind::omega_eff);
  for (auto k : {ExperimentKind::spectrum, ExperimentKind::rabi, ExperimentKind::trajectories,
                 ExperimentKind::purity_sweep, ExperimentKind::g2tau, ExperimentKind::omega_eff}) {
    EXPECT_EQ(parse_kind(kind_name(k)), k);
  }
}

TEST(Experiments, RabiCsvColumnsAndDeterminism) {
  const std::string text =
      "kind = rabi\nn_max = 6\nomega_L = 7.05\nt_end = 40\ndt_out = 4\nlocate_resonance = false\n";
  const RunConfig c = parse_config(text);
  std::ostringstream a, b;
  EXPECT_EQ(run_experiment(c, a).exit_code, kExitOk);
  EXPECT_EQ(run_experiment(c, b).exit_code, kExitOk);
  EXPECT_EQ(a.str(), b.str());
  const std::string body = first_lines_after_header(a.str());
  EXPECT_EQ(body.substr(0, body.find('\n')), "t,P_0g,P_1e,P_2e,P_3e");
  std::istringstream in(body);
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 11);
  EXPECT_NE(a.str().find("# omega_L = 7.05"), std::string::npos);
}

TEST(Experiments, TrajectoriesAreByteIdentical) {
  const std::string text =
      "kind = trajectories\nn_max = 6\ntheta = pi/6\nOmega_d = 0.3\nomega_L = 6\nkappa = 0.05\ngamma_q = 0.02\n"
      "t_end = 300\ndt_out = 30\nn_traj = 3\nseed = 17\nlocate_resonance = false\n";
  const RunConfig c = parse_config(text);
  std::ostringstream a, b;
  run_experiment(c, a);
  run_experiment(c, b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("trajectory_id,time,channel"), std::string::npos);
}

TEST(Experiments, PurityCsvHeader) {
  std::ostringstream out;
  write_purity_csv(out, SweepVariable::kappa, {});
  EXPECT_EQ(out.str(), "kappa,Pi_2,stderr_Pi_2,events,omega_L,ok,error\n");
}

TEST(Config, ShippedConfigsParse) {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(BUNDLESIM_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    std::ifstream in(entry.path());
    std::stringstream text;
    text << in.rdbuf();
    EXPECT_NO_THROW(parse_config(text.str())) << entry.path();
    ++seen;
  }
  EXPECT_GE(seen, 6);
}
