#include "bundlesim/config.hpp"

#include "bundlesim/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace bundlesim {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool plain_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

long parse_integer(std::string_view key, std::string_view text) {
  const double v = parse_number(key, text);
  if (v != std::floor(v) || std::abs(v) > 9e15) throw ParameterError(std::string(key), "expected an integer");
  return static_cast<long>(v);
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ParameterError(std::string(key), "expected true or false, got '" + std::string(text) + "'");
}

std::string grid_text(const std::vector<double>& g) {
  std::string s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) s += ", ";
    s += format_double(g[i]);
  }
  return s;
}

void require_grid(const char* key, const std::vector<double>& g) {
  if (g.empty()) throw ParameterError(key, "grid is empty");
  for (double v : g) {
    if (!std::isfinite(v)) throw ParameterError(key, "grid values must be finite");
  }
}

void require_increasing(const char* key, const std::vector<double>& g) {
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!(g[i] > g[i - 1])) throw ParameterError(key, "grid must be strictly increasing");
  }
}

}  // namespace

std::string_view kind_name(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::spectrum: return "spectrum";
    case ExperimentKind::rabi: return "rabi";
    case ExperimentKind::trajectories: return "trajectories";
    case ExperimentKind::purity_sweep: return "purity-sweep";
    case ExperimentKind::g2tau: return "g2tau";
    case ExperimentKind::omega_eff: return "omega-eff";
  }
  return "unknown";
}

ExperimentKind parse_kind(std::string_view name) {
  std::string n(name);
  std::replace(n.begin(), n.end(), '_', '-');
  for (auto k : {ExperimentKind::spectrum, ExperimentKind::rabi, ExperimentKind::trajectories,
                 ExperimentKind::purity_sweep, ExperimentKind::g2tau, ExperimentKind::omega_eff}) {
    if (n == kind_name(k)) return k;
  }
  throw ParameterError("kind", "unknown experiment '" + std::string(name) + "'");
}

double parse_number(std::string_view key, std::string_view text) {
  const std::string_view s = trim(text);
  double v = 0.0;
  if (plain_number(s, v)) return v;
  // [a*]pi[/b]
  const auto pi = s.find("pi");
  if (pi != std::string_view::npos) {
    double factor = 1.0, divisor = 1.0;
    std::string_view head = trim(s.substr(0, pi));
    std::string_view tail = trim(s.substr(pi + 2));
    bool ok = true;
    if (head == "-") {
      factor = -1.0;
    } else if (!head.empty()) {
      ok = head.back() == '*' && plain_number(trim(head.substr(0, head.size() - 1)), factor);
    }
    if (ok && !tail.empty()) ok = tail.front() == '/' && plain_number(trim(tail.substr(1)), divisor) && divisor != 0.0;
    if (ok) return factor * std::numbers::pi / divisor;
  }
  throw ParameterError(std::string(key), "cannot parse number '" + std::string(s) + "'");
}

std::vector<double> parse_grid(std::string_view key, std::string_view text) {
  const std::string_view s = trim(text);
  if (s.empty()) return {};
  for (const std::string_view fn : {std::string_view("linspace"), std::string_view("logspace")}) {
    if (s.substr(0, fn.size()) != fn) continue;
    const std::string_view rest = trim(s.substr(fn.size()));
    if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') {
      throw ParameterError(std::string(key), "expected " + std::string(fn) + "(a, b, n)");
    }
    const auto args = split(rest.substr(1, rest.size() - 2), ',');
    if (args.size() != 3) throw ParameterError(std::string(key), "expected " + std::string(fn) + "(a, b, n)");
    const double a = parse_number(key, args[0]);
    const double b = parse_number(key, args[1]);
    const long n = parse_integer(key, args[2]);
    if (n < 1) throw ParameterError(std::string(key), "point count must be positive");
    std::vector<double> g;
    for (long i = 0; i < n; ++i) {
      const double x = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
      g.push_back(fn == "logspace" ? std::pow(10.0, x) : x);
    }
    return g;
  }
  std::vector<double> g;
  for (const auto item : split(s, ',')) g.push_back(parse_number(key, item));
  return g;
}

RunConfig parse_config(std::string_view text, std::optional<ExperimentKind> kind) {
  RunConfig c;
  if (kind) c.kind = *kind;
  using Setter = std::function<void(std::string_view, std::string_view)>;
  auto num = [](double& field) -> Setter { return [&field](auto k, auto v) { field = parse_number(k, v); }; };
  auto integer = [](auto& field) -> Setter {
    return [&field](auto k, auto v) { field = static_cast<std::remove_reference_t<decltype(field)>>(parse_integer(k, v)); };
  };
  auto grid = [](std::vector<double>& field) -> Setter { return [&field](auto k, auto v) { field = parse_grid(k, v); }; };
  auto str = [](std::string& field) -> Setter { return [&field](auto, auto v) { field = std::string(v); }; };
  auto flag = [](bool& field) -> Setter { return [&field](auto k, auto v) { field = parse_bool(k, v); }; };

  std::optional<double> detuning;
  const std::map<std::string, Setter, std::less<>> setters{
      {"kind",
       [&](auto, auto v) {
         const ExperimentKind k = parse_kind(v);
         if (kind && k != *kind) {
           throw ParameterError("kind", "config says " + std::string(kind_name(k)) + " but " +
                                            std::string(kind_name(*kind)) + " was requested");
         }
         c.kind = k;
       }},
      {"omega_r", num(c.params.omega_r)},
      {"omega_q", num(c.params.omega_q)},
      {"lambda_c", num(c.params.lambda_c)},
      {"theta", num(c.params.theta)},
      {"Omega_d", num(c.params.Omega_d)},
      {"omega_L", num(c.params.omega_L)},
      {"detuning", [&](auto k, auto v) { detuning = parse_number(k, v); }},
      {"kappa", num(c.params.kappa)},
      {"gamma_q", num(c.params.gamma_q)},
      {"n_max", integer(c.params.n_max)},
      {"seed",
       [&](auto k, auto v) {
         const auto s = trim(v);
         std::uint64_t out = 0;
         const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
         if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
           throw ParameterError(std::string(k), "expected a non-negative integer");
         }
         c.seed = out;
       }},
      {"threads", integer(c.threads)},
      {"output", str(c.output)},
      {"detuning_grid", grid(c.detuning_grid)},
      {"tau_grid", grid(c.tau_grid)},
      {"sweep_grid", grid(c.sweep_grid)},
      {"sweep", str(c.sweep)},
      {"theta_grid", grid(c.theta_grid)},
      {"t_end", num(c.t_end)},
      {"dt_out", num(c.dt_out)},
      {"n_traj", integer(c.n_traj)},
      {"t_traj", num(c.t_traj)},
      {"window_kappa", num(c.window_kappa)},
      {"order", integer(c.order)},
      {"populations",
       [&](auto, auto v) {
         c.populations.clear();
         for (const auto item : split(v, ',')) c.populations.emplace_back(item);
       }},
      {"locate_resonance", flag(c.locate_resonance)},
      {"resonance_order", integer(c.resonance_order)},
      {"bracket_halfwidth", num(c.bracket_halfwidth)},
      {"duration", num(c.duration)},
      {"levels", integer(c.levels)},
      {"level_window", num(c.level_window)},
      {"excluded_fraction", num(c.excluded_fraction)},
      {"n_phase", integer(c.n_phase)},
      {"corr_phases", integer(c.corr_phases)},
      {"rtol", num(c.rtol)},
      {"atol", num(c.atol)},
      {"steady_tolerance", num(c.steady_tolerance)},
      {"steady_method", str(c.steady_method)},
      {"max_periods", integer(c.max_periods)},
  };

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  std::map<std::string, int, std::less<>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = line;
    if (const auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw ParameterError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    const std::string key(trim(l.substr(0, eq)));
    const std::string_view value = trim(l.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ParameterError(key, "unknown key");
    if (seen.count(key)) throw ParameterError(key, "given more than once (line " + std::to_string(line_no) + ")");
    seen[key] = line_no;
    it->second(key, value);
    c.entries.emplace_back(key, std::string(value));
  }
  if (detuning) {
    if (seen.count("omega_L")) throw ParameterError("detuning", "give either omega_L or detuning, not both");
    c.params.omega_L = c.params.omega_q + *detuning * c.params.omega_r;
  }
  validate_config(c);
  return c;
}

void validate_config(const RunConfig& c) {
  c.params.validate();
  if (c.threads < 0) throw ParameterError("threads", "must be non-negative");
  if (c.n_phase < 1) throw ParameterError("n_phase", "must be at least 1");
  if (c.corr_phases < 1 || c.n_phase % c.corr_phases != 0) {
    throw ParameterError("corr_phases", "must divide n_phase");
  }
  if (!(c.rtol > 0.0)) throw ParameterError("rtol", "must be positive");
  if (!(c.atol > 0.0)) throw ParameterError("atol", "must be positive");
  if (!(c.steady_tolerance > 0.0)) throw ParameterError("steady_tolerance", "must be positive");
  if (c.steady_method != "fixed_point" && c.steady_method != "iterate") {
    throw ParameterError("steady_method", "expected fixed_point or iterate");
  }
  if (c.max_periods < 1) throw ParameterError("max_periods", "must be positive");
  if (!(c.excluded_fraction >= 0.0 && c.excluded_fraction < 1.0)) {
    throw ParameterError("excluded_fraction", "must lie in [0, 1)");
  }
  if (!(c.level_window > 0.0)) throw ParameterError("level_window", "must be positive");
  if (!(c.bracket_halfwidth > 0.0)) throw ParameterError("bracket_halfwidth", "must be positive");
  if (!(c.window_kappa > 0.0)) throw ParameterError("window_kappa", "must be positive");
  if (c.resonance_order < 0 || c.resonance_order > c.params.n_max) {
    throw ParameterError("resonance_order", "photon number outside the truncation");
  }
  for (const auto& label : c.populations) {
    if (label.size() < 2 || (label.back() != 'g' && label.back() != 'e')) {
      throw ParameterError("populations", "labels look like 0g or 2e, got '" + label + "'");
    }
  }

  switch (c.kind) {
    case ExperimentKind::spectrum:
      require_grid("detuning_grid", c.detuning_grid);
      require_increasing("detuning_grid", c.detuning_grid);
      if (!(c.params.kappa > 0.0)) throw ParameterError("kappa", "spectrum needs kappa > 0");
      if (!(c.params.gamma_q > 0.0)) throw ParameterError("gamma_q", "spectrum needs gamma_q > 0");
      break;
    case ExperimentKind::rabi:
      if (!(c.t_end > 0.0)) throw ParameterError("t_end", "must be positive");
      if (!(c.dt_out > 0.0)) throw ParameterError("dt_out", "must be positive");
      break;
    case ExperimentKind::trajectories:
      if (!(c.t_end > 0.0)) throw ParameterError("t_end", "must be positive");
      if (!(c.dt_out > 0.0)) throw ParameterError("dt_out", "must be positive");
      if (c.n_traj < 1) throw ParameterError("n_traj", "must be at least 1");
      if (!(c.params.kappa > 0.0) && !(c.params.gamma_q > 0.0)) {
        throw ParameterError("kappa", "trajectories need kappa > 0 or gamma_q > 0");
      }
      break;
    case ExperimentKind::purity_sweep:
      require_grid("sweep_grid", c.sweep_grid);
      if (c.sweep != "kappa" && c.sweep != "theta") throw ParameterError("sweep", "expected kappa or theta");
      if (c.sweep == "kappa") {
        for (double v : c.sweep_grid) {
          if (!(v > 0.0)) throw ParameterError("sweep_grid", "kappa values must be positive");
        }
      }
      if (c.n_traj < 1) throw ParameterError("n_traj", "must be at least 1");
      if (!(c.t_traj > 0.0)) throw ParameterError("t_traj", "must be positive");
      break;
    case ExperimentKind::g2tau:
      require_grid("tau_grid", c.tau_grid);
      require_increasing("tau_grid", c.tau_grid);
      if (c.tau_grid.front() < 1.0) throw ParameterError("tau_grid", "delays are in units of 1/kappa and start at 1");
      if (c.order != 1 && c.order != 2) throw ParameterError("order", "expected 1 or 2");
      if (!(c.params.kappa > 0.0)) throw ParameterError("kappa", "g2tau needs kappa > 0");
      break;
    case ExperimentKind::omega_eff:
      require_grid("theta_grid", c.theta_grid);
      if (!(c.duration >= 0.0)) throw ParameterError("duration", "must be non-negative");
      break;
  }
}

std::string describe_config(const RunConfig& c) {
  std::ostringstream o;
  auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
  auto kd = [&](const char* k, double v) { kv(k, format_double(v)); };
  kv("kind", std::string(kind_name(c.kind)));
  kd("omega_r", c.params.omega_r);
  kd("omega_q", c.params.omega_q);
  kd("lambda_c", c.params.lambda_c);
  kd("theta", c.params.theta);
  kd("Omega_d", c.params.Omega_d);
  kd("omega_L", c.params.omega_L);
  kd("kappa", c.params.kappa);
  kd("gamma_q", c.params.gamma_q);
  kv("n_max", std::to_string(c.params.n_max));
  kv("seed", std::to_string(c.seed));
  switch (c.kind) {
    case ExperimentKind::spectrum: kv("detuning_grid", grid_text(c.detuning_grid)); break;
    case ExperimentKind::rabi:
    case ExperimentKind::trajectories: {
      kd("t_end", c.t_end);
      kd("dt_out", c.dt_out);
      std::string pops;
      for (std::size_t i = 0; i < c.populations.size(); ++i) pops += (i ? ", " : "") + c.populations[i];
      kv("populations", pops);
      if (c.kind == ExperimentKind::trajectories) {
        kv("n_traj", std::to_string(c.n_traj));
        kd("window_kappa", c.window_kappa);
      }
      break;
    }
    case ExperimentKind::purity_sweep:
      kv("sweep", c.sweep);
      kv("sweep_grid", grid_text(c.sweep_grid));
      kv("n_traj", std::to_string(c.n_traj));
      kd("t_traj", c.t_traj);
      kd("window_kappa", c.window_kappa);
      break;
    case ExperimentKind::g2tau:
      kv("tau_grid", grid_text(c.tau_grid));
      kv("order", std::to_string(c.order));
      break;
    case ExperimentKind::omega_eff:
      kv("theta_grid", grid_text(c.theta_grid));
      kd("duration", c.duration);
      break;
  }
  kv("locate_resonance", c.locate_resonance ? "true" : "false");
  kv("resonance_order", std::to_string(c.resonance_order));
  kd("bracket_halfwidth", c.bracket_halfwidth);
  kv("levels", std::to_string(c.levels));
  kd("level_window", c.level_window);
  kd("excluded_fraction", c.excluded_fraction);
  kv("n_phase", std::to_string(c.n_phase));
  kv("corr_phases", std::to_string(c.corr_phases));
  kd("rtol", c.rtol);
  kd("atol", c.atol);
  kd("steady_tolerance", c.steady_tolerance);
  kv("steady_method", c.steady_method);
  kv("max_periods", std::to_string(c.max_periods));
  return o.str();
}

}  // namespace bundlesim
