#include "bundlesim/propagator.hpp"

#include <cmath>
#include <numbers>

namespace bundlesim {

namespace {

constexpr Complex kI{0.0, 1.0};

// A_mn * exp(i (E_m - E_n) s)
void rotate_into(const OperatorMatrix& a, const Eigen::VectorXcd& phase, OperatorMatrix& out) {
  out = phase.asDiagonal() * a * phase.conjugate().asDiagonal();
}

Eigen::VectorXcd phases(const Eigen::VectorXd& energies, double s) {
  Eigen::VectorXcd ph(energies.size());
  for (Eigen::Index m = 0; m < energies.size(); ++m) ph(m) = std::polar(1.0, energies(m) * s);
  return ph;
}

// out_i = Z_i^dag for each K x K block.
void block_adjoint(const Eigen::MatrixXcd& z, Eigen::MatrixXcd& out, Eigen::Index k) {
  out.resize(z.rows(), z.cols());
  const Eigen::Index blocks = z.cols() / k;
  for (Eigen::Index i = 0; i < blocks; ++i) out.middleCols(i * k, k) = z.middleCols(i * k, k).adjoint();
}

// Shift [t0, t1] by a whole number of periods so that t0 lies in [0, T).
std::pair<double, double> reduce(double t0, double t1, double period) {
  const double n = std::floor(t0 / period);
  return {t0 - n * period, t1 - n * period};
}

IntegratorOptions capped(const PropagatorOptions& o, double period) {
  IntegratorOptions io = o.integrator;
  const double cap = period / std::max(1, o.steps_per_period_min);
  io.max_step = io.max_step > 0.0 ? std::min(io.max_step, cap) : cap;
  io.min_step = std::min(io.min_step, 1e-9 * period);
  return io;
}

struct Split {
  long whole_periods;
  double head_end;   // first boundary at or after t0
  double tail_start; // last boundary at or before t1
};

}  // namespace

Eigen::VectorXd hermitian_coords(const OperatorMatrix& rho) {
  const Eigen::Index k = rho.rows();
  Eigen::VectorXd r(k * k);
  for (Eigen::Index m = 0; m < k; ++m) {
    r(m * k + m) = rho(m, m).real();
    for (Eigen::Index n = m + 1; n < k; ++n) {
      r(m * k + n) = std::numbers::sqrt2 * rho(m, n).real();
      r(n * k + m) = std::numbers::sqrt2 * rho(m, n).imag();
    }
  }
  return r;
}

OperatorMatrix from_hermitian_coords(const Eigen::VectorXd& r, int levels) {
  const Eigen::Index k = levels;
  if (r.size() != k * k) throw ParameterError("coords", "size does not match level count");
  OperatorMatrix rho(k, k);
  constexpr double inv = 1.0 / std::numbers::sqrt2;
  for (Eigen::Index m = 0; m < k; ++m) {
    rho(m, m) = r(m * k + m);
    for (Eigen::Index n = m + 1; n < k; ++n) {
      const Complex v(r(m * k + n) * inv, r(n * k + m) * inv);
      rho(m, n) = v;
      rho(n, m) = std::conj(v);
    }
  }
  return rho;
}

// ---------------------------------------------------------------------------
// KetPropagator

KetPropagator::KetPropagator(const DrivenModel& model, bool with_decay, const PropagatorOptions& options)
    : energies_(model.energies()),
      drive_(model.drive()),
      decay_half_(0.5 * model.decay()),
      with_decay_(with_decay),
      omega_L_(model.params().omega_L),
      period_(model.period()),
      options_(options) {
  if (options_.n_phase < 1) throw ParameterError("n_phase", "must be at least 1");
  if (!options_.build_maps) return;
  const int k = levels();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(k, k);
  phase_maps_.reserve(options_.n_phase + 1);
  phase_maps_.push_back(u);
  double hint = 0.0;
  for (int p = 0; p < options_.n_phase; ++p) {
    const double ta = period_ * p / options_.n_phase;
    const double tb = period_ * (p + 1) / options_.n_phase;
    integrate_segment(u, ta, tb, hint);
    phase_maps_.push_back(u);
  }
  if (!with_decay_) {
    // Nearest unitary, so repeated powers keep the norm to round-off.
    for (auto& m : phase_maps_) {
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
      m = svd.matrixU() * svd.matrixV().adjoint();
    }
  }
}

void KetPropagator::integrate_segment(Eigen::MatrixXcd& y, double t0, double t1, double& hint) const {
  if (t1 <= t0) return;
  OperatorMatrix generator(levels(), levels());
  OperatorMatrix rotated;
  auto f = [&](double t, const Eigen::MatrixXcd& state, Eigen::MatrixXcd& dy) {
    generator = std::cos(omega_L_ * t) * drive_;
    if (with_decay_) generator -= kI * decay_half_;
    rotate_into(generator, phases(energies_, t - t0), rotated);
    dy.noalias() = -kI * (rotated * state);
  };
  const auto stats = integrate_dopri5(f, t0, t1, y, capped(options_, period_), hint);
  rhs_evals_ += stats.rhs_evals;
  y = phases(energies_, -(t1 - t0)).asDiagonal() * y;
}

void KetPropagator::propagate(Eigen::MatrixXcd& kets, double t0, double t1) const {
  if (t1 < t0) throw IntegrationError("backward propagation requested", t0);
  const auto [a, b] = reduce(t0, t1, period_);
  double hint = 0.0;
  integrate_segment(kets, a, b, hint);
}

void KetPropagator::advance(StateVector& psi, double t0, double t1,
                            MapPowers<Eigen::MatrixXcd>* powers) const {
  if (t1 < t0) throw IntegrationError("backward propagation requested", t0);
  Eigen::MatrixXcd y = psi;
  if (!has_maps()) {
    propagate(y, t0, t1);
    psi = y.col(0);
    return;
  }
  const double eps = 1e-12 * period_;
  double first = std::ceil((t0 - eps) / period_) * period_;
  if (first < t0) first = t0;
  if (t1 <= first + eps) {
    propagate(y, t0, t1);
    psi = y.col(0);
    return;
  }
  propagate(y, t0, first);
  const long whole = static_cast<long>(std::floor((t1 - first + eps) / period_));
  if (whole > 0) {
    if (powers != nullptr) {
      y = powers->apply(Eigen::MatrixXcd(y), whole);
    } else {
      for (long i = 0; i < whole; ++i) y = period_map() * y;
    }
  }
  const double tail = t1 - (first + whole * period_);
  if (tail > eps) {
    const double slot = period_ / options_.n_phase;
    const int k = std::min(options_.n_phase, static_cast<int>(std::floor((tail + eps) / slot)));
    y = phase_maps_[k] * y;
    const double done = k * slot;
    if (tail - done > eps) {
      double hint = 0.0;
      integrate_segment(y, done, tail, hint);
    }
  }
  psi = y.col(0);
}

// ---------------------------------------------------------------------------
// DensityPropagator

DensityPropagator::DensityPropagator(const DrivenModel& model, const PropagatorOptions& options)
    : energies_(model.energies()),
      drive_(model.drive()),
      decay_half_(0.5 * model.decay()),
      x_(model.x()),
      d_(model.d()),
      kappa_(model.params().kappa),
      gamma_(model.params().gamma_q),
      omega_L_(model.params().omega_L),
      period_(model.period()),
      options_(options) {
  if (options_.n_phase < 1) throw ParameterError("n_phase", "must be at least 1");
  if (!options_.build_maps) return;
  const int k = levels();
  const int kk = k * k;
  // Batch of all Hermitian basis matrices.
  Eigen::MatrixXcd batch = Eigen::MatrixXcd::Zero(k, static_cast<Eigen::Index>(k) * kk);
  for (int j = 0; j < kk; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(kk);
    e(j) = 1.0;
    batch.middleCols(static_cast<Eigen::Index>(j) * k, k) = from_hermitian_coords(e, k);
  }
  phase_maps_.reserve(options_.n_phase + 1);
  phase_maps_.push_back(Eigen::MatrixXd::Identity(kk, kk));
  double hint = 0.0;
  for (int p = 0; p < options_.n_phase; ++p) {
    const double ta = period_ * p / options_.n_phase;
    const double tb = period_ * (p + 1) / options_.n_phase;
    integrate_segment(batch, ta, tb, hint);
    Eigen::MatrixXd map(kk, kk);
    for (int j = 0; j < kk; ++j) {
      map.col(j) = hermitian_coords(batch.middleCols(static_cast<Eigen::Index>(j) * k, k));
    }
    phase_maps_.push_back(std::move(map));
  }
}

void DensityPropagator::rhs_interaction(double s, double t_abs, const Eigen::MatrixXcd& b,
                                        Eigen::MatrixXcd& out) const {
  const Eigen::Index k = levels();
  const Eigen::VectorXcd ph = phases(energies_, s);
  OperatorMatrix gen = std::cos(omega_L_ * t_abs) * drive_ - kI * decay_half_;
  OperatorMatrix rotated;
  rotate_into(gen, ph, rotated);
  Eigen::MatrixXcd y(b.rows(), b.cols());
  y.noalias() = -kI * (rotated * b);
  block_adjoint(y, out, k);
  out += y;

  Eigen::MatrixXcd z(b.rows(), b.cols()), w;
  auto add_jump = [&](const OperatorMatrix& j, double rate) {
    if (rate == 0.0) return;
    rotate_into(j, ph, rotated);
    z.noalias() = rotated * b;
    block_adjoint(z, w, k);
    out.noalias() += rate * (rotated * w);
  };
  add_jump(x_, kappa_);
  add_jump(d_, gamma_);
}

void DensityPropagator::rhs(double t, const Eigen::MatrixXcd& batch, Eigen::MatrixXcd& out) const {
  rhs_interaction(0.0, t, batch, out);
  const Eigen::Index k = levels();
  const Eigen::Index blocks = batch.cols() / k;
  for (Eigen::Index i = 0; i < blocks; ++i) {
    const auto rho = batch.middleCols(i * k, k);
    for (Eigen::Index n = 0; n < k; ++n) {
      for (Eigen::Index m = 0; m < k; ++m) {
        out(m, i * k + n) += -kI * (energies_(m) - energies_(n)) * rho(m, n);
      }
    }
  }
}

void DensityPropagator::integrate_segment(Eigen::MatrixXcd& y, double t0, double t1, double& hint) const {
  if (t1 <= t0) return;
  auto f = [&](double t, const Eigen::MatrixXcd& state, Eigen::MatrixXcd& dy) {
    rhs_interaction(t - t0, t, state, dy);
  };
  integrate_dopri5(f, t0, t1, y, capped(options_, period_), hint);
  const Eigen::VectorXcd back = phases(energies_, -(t1 - t0));
  const Eigen::Index k = levels();
  const Eigen::Index blocks = y.cols() / k;
  for (Eigen::Index i = 0; i < blocks; ++i) {
    auto blk = y.middleCols(i * k, k);
    blk = back.asDiagonal() * blk * back.conjugate().asDiagonal();
  }
}

void DensityPropagator::propagate(Eigen::MatrixXcd& batch, double t0, double t1) const {
  if (t1 < t0) throw IntegrationError("backward propagation requested", t0);
  const auto [a, b] = reduce(t0, t1, period_);
  double hint = 0.0;
  integrate_segment(batch, a, b, hint);
}

Eigen::VectorXd DensityPropagator::advance(const Eigen::VectorXd& r, double t0, double t1,
                                           MapPowers<Eigen::MatrixXd>* powers) const {
  if (t1 < t0) throw IntegrationError("backward propagation requested", t0);
  const int k = levels();
  const double eps = 1e-12 * period_;
  auto direct = [&](const Eigen::VectorXd& v, double a, double b) {
    if (b - a <= eps) return v;
    Eigen::MatrixXcd m = from_hermitian_coords(v, k);
    propagate(m, a, b);
    return Eigen::VectorXd(hermitian_coords(m));
  };
  if (!has_maps()) return direct(r, t0, t1);
  double first = std::ceil((t0 - eps) / period_) * period_;
  if (first < t0) first = t0;
  if (t1 <= first + eps) return direct(r, t0, t1);
  Eigen::VectorXd v = direct(r, t0, first);
  const long whole = static_cast<long>(std::floor((t1 - first + eps) / period_));
  if (whole > 0) {
    if (powers != nullptr) {
      v = powers->apply(std::move(v), whole);
    } else {
      for (long i = 0; i < whole; ++i) v = period_map() * v;
    }
  }
  const double tail = t1 - (first + whole * period_);
  if (tail > eps) {
    const double slot = period_ / options_.n_phase;
    const int idx = std::min(options_.n_phase, static_cast<int>(std::floor((tail + eps) / slot)));
    v = phase_maps_[idx] * v;
    v = direct(v, idx * slot, tail);
  }
  return v;
}

}  // namespace bundlesim
