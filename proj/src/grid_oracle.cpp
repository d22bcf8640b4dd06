#include "qtrack/grid_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <fftw3.h>

namespace qtrack {
namespace {

constexpr Complex kI{0.0, 1.0};

// The FFTW planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlan {
 public:
  explicit FftPlan(int n) : n_(n) {
    buf_ = fftw_alloc_complex(n);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  // Unnormalized forward (e^{−ikx}) or backward transform, in place on v.
  void run(CVec& v, bool forward) const {
    std::copy(v.data(), v.data() + n_, reinterpret_cast<Complex*>(buf_));
    fftw_execute(forward ? fwd_ : bwd_);
    std::copy(reinterpret_cast<Complex*>(buf_), reinterpret_cast<Complex*>(buf_) + n_, v.data());
  }

 private:
  int n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Vec momentum_density(const GridState& gs) {
  FftPlan plan(gs.size());
  CVec v = gs.amplitudes();
  plan.run(v, true);
  return v.cwiseAbs2();
}

}  // namespace

double GridSpec::p(int k) const {
  const int kk = k < n_points / 2 ? k : k - n_points;
  return 2.0 * std::numbers::pi * kk / (n_points * dx());
}

void GridSpec::validate() const {
  if (!is_power_of_two(n_points)) throw Error("grid n_points must be a power of two");
  if (!(x_max > x_min)) throw Error("grid needs x_max > x_min");
}

GridState::GridState(GridSpec spec, CVec amplitudes) : spec_(spec), psi_(std::move(amplitudes)) {
  spec_.validate();
  if (psi_.size() != spec_.n_points) throw Error("grid amplitudes have the wrong length");
}

double GridState::norm2() const { return psi_.squaredNorm() * spec_.dx(); }

double GridState::normalize() {
  const double n2 = norm2();
  if (!(n2 > 0.0)) throw Error("cannot normalize a zero grid state");
  psi_ /= std::sqrt(n2);
  return n2;
}

double GridState::boundary_mass(double fraction) const {
  const int edge = std::max(1, static_cast<int>(fraction / 2.0 * size()));
  double mass = 0.0;
  for (int j = 0; j < edge; ++j) mass += std::norm(psi_(j)) + std::norm(psi_(size() - 1 - j));
  return mass * spec_.dx();
}

double GridState::momentum_boundary_mass(double fraction) const {
  const Vec dens = momentum_density(*this);
  const double total = dens.sum();
  // FFT order: the largest |p| sit around index n/2.
  const int half_edge = std::max(1, static_cast<int>(fraction / 2.0 * size()));
  double mass = 0.0;
  for (int j = size() / 2 - half_edge; j < size() / 2 + half_edge; ++j) mass += dens(j);
  return mass / total;
}

double GridState::position_mean() const {
  double acc = 0.0, total = 0.0;
  for (int j = 0; j < size(); ++j) {
    acc += spec_.x(j) * std::norm(psi_(j));
    total += std::norm(psi_(j));
  }
  return acc / total;
}

double GridState::position_variance() const {
  const double mean = position_mean();
  double acc = 0.0, total = 0.0;
  for (int j = 0; j < size(); ++j) {
    acc += (spec_.x(j) - mean) * (spec_.x(j) - mean) * std::norm(psi_(j));
    total += std::norm(psi_(j));
  }
  return acc / total;
}

double GridState::momentum_mean() const {
  const Vec dens = momentum_density(*this);
  double acc = 0.0;
  for (int k = 0; k < size(); ++k) acc += spec_.p(k) * dens(k);
  return acc / dens.sum();
}

double GridState::momentum_variance() const {
  const Vec dens = momentum_density(*this);
  double m1 = 0.0, m2 = 0.0;
  for (int k = 0; k < size(); ++k) {
    m1 += spec_.p(k) * dens(k);
    m2 += spec_.p(k) * spec_.p(k) * dens(k);
  }
  m1 /= dens.sum();
  m2 /= dens.sum();
  return m2 - m1 * m1;
}

Complex GridState::overlap_with(const CoherentState& c) const {
  Complex acc = 0.0;
  Vec x(1);
  for (int j = 0; j < size(); ++j) {
    x(0) = spec_.x(j);
    acc += std::conj(wavefunction(c, x)) * psi_(j);
  }
  return acc * spec_.dx();
}

double GridState::fidelity_with(const CoherentState& c) const { return std::norm(overlap_with(c)); }

GridState init_coherent_grid(const GridSpec& spec, const CoherentState& state) {
  spec.validate();
  if (state.dim() != 1) throw Error("grid oracle is d = 1 only");
  const double sd = std::sqrt(1.0 / (2.0 * state.W.im()(0, 0)));
  const double xi = state.zeta.xi()(0);
  if (xi - 8.0 * sd < spec.x_min || xi + 8.0 * sd > spec.x_max) {
    std::ostringstream msg;
    msg << "grid box [" << spec.x_min << ", " << spec.x_max << "] does not cover ξ ± 8σ = "
        << xi << " ± " << 8.0 * sd;
    throw Error(msg.str());
  }
  CVec psi(spec.n_points);
  Vec x(1);
  for (int j = 0; j < spec.n_points; ++j) {
    x(0) = spec.x(j);
    psi(j) = wavefunction(state, x);
  }
  GridState gs(spec, std::move(psi));
  const double n2 = gs.normalize();
  if (std::abs(n2 - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << "sampled coherent state has norm² " << n2 << "; grid too coarse";
    throw Error(msg.str());
  }
  return gs;
}

GridState init_superposition_grid(const GridSpec& spec, const Superposition& psi) {
  spec.validate();
  if (psi.dim() != 1) throw Error("grid oracle is d = 1 only");
  CVec amps(spec.n_points);
  Vec x(1);
  for (int j = 0; j < spec.n_points; ++j) {
    x(0) = spec.x(j);
    amps(j) = psi.wavefunction(x);
  }
  GridState gs(spec, std::move(amps));
  const double n2 = gs.normalize();
  if (std::abs(n2 - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << "sampled superposition has norm² " << n2 << "; grid too coarse or too small";
    throw Error(msg.str());
  }
  return gs;
}

GridMeasurement apply_V_grid(const GridState& gs, double q, double sigma2) {
  if (!(sigma2 > 0.0)) throw Error("measurement variance must be positive");
  const double pref = std::pow(2.0 * std::numbers::pi * sigma2, -0.25);
  CVec out = gs.amplitudes();
  for (int j = 0; j < gs.size(); ++j) {
    const double dxq = gs.spec().x(j) - q;
    out(j) *= pref * std::exp(-dxq * dxq / (4.0 * sigma2));
  }
  GridMeasurement m{GridState(gs.spec(), std::move(out)), 0.0};
  m.weight = m.state.norm2();
  if (m.weight < 1e-300) {
    std::ostringstream msg;
    msg << "measurement at q = " << q << " annihilated the state (weight " << m.weight << ")";
    throw Error(msg.str());
  }
  m.state.normalize();
  return m;
}

struct GridPropagator::Impl {
  explicit Impl(int n) : plan(n) {}
  FftPlan plan;
  CVec chirp_right;
  CVec kinetic;
  CVec chirp_left;
};

GridPropagator::GridPropagator(const GridSpec& spec, const SymplecticMatrix& s) {
  spec.validate();
  if (s.dim() != 1) throw Error("grid propagation is d = 1 only");
  const Mat& m = s.matrix();
  const double b = m(0, 1);
  if (std::abs(b) <= kAwThreshold * m.norm()) {
    throw Error("grid propagation needs S_xp ≠ 0 (shear decomposition)");
  }
  const double a2 = (m(0, 0) - 1.0) / b;
  const double a1 = (m(1, 1) - 1.0) / b;

  const int n = spec.n_points;
  impl_ = std::make_unique<Impl>(n);
  impl_->chirp_right.resize(n);
  impl_->chirp_left.resize(n);
  impl_->kinetic.resize(n);
  for (int j = 0; j < n; ++j) {
    const double x = spec.x(j);
    impl_->chirp_right(j) = std::exp(0.5 * kI * a2 * x * x);
    impl_->chirp_left(j) = std::exp(0.5 * kI * a1 * x * x);
    const double p = spec.p(j);
    impl_->kinetic(j) = std::exp(-0.5 * kI * b * p * p) / double(n);
  }
}

GridPropagator::~GridPropagator() = default;

void GridPropagator::apply(GridState& gs) const {
  if (gs.size() != impl_->chirp_right.size()) throw Error("propagator/grid size mismatch");
  CVec& psi = gs.amplitudes();
  psi.array() *= impl_->chirp_right.array();
  impl_->plan.run(psi, true);
  psi.array() *= impl_->kinetic.array();
  impl_->plan.run(psi, false);
  psi.array() *= impl_->chirp_left.array();
}

CVec GridPropagator::fft(const CVec& in) const {
  CVec v = in;
  impl_->plan.run(v, true);
  return v;
}

CVec GridPropagator::ifft(const CVec& in) const {
  CVec v = in;
  impl_->plan.run(v, false);
  return v;
}

GridState propagate_grid(const GridState& gs, const ModelSpec& model) {
  GridPropagator prop(gs.spec(), model.S);
  GridState out = gs;
  prop.apply(out);
  return out;
}

double sample_outcome_grid(const GridState& gs, double sigma2, Rng& rng) {
  const int n = gs.size();
  std::vector<double> cdf(n + 1, 0.0);
  for (int j = 0; j < n; ++j) cdf[j + 1] = cdf[j] + std::norm(gs.amplitudes()(j));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double target = u01(rng) * cdf[n];
  const auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), target);
  const int j = std::min(n - 1, static_cast<int>(it - cdf.begin()) - 1);
  const double cell = cdf[j + 1] - cdf[j];
  const double frac = cell > 0.0 ? (target - cdf[j]) / cell : 0.5;
  const double x = gs.spec().x(j) + (frac - 0.5) * gs.spec().dx();
  std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
  return x + noise(rng);
}

CoherentFit fit_coherent(const GridState& gs, const SqueezingMatrix& frame) {
  if (frame.dim() != 1) throw Error("fit_coherent is d = 1 only");
  double xi = gs.position_mean();
  double pi = gs.momentum_mean();
  auto neg_fid = [&](double x, double p) {
    return -gs.fidelity_with(CoherentState(frame, PhaseSpacePoint(Vec::Constant(1, x),
                                                                  Vec::Constant(1, p))));
  };
  const double sx = std::sqrt(gs.position_variance()) + 1e-3;
  const double sp = std::sqrt(gs.momentum_variance()) + 1e-3;
  // Alternating one-dimensional Brent searches; the objective is smooth and
  // close to a Gaussian bump near the optimum.
  for (int round = 0; round < 6; ++round) {
    xi = boost::math::tools::brent_find_minima([&](double x) { return neg_fid(x, pi); },
                                               xi - 3 * sx, xi + 3 * sx, 40)
             .first;
    pi = boost::math::tools::brent_find_minima([&](double p) { return neg_fid(xi, p); },
                                               pi - 3 * sp, pi + 3 * sp, 40)
             .first;
  }
  return {PhaseSpacePoint(Vec::Constant(1, xi), Vec::Constant(1, pi)), -neg_fid(xi, pi)};
}

OracleTrajectory run_oracle_trajectory(const GridState& init, const ModelSpec& model,
                                       int n_steps, Rng& rng, const OracleOptions& options) {
  GridPropagator prop(init.spec(), model.S);
  return run_oracle_trajectory(init, model, prop, n_steps, rng, options);
}

OracleTrajectory run_oracle_trajectory(const GridState& init, const ModelSpec& model,
                                       const GridPropagator& propagator, int n_steps, Rng& rng,
                                       const OracleOptions& options) {
  if (model.d != 1) throw Error("grid oracle is d = 1 only");
  if (n_steps < 0) throw Error("n_steps must be non-negative");
  const double sigma2 = model.Sigma(0, 0);
  OracleTrajectory out;
  GridState gs = init;
  std::optional<CoherentState> closed = options.closed_form;

  auto check = [&](const char* where, int k) {
    if (!options.check_boundary) return;
    const double mass = gs.boundary_mass();
    if (mass > kBoundaryMassLimit) {
      std::ostringstream msg;
      msg << "grid boundary mass " << mass << " exceeds " << kBoundaryMassLimit << " " << where
          << " step " << k << "; enlarge the box";
      throw Error(msg.str());
    }
  };
  check("before", 0);

  for (int k = 0; k < n_steps; ++k) {
    const double q = sample_outcome_grid(gs, sigma2, rng);
    out.record.outcomes.push_back(Vec::Constant(1, q));
    gs = apply_V_grid(gs, q, sigma2).state;
    if (options.fit_frame && (options.fit_steps < 0 || k < options.fit_steps)) {
      const auto fit = fit_coherent(gs, *options.fit_frame);
      out.fit_fidelity.push_back(fit.fidelity);
      out.fit_zeta.push_back(fit.zeta);
    }
    propagator.apply(gs);
    check("after", k);
    if (closed) {
      closed = evolve_forward(model, apply_measurement(Vec::Constant(1, q), model, *closed).state);
      out.fidelity.push_back(gs.fidelity_with(*closed));
    }
  }
  out.final_state = std::move(gs);
  return out;
}

}  // namespace qtrack

namespace qtrack {

GridSpec suggest_grid(const ModelSpec& model, const std::vector<double>& weights,
                      const std::vector<CoherentState>& states, int n_steps, double n_sigmas) {
  if (model.d != 1) throw Error("suggest_grid: the grid oracle is one-dimensional");
  if (states.empty() || weights.size() != states.size()) {
    throw Error("suggest_grid: need one weight per state");
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error("suggest_grid: weights must have positive sum");

  Vec m = Vec::Zero(2);
  Mat second = Mat::Zero(2, 2);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Complex w = states[i].W.value()(0, 0);
    const double vx = 1.0 / (2.0 * w.imag());
    Mat c(2, 2);
    c << vx, w.real() * vx, w.real() * vx, std::norm(w) * vx;
    const Vec z = states[i].zeta.flat();
    m += weights[i] / total * z;
    second += weights[i] / total * (c + z * z.transpose());
  }
  Mat cov = second - m * m.transpose();
  const Mat& s = model.S.matrix();
  const double kick = 1.0 / (4.0 * model.Sigma(0, 0));

  double lo = 1e300, hi = -1e300, pmax = 0.0;
  auto extend = [&] {
    const double sx = n_sigmas * std::sqrt(std::max(cov(0, 0), 0.0));
    const double sp = n_sigmas * std::sqrt(std::max(cov(1, 1), 0.0));
    lo = std::min(lo, m[0] - sx);
    hi = std::max(hi, m[0] + sx);
    pmax = std::max(pmax, std::abs(m[1]) + sp);
  };
  extend();
  for (int k = 0; k < n_steps; ++k) {
    cov(1, 1) += kick;
    extend();
    m = s * m;
    cov = s * cov * s.transpose();
    extend();
  }
  const double width = hi - lo;
  const double need = width * pmax / std::numbers::pi;
  int n = 256;
  while (n < need) {
    n *= 2;
    if (n > (1 << 20)) throw Error("suggest_grid: required grid exceeds 2^20 points");
  }
  GridSpec spec;
  spec.x_min = lo;
  spec.x_max = hi;
  spec.n_points = n;
  return spec;
}

}  // namespace qtrack
