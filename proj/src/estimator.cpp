#include "qtrack/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qtrack {
namespace {

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Bound on Σ_{j ≥ start} ‖M^j‖ ‖R‖ Q̄_j with Q̄_j = 2 q_max (j/N)^{2d},
// starting from P = M^start. Stops once terms are negligible.
double extrapolated_tail(const Mat& m, Mat p, int start, double r_norm, double q_max, int n,
                         int d) {
  double sum = 0.0;
  const double ref = std::max(1, n);
  for (int j = start; j < start + 100000; ++j) {
    const double growth = std::max(1.0, std::pow(j / ref, 2.0 * d));
    const double term = p.norm() * r_norm * 2.0 * q_max * growth;
    sum += term;
    if (j > start + 10 && term < 1e-18 * std::max(sum, 1e-300)) break;
    if (!std::isfinite(sum)) break;
    p = m * p;
  }
  return sum;
}

}  // namespace

EstimatorOutput mle(const MeasurementRecord& record, const FilterMatrices& fm, double tol) {
  if (!(tol > 0.0)) throw Error("estimator tolerance must be positive");
  const int n = record.size();
  const int d = fm.dim();
  if (n == 0) throw RecordTooShort("empty record", 1);
  const double r = spectral_radius(fm.M);
  if (!(r < 1.0)) {
    std::ostringstream msg;
    msg << "estimator needs spectral radius of M below 1 (got " << r << ")";
    throw AssumptionError("AM", msg.str());
  }

  // Terms t_j = M^j R q_j and their bounds ‖M^j‖ ‖R q_j‖.
  std::vector<Vec> terms(n);
  std::vector<double> bounds(n);
  Mat p = Mat::Identity(2 * d, 2 * d);
  double q_max = 0.0;
  double rq_max = 0.0;
  for (int j = 0; j < n; ++j) {
    const Vec& q = record.outcomes[j];
    if (q.size() != d) throw Error("record outcome has wrong dimension");
    const Vec rq = fm.R * q;
    terms[j] = p * rq;
    bounds[j] = p.norm() * rq.norm();
    q_max = std::max(q_max, q.norm());
    rq_max = std::max(rq_max, rq.norm());
    p = fm.M * p;
  }
  // p = M^n now.
  const double r_norm = fm.R.norm();
  const double beyond = extrapolated_tail(fm.M, p, n, r_norm, q_max, n, d);

  // suffix[j] = Σ_{i ≥ j} bounds[i] + beyond.
  std::vector<double> suffix(n + 1);
  suffix[n] = beyond;
  for (int j = n - 1; j >= 0; --j) suffix[j] = suffix[j + 1] + bounds[j];

  int j0 = 0;
  if (r > 0.0 && rq_max > 0.0) {
    const double est = std::log(tol * (1.0 - r) / rq_max) / std::log(r);
    if (std::isfinite(est)) j0 = std::clamp(static_cast<int>(std::ceil(est)), 0, n - 1);
  }
  int J = j0;
  while (J < n - 1 && suffix[J + 1] >= tol) ++J;
  if (suffix[J + 1] >= tol) {
    // Find the record length whose extrapolated remainder meets tol.
    Mat pk = Mat::Identity(2 * d, 2 * d);
    int required = 0;
    for (int len = 1; len < 1000000; ++len) {
      pk = fm.M * pk;
      if (extrapolated_tail(fm.M, pk, len, r_norm, q_max, len, d) < 0.5 * tol) {
        required = len;
        break;
      }
    }
    std::ostringstream msg;
    msg << "record of length " << n << " cannot certify tolerance " << tol
        << " (tail bound " << suffix[n] << "); need about " << required << " outcomes";
    throw RecordTooShort(msg.str(), required);
  }

  Vec z = Vec::Zero(2 * d);
  for (int j = 0; j <= J; ++j) z += terms[j];
  EstimatorOutput out;
  out.zeta_hat = PhaseSpacePoint(z);
  out.truncation = J;
  out.tail_bound = suffix[J + 1];
  return out;
}

EstimatorOutput mle_shifted(const MeasurementRecord& record, int n, const FilterMatrices& fm,
                            double tol) {
  if (n < 0 || n >= record.size()) throw Error("mle_shifted: shift outside the record");
  MeasurementRecord tail = record;
  tail.outcomes.assign(record.outcomes.begin() + n, record.outcomes.end());
  return mle(tail, fm, tol);
}

std::vector<Vec> residuals(const MeasurementRecord& record,
                           const std::vector<PhaseSpacePoint>& zeta_hats) {
  if (zeta_hats.size() > record.outcomes.size()) {
    throw Error("residuals: more estimates than outcomes");
  }
  std::vector<Vec> out;
  out.reserve(zeta_hats.size());
  for (std::size_t k = 0; k < zeta_hats.size(); ++k) {
    out.push_back(record.outcomes[k] - zeta_hats[k].position());
  }
  return out;
}

double log_rn_weight(const InitialStateSpec& rho, const InitialStateSpec& tau,
                     const SqueezingMatrix& w_hat, const PhaseSpacePoint& zeta_hat) {
  const double den = tau.log_husimi(w_hat, zeta_hat);
  if (!(den > -700.0)) {
    std::ostringstream msg;
    msg << "reference state vanishes at ζ̂ (log Husimi " << den << ")";
    throw Error(msg.str());
  }
  return rho.log_husimi(w_hat, zeta_hat) - den;
}

double rn_weight(const InitialStateSpec& rho, const InitialStateSpec& tau,
                 const SqueezingMatrix& w_hat, const PhaseSpacePoint& zeta_hat) {
  return std::exp(log_rn_weight(rho, tau, w_hat, zeta_hat));
}

std::vector<double> log_povm_mass(const InitialStateSpec& rho, const MeasurementRecord& record,
                                  const ModelSpec& model, int n_max) {
  if (n_max < 0 || n_max > record.size()) throw Error("log_povm_mass: n_max outside the record");
  const auto& comps = rho.components();
  const std::size_t nc = comps.size();
  std::vector<CoherentState> states(nc);
  std::vector<double> acc(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    states[c] = comps[c].state;
    acc[c] = comps[c].weight > 0.0 ? std::log(comps[c].weight)
                                   : -std::numeric_limits<double>::infinity();
  }
  std::vector<double> out;
  out.reserve(n_max + 1);
  out.push_back(log_sum_exp(acc));
  for (int k = 0; k < n_max; ++k) {
    for (std::size_t c = 0; c < nc; ++c) {
      if (!std::isfinite(acc[c])) continue;
      const MeasuredState m = apply_measurement(record.outcomes[k], model, states[c]);
      acc[c] += m.log_weight;
      states[c] = evolve_forward(model, m.state);
    }
    out.push_back(log_sum_exp(acc));
  }
  return out;
}

PovmRatio povm_ratio_sequence(const InitialStateSpec& rho, const InitialStateSpec& tau,
                              const MeasurementRecord& record, const ModelSpec& model,
                              const StableSqueezing& w_hat, const FilterMatrices& fm, int n_max,
                              double tol) {
  const auto num = log_povm_mass(rho, record, model, n_max);
  const auto den = log_povm_mass(tau, record, model, n_max);
  PovmRatio out;
  out.log_ratio.resize(num.size());
  for (std::size_t k = 0; k < num.size(); ++k) out.log_ratio[k] = num[k] - den[k];
  const EstimatorOutput est = mle(record, fm, tol);
  out.log_limit = log_rn_weight(rho, tau, w_hat.W_hat, est.zeta_hat);
  return out;
}

InitialStateSpec lattice_reference(const SqueezingMatrix& w_hat, const PhaseSpacePoint& center,
                                   const Vec& half_width, int points) {
  const int n = static_cast<int>(center.flat().size());
  if (half_width.size() != n) throw Error("lattice_reference: half_width has wrong length");
  if (points < 2) throw Error("lattice_reference: need at least two points per axis");
  if (!(half_width.array() > 0.0).all()) throw Error("lattice_reference: half widths must be positive");
  long total = 1;
  for (int i = 0; i < n; ++i) {
    total *= points;
    if (total > 1000000) throw Error("lattice_reference: lattice too large");
  }
  std::vector<InitialStateSpec::Component> comps;
  comps.reserve(total);
  std::vector<int> idx(n, 0);
  for (long t = 0; t < total; ++t) {
    Vec z = center.flat();
    for (int i = 0; i < n; ++i) {
      z[i] += half_width[i] * (-1.0 + 2.0 * idx[i] / (points - 1));
    }
    comps.push_back({1.0, CoherentState(w_hat, PhaseSpacePoint(z))});
    for (int i = 0; i < n; ++i) {
      if (++idx[i] < points) break;
      idx[i] = 0;
    }
  }
  return InitialStateSpec::Mixture(std::move(comps));
}

}  // namespace qtrack
