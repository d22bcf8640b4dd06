#include "qtrack/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qtrack/quadrature.hpp"

namespace qtrack {
namespace {

double log_sum_exp(const std::vector<double>& terms) {
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

Vec standard_normal(int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec z(n);
  for (int i = 0; i < n; ++i) z(i) = g(rng);
  return z;
}

}  // namespace

InitialStateSpec InitialStateSpec::Coherent(const CoherentState& state) {
  return Mixture({{1.0, state}});
}

InitialStateSpec InitialStateSpec::Mixture(std::vector<Component> components) {
  if (components.empty()) throw Error("initial state needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw Error("initial state weights must be finite and non-negative");
    }
    if (c.state.dim() != components.front().state.dim()) {
      throw Error("initial state components have mixed dimensions");
    }
    total += c.weight;
  }
  if (!(total > 0.0)) throw Error("initial state weights sum to zero; not normalizable");
  for (auto& c : components) c.weight /= total;
  InitialStateSpec out;
  out.components_ = std::move(components);
  return out;
}

double InitialStateSpec::log_husimi(const SqueezingMatrix& frame, const PhaseSpacePoint& zeta) const {
  const CoherentState probe(frame, zeta);
  std::vector<double> terms;
  terms.reserve(components_.size());
  for (const auto& c : components_) {
    if (c.weight == 0.0) continue;
    terms.push_back(std::log(c.weight) + 2.0 * log_overlap(probe, c.state).real());
  }
  return log_sum_exp(terms);
}

Vec InitialStateSpec::mean() const {
  Vec acc = Vec::Zero(2 * dim());
  for (const auto& c : components_) acc += c.weight * c.state.zeta.flat();
  return acc;
}

Process Process::Build(const ModelSpec& model) {
  Process p;
  p.model = model;
  p.w_hat = solve_squeezing(model);
  p.fm = build_filter(model, p.w_hat);
  p.noise_cov = p.w_hat.innovation_covariance(model);
  Eigen::LLT<Mat> llt(p.noise_cov);
  if (llt.info() != Eigen::Success) {
    throw AssumptionError("squeezing", "Σ − (2 Im Ŵ)⁻¹ is not positive-definite");
  }
  p.noise_chol = llt.matrixL();
  return p;
}

InitialDraw sample_initial(const InitialStateSpec& init, const StableSqueezing& w_hat, Rng& rng) {
  const auto& comps = init.components();
  int index = 0;
  if (comps.size() > 1) {
    std::vector<double> weights;
    for (const auto& c : comps) weights.push_back(c.weight);
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    index = pick(rng);
  }
  const auto law = husimi_law(comps[index].state, w_hat.W_hat);
  return {PhaseSpacePoint(law.sample(rng)), index};
}

PhaseSpacePoint step(const PhaseSpacePoint& z, const Vec& eta, const FilterMatrices& fm,
                     const SymplecticMatrix& s) {
  return PhaseSpacePoint(Vec(s.matrix() * (z.flat() - fm.K * eta)));
}

TrajectorySample simulate_from(const Process& process, const PhaseSpacePoint& zeta0, int n_steps,
                               Rng& rng) {
  if (n_steps < 0) throw Error("n_steps must be non-negative");
  const int d = process.dim();
  TrajectorySample out;
  out.zetas.reserve(n_steps + 1);
  out.etas.reserve(n_steps);
  out.record.outcomes.reserve(n_steps);
  out.zetas.push_back(zeta0);
  for (int k = 0; k < n_steps; ++k) {
    const Vec eta = process.noise_chol * standard_normal(d, rng);
    const PhaseSpacePoint& z = out.zetas.back();
    out.record.outcomes.push_back(z.xi() + eta);
    out.etas.push_back(eta);
    out.zetas.push_back(step(z, eta, process.fm, process.model.S));
  }
  return out;
}

TrajectorySample simulate(const Process& process, const InitialStateSpec& init, int n_steps,
                          Rng& rng) {
  const auto draw = sample_initial(init, process.w_hat, rng);
  auto out = simulate_from(process, draw.zeta, n_steps, rng);
  out.component = draw.component;
  return out;
}

std::vector<PhaseSpacePoint> forward_recursion(const PhaseSpacePoint& zeta0,
                                               const MeasurementRecord& record,
                                               const FilterMatrices& fm,
                                               const SymplecticMatrix& s) {
  std::vector<PhaseSpacePoint> zetas{zeta0};
  for (const auto& q : record.outcomes) {
    const PhaseSpacePoint& z = zetas.back();
    zetas.push_back(step(z, q - z.xi(), fm, s));
  }
  return zetas;
}

PhaseSpacePoint explicit_zeta(const PhaseSpacePoint& zeta0, const MeasurementRecord& record,
                              const FilterMatrices& fm, int k) {
  if (k < 0 || k > record.size()) throw Error("explicit_zeta: k out of range");
  const Mat m_inv = fm.M.inverse();
  // M^{−k} ζ_0 − Σ_{j<k} M^{−(k−j)} R q_j.
  std::vector<Mat> powers{Mat::Identity(fm.M.rows(), fm.M.cols())};
  for (int i = 1; i <= k; ++i) powers.push_back(powers.back() * m_inv);
  Vec acc = powers[k] * zeta0.flat();
  for (int j = 0; j < k; ++j) acc -= powers[k - j] * fm.R * record.outcomes[j];
  return PhaseSpacePoint(std::move(acc));
}

std::vector<PhaseSpacePoint> backward_recursion(const PhaseSpacePoint& zeta_n,
                                                const MeasurementRecord& record,
                                                const FilterMatrices& fm) {
  const int n = record.size();
  std::vector<PhaseSpacePoint> zetas(n + 1);
  zetas[n] = zeta_n;
  for (int k = n - 1; k >= 0; --k) {
    zetas[k] = PhaseSpacePoint(Vec(fm.M * zetas[k + 1].flat() + fm.R * record.outcomes[k]));
  }
  return zetas;
}

AffineTrack affine_track(const MeasurementRecord& record, const FilterMatrices& fm,
                         const SymplecticMatrix& s) {
  const int d = fm.dim();
  Mat proj = Mat::Zero(d, 2 * d);
  proj.leftCols(d).setIdentity();
  const Mat step_matrix = s.matrix() * (Mat::Identity(2 * d, 2 * d) + fm.K * proj);
  const Mat sk = s.matrix() * fm.K;
  AffineTrack t;
  t.A.push_back(Mat::Identity(2 * d, 2 * d));
  t.c.push_back(Vec::Zero(2 * d));
  for (const auto& q : record.outcomes) {
    t.A.push_back(step_matrix * t.A.back());
    t.c.push_back(step_matrix * t.c.back() - sk * q);
  }
  return t;
}

MasterDensity master_density(const InitialStateSpec& init, const Process& process,
                             const MeasurementRecord& record, const MasterDensityOptions& options) {
  MasterDensity out;
  out.method = options.method;
  const int n = record.size();
  const int d = process.dim();
  if (n == 0) {
    out.value = 1.0;
    return out;
  }
  for (const auto& q : record.outcomes) {
    if (q.size() != d) throw Error("master_density: outcome dimension mismatch");
  }

  const AffineTrack track = affine_track(record, process.fm, process.model.S);
  // Stacked innovations y − H ζ with y_k = q_k − P c_k and H_k = P A_k.
  Vec y(n * d);
  Mat h(n * d, 2 * d);
  for (int k = 0; k < n; ++k) {
    y.segment(k * d, d) = record.outcomes[k] - track.c[k].head(d);
    h.middleRows(k * d, d) = track.A[k].topRows(d);
  }
  const GaussianLaw step_noise(Vec::Zero(d), process.noise_cov);

  auto log_likelihood = [&](const Vec& zeta) {
    double acc = 0.0;
    const Vec r = y - h * zeta;
    for (int k = 0; k < n; ++k) acc += step_noise.log_density(r.segment(k * d, d));
    return acc;
  };

  std::vector<double> terms;
  double mc_var = 0.0;
  for (const auto& comp : init.components()) {
    if (comp.weight == 0.0) continue;
    const GaussianLaw born = husimi_law(comp.state, process.w_hat.W_hat);
    double log_term = 0.0;
    switch (options.method) {
      case DensityMethod::Exact: {
        Mat big = h * born.covariance() * h.transpose();
        for (int k = 0; k < n; ++k) big.block(k * d, k * d, d, d) += process.noise_cov;
        log_term = log_normal_density(y - h * born.mean(), 0.5 * (big + big.transpose()));
        break;
      }
      case DensityMethod::GaussHermite: {
        // Nodes from the Gaussian that combines the Born law with the
        // likelihood; each node carries prior × likelihood / proposal. The
        // integrand is evaluated pointwise, independently of the Exact path.
        const Mat prior_prec = born.covariance().inverse();
        Mat info = prior_prec;
        Vec shift = prior_prec * born.mean();
        const Mat noise_inv = process.noise_cov.inverse();
        for (int k = 0; k < n; ++k) {
          const Mat hk = h.middleRows(k * d, d);
          info += hk.transpose() * noise_inv * hk;
          shift += hk.transpose() * noise_inv * y.segment(k * d, d);
        }
        const Mat post_cov = info.inverse();
        const GaussianLaw proposal(post_cov * shift, 0.5 * (post_cov + post_cov.transpose()));

        const auto rule = gauss_hermite_normal(options.gh_nodes);
        const int dims = 2 * d;
        const int m = options.gh_nodes;
        long long total = 1;
        for (int i = 0; i < dims; ++i) total *= m;
        std::vector<double> logs;
        logs.reserve(total);
        std::vector<int> idx(dims, 0);
        Vec z(dims);
        for (long long t = 0; t < total; ++t) {
          double log_w = 0.0;
          for (int i = 0; i < dims; ++i) {
            z(i) = rule.nodes[idx[i]];
            log_w += std::log(rule.weights[idx[i]]);
          }
          const Vec zeta = proposal.mean() + proposal.cholesky() * z;
          logs.push_back(log_w + log_likelihood(zeta) + born.log_density(zeta) -
                         proposal.log_density(zeta));
          for (int i = 0; i < dims; ++i) {
            if (++idx[i] < m) break;
            idx[i] = 0;
          }
        }
        log_term = log_sum_exp(logs);
        break;
      }
      case DensityMethod::MonteCarlo: {
        Rng rng = stream_rng(options.mc_seed, 0);
        std::vector<double> logs;
        logs.reserve(options.mc_draws);
        for (int t = 0; t < options.mc_draws; ++t) logs.push_back(log_likelihood(born.sample(rng)));
        const double lse = log_sum_exp(logs);
        log_term = lse - std::log(double(options.mc_draws));
        double second = 0.0;
        for (double l : logs) second += std::exp(2.0 * (l - log_term));
        second /= options.mc_draws;
        mc_var += comp.weight * comp.weight * std::exp(2.0 * log_term) * (second - 1.0) / options.mc_draws;
        break;
      }
    }
    terms.push_back(std::log(comp.weight) + log_term);
  }
  out.log_value = log_sum_exp(terms);
  out.value = std::exp(out.log_value);
  out.std_error = std::sqrt(std::max(0.0, mc_var));
  return out;
}

}  // namespace qtrack
