#include "qtrack/examples.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace qtrack {
namespace {

constexpr double kBeta = 0.7;
constexpr double kSolveTol = 1e-10;
constexpr double kNSigma = 4.0;

Criterion criterion(std::string name, double observed, double tol, bool pass,
                    std::string detail = "") {
  return {std::move(name), observed, tol, pass, std::move(detail)};
}

Criterion below(std::string name, double observed, double tol) {
  return criterion(std::move(name), observed, tol, observed < tol);
}

Mat rows_of(const std::vector<Vec>& v) {
  if (v.empty()) throw Error("no samples");
  Mat m(v.size(), v.front().size());
  for (std::size_t i = 0; i < v.size(); ++i) m.row(i) = v[i].transpose();
  return m;
}

Complex magnetic_w_scalar() {
  // w² − (i/2)λ⁻² w + (Mβ)² + (i/2) Mβ λ⁻² cot β = 0 with Mβ = λ = 1.
  const Complex i(0.0, 1.0);
  const Complex b = -0.5 * i;
  const Complex c = 1.0 + 0.5 * i / std::tan(kBeta);
  const Complex disc = std::sqrt(b * b - 4.0 * c);
  const Complex r1 = (-b + disc) / 2.0;
  const Complex r2 = (-b - disc) / 2.0;
  return r1.imag() > r2.imag() ? r1 : r2;
}

}  // namespace

Example parse_example(const std::string& name) {
  if (name == "free") return Example::Free;
  if (name == "ho") return Example::HarmonicOscillator;
  if (name == "magnetic") return Example::Magnetic;
  throw ConfigError("example", "unknown example \"" + name + "\" (free, ho or magnetic)");
}

std::string example_name(Example e) {
  switch (e) {
    case Example::Free: return "free";
    case Example::HarmonicOscillator: return "ho";
    case Example::Magnetic: return "magnetic";
  }
  return "?";
}

ModelSpec example_model(Example e) {
  switch (e) {
    case Example::Free:
      return ModelSpec::Isotropic(presets::free_particle(1.0), 1.0);
    case Example::HarmonicOscillator:
      return ModelSpec::Create(presets::harmonic_oscillator(std::numbers::pi / 2),
                               0.5 * Mat::Ones(1, 1));
    case Example::Magnetic:
      return ModelSpec::Isotropic(presets::magnetic_field(kBeta, 1.0 / kBeta), 1.0);
  }
  throw Error("unknown example");
}

CoherentState example_initial_state(Example e) {
  switch (e) {
    case Example::Free:
      return CoherentState(SqueezingMatrix::Scalar({0.4, 0.9}),
                           PhaseSpacePoint(Vec::Constant(1, 1.0), Vec::Constant(1, 0.5)));
    case Example::HarmonicOscillator:
      return CoherentState(SqueezingMatrix::Scalar({-0.2, 1.5}),
                           PhaseSpacePoint(Vec::Constant(1, 1.5), Vec::Constant(1, -0.5)));
    case Example::Magnetic: {
      Vec xi(2), pi(2);
      xi << 0.5, -0.5;
      pi << 0.3, 0.2;
      return CoherentState(SqueezingMatrix(CMat::Identity(2, 2) * Complex(0.1, 1.2)),
                           PhaseSpacePoint(xi, pi));
    }
  }
  throw Error("unknown example");
}

json example_scenario_json(Example e) {
  const auto model = example_model(e);
  const auto init = example_initial_state(e);
  const int d = model.d;
  json xi = json::array(), pi = json::array();
  for (int i = 0; i < d; ++i) {
    xi.push_back(init.zeta.xi()[i]);
    pi.push_back(init.zeta.pi()[i]);
  }
  const char* names[] = {"free_particle", "harmonic_oscillator", "magnetic_field"};
  return {{"schema_version", kSchemaVersion},
          {"name", names[static_cast<int>(e)]},
          {"model", model_to_json(model)},
          {"init",
           {{"type", "coherent"},
            {"W", complex_matrix_to_json(init.W.value())},
            {"xi", xi},
            {"pi", pi}}},
          {"n_steps", 5},
          {"n_trajectories", 1000},
          {"seed", 1},
          {"outputs", {{"dir", std::string("out_") + example_name(e)}}}};
}

ComparisonReport solve_checks(Example e, const ModelSpec& model, const StableSqueezing& w) {
  ComparisonReport r;
  const CMat& wh = w.W_hat.value();
  r.add(below("solve.residual", w.residual, kSolveTol));
  r.add(below("solve.symmetry", (wh - wh.transpose()).norm(), 1e-12));
  Eigen::SelfAdjointEigenSolver<Mat> eig(w.innovation_covariance(model));
  const double min_eig = eig.eigenvalues().minCoeff();
  r.add(criterion("solve.innovation_covariance_min_eig", min_eig, 0.0, min_eig > 0.0));
  switch (e) {
    case Example::Free: {
      const Complex oracle = solve_squeezing_1d(1.0, 1.0, 0.0, 1.0, 1.0);
      r.add(below("solve.w_hat_vs_quadratic", std::abs(wh(0, 0) - oracle), kSolveTol));
      break;
    }
    case Example::HarmonicOscillator: {
      const Complex oracle(0.0, std::numbers::phi);
      r.add(below("solve.w_hat_vs_golden_ratio", std::abs(wh(0, 0) - oracle), kSolveTol));
      break;
    }
    case Example::Magnetic: {
      const CMat oracle = magnetic_w_scalar() * CMat::Identity(2, 2);
      r.add(below("solve.w_hat_scalar_structure", (wh - oracle).norm(), kSolveTol));
      break;
    }
  }
  return r;
}

ComparisonReport structure_checks(Example e, const ModelSpec& model, const StableSqueezing& w,
                                  const FilterMatrices& fm) {
  ComparisonReport r;
  const auto a = check_assumptions(model, fm);
  r.add(criterion("check.AW", a.sxp_min_singular, kAwThreshold, a.aw_ok));
  r.add(criterion("check.AS", 0.0, kAsTolerance, a.as_ok));
  r.add(criterion("check.AM", a.m_spectral_radius, 1.0, a.am_ok));
  if (model.d == 1) {
    const double kappa = w.kappa(0, 0);
    double gap = 0.0;
    for (const auto& mu : eigenvalues(fm.M)) gap = std::max(gap, std::abs(std::norm(mu) - kappa));
    r.add(below("check.mu_squared_equals_kappa", gap, 1e-8));
    r.add(criterion("check.kappa_in_unit_interval", kappa, 1.0, kappa > 0.0 && kappa < 1.0));
  }
  if (e == Example::Magnetic) {
    const double c = std::cos(kBeta), s = std::sin(kBeta);
    Mat s_hat(2, 2);
    s_hat << c, s, -s, c;  // Mβ = 1
    const auto scalar_model = ModelSpec::Create(SymplecticMatrix::FromMatrix(s_hat), Mat::Ones(1, 1));
    const auto scalar_fm = build_filter(scalar_model, solve_squeezing(scalar_model));
    Mat rot(2, 2);
    rot << c, s, -s, c;  // R(−β)
    Mat kron(4, 4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) kron.block(2 * i, 2 * j, 2, 2) = scalar_fm.M(i, j) * rot;
    r.add(below("check.M_tensor_rotation_structure", (fm.M - kron).norm(), 1e-10));
  }
  const auto profile = power_norm_profile(model.S.matrix(), 200, 2 * model.d - 1);
  r.add(criterion("check.power_norm_polynomial", profile.tail_slope, 0.05, profile.bounded));
  return r;
}

ComparisonReport simulation_checks(const Process& process, const InitialStateSpec& init,
                                   const std::vector<TrajectorySample>& samples) {
  ComparisonReport r;
  if (samples.empty()) return r;
  const int n = samples.front().record.size();
  const int d = process.dim();
  Vec mean = init.mean();
  for (int k = 0; k < n; ++k) {
    std::vector<Vec> qk;
    for (const auto& s : samples) qk.push_back(s.record.outcomes[k]);
    r.merge(compare_mean(rows_of(qk), mean.head(d), kNSigma, "simulate.E[Q_" + std::to_string(k) + "]"));
    mean = process.model.S.matrix() * mean;
  }
  std::vector<Vec> etas;
  for (const auto& s : samples) etas.insert(etas.end(), s.etas.begin(), s.etas.end());
  if (!etas.empty()) {
    const Mat m = rows_of(etas);
    r.merge(compare_mean(m, Vec::Zero(d), kNSigma, "simulate.eta_mean"));
    r.merge(compare_covariance(m, process.noise_cov, kNSigma, "simulate.eta_cov"));
  }
  return r;
}

ComparisonReport estimator_checks(const Process& process,
                                  const std::vector<TrajectorySample>& samples, double tol,
                                  int shifts) {
  ComparisonReport r;
  int exceptions = 0;
  double worst_ratio = 0.0;
  std::vector<Vec> resid;
  for (const auto& s : samples) {
    const auto est = mle(s.record, process.fm, tol);
    const double err = (est.zeta_hat.flat() - s.zetas.front().flat()).norm();
    if (!(err <= est.tail_bound)) ++exceptions;
    worst_ratio = std::max(worst_ratio, err / std::max(est.tail_bound, 1e-300));
    for (int k = 0; k < shifts; ++k) {
      const auto sh = mle_shifted(s.record, k, process.fm, tol);
      resid.push_back(s.record.outcomes[k] - sh.zeta_hat.position());
    }
  }
  std::ostringstream detail;
  detail << "max ‖ζ̂ − ζ₀‖ / tail bound = " << worst_ratio;
  r.add(criterion("estimate.mle_within_tail_bound", exceptions, 0.0, exceptions == 0, detail.str()));
  if (!resid.empty()) {
    const Mat m = rows_of(resid);
    r.merge(compare_mean(m, Vec::Zero(process.dim()), kNSigma, "estimate.residual_mean"));
    r.merge(compare_covariance(m, process.noise_cov, kNSigma, "estimate.residual_cov"));
  }
  return r;
}

Mat stack_records(const std::vector<MeasurementRecord>& records) {
  if (records.empty()) throw Error("stack_records: no records");
  const int n = records.front().size();
  if (n == 0) throw Error("stack_records: empty records");
  const int d = static_cast<int>(records.front().outcomes.front().size());
  Mat m(records.size(), n * d);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].size() != n) throw Error("stack_records: records differ in length");
    for (int k = 0; k < n; ++k) m.row(i).segment(k * d, d) = records[i].outcomes[k].transpose();
  }
  return m;
}

ComparisonReport record_law_checks(const std::vector<MeasurementRecord>& a,
                                   const std::vector<MeasurementRecord>& b,
                                   const std::string& label) {
  CompareOptions opt;
  opt.label = label;
  return compare_distributions(stack_records(a), stack_records(b), opt);
}

ComparisonReport run_example(Example e, const ExampleOptions& options) {
  const ModelSpec model = example_model(e);
  const Process process = Process::Build(model);
  ComparisonReport report;
  report.merge(solve_checks(e, model, process.w_hat));
  report.merge(structure_checks(e, model, process.w_hat, process.fm));

  const CoherentState c0 = example_initial_state(e);
  const auto init = InitialStateSpec::Coherent(c0);
  const EnsembleOptions sim{options.n_trajectories, options.n_steps, options.seed, options.backend};
  const auto samples = simulate_ensemble(process, init, sim);
  report.merge(simulation_checks(process, init, samples));

  // Residuals use ζ̂_k for k < kShifts, each from the suffix starting at k.
  constexpr int kShifts = 10;
  const int est_steps =
      (model.d == 2 ? 2 * options.estimate_steps : options.estimate_steps) + kShifts;
  const EnsembleOptions est{options.estimate_trajectories, est_steps, options.seed + 1,
                            options.backend};
  report.merge(
      estimator_checks(process, simulate_ensemble(process, init, est), options.tol, kShifts));

  if (model.d == 1 && options.oracle && options.n_steps > 0) {
    const GridSpec grid = suggest_grid(model, {1.0}, {c0}, options.n_steps);
    const GridState g0 = init_coherent_grid(grid, c0);
    const EnsembleOptions orc{options.n_trajectories, options.n_steps, options.seed + 2,
                              options.backend};
    const auto oracle = oracle_ensemble(g0, model, orc);
    std::vector<MeasurementRecord> a, b;
    for (const auto& s : samples) a.push_back(s.record);
    for (const auto& o : oracle) b.push_back(o.record);
    report.merge(record_law_checks(a, b, "oracle_vs_process"));
  }
  return report;
}

}  // namespace qtrack
