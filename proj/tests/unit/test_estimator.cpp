#include <doctest.h>

#include <numbers>

#include "qtrack/estimator.hpp"
#include "qtrack/stats.hpp"

using namespace qtrack;

namespace {

PhaseSpacePoint pt(double xi, double pi) {
  return PhaseSpacePoint(Vec::Constant(1, xi), Vec::Constant(1, pi));
}

Process free_process() { return Process::Build(ModelSpec::Isotropic(presets::free_particle(1.0), 1.0)); }
Process ho_process() {
  return Process::Build(
      ModelSpec::Create(presets::harmonic_oscillator(std::numbers::pi / 2), 0.5 * Mat::Ones(1, 1)));
}
Process magnetic_process() {
  return Process::Build(ModelSpec::Isotropic(presets::magnetic_field(0.7, 1.0 / 0.7), 1.0));
}

InitialStateSpec two_bumps(const StableSqueezing& w) {
  return InitialStateSpec::Mixture({{0.3, CoherentState(w.W_hat, pt(-1.5, 0.5))},
                                    {0.7, CoherentState(w.W_hat, pt(2.0, -0.4))}});
}

}  // namespace

TEST_CASE("mle: recovers ζ_0 within the certified tail bound") {
  for (const auto& p : {free_process(), ho_process(), magnetic_process()}) {
    const int d = p.dim();
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng = stream_rng(101, s);
      const PhaseSpacePoint z0(Vec::Constant(2 * d, 0.3 * s - 2.0));
      // The magnetic M contracts more slowly (r ≈ 0.79) and needs a longer record.
      const auto traj = simulate_from(p, z0, d == 2 ? 120 : 60, rng);
      const auto est = mle(traj.record, p.fm, 1e-8);
      const double err = (est.zeta_hat.flat() - z0.flat()).norm();
      CHECK(est.tail_bound < 1e-8);
      CHECK(err <= est.tail_bound);
      // The truncation error is exactly M^{J+1} ζ_{J+1}.
      Mat pw = Mat::Identity(2 * d, 2 * d);
      for (int j = 0; j <= est.truncation; ++j) pw = p.fm.M * pw;
      const double exact_err = (pw * traj.zetas[est.truncation + 1].flat()).norm();
      CHECK(err == doctest::Approx(exact_err).epsilon(1e-3).scale(1e-14));
    }
  }
}

TEST_CASE("mle: starts at the geometric truncation and only grows") {
  const auto p = free_process();
  Rng rng = stream_rng(3, 0);
  const auto traj = simulate_from(p, pt(0.5, 0.2), 80, rng);
  const double r = spectral_radius(p.fm.M);
  double rq_max = 0.0;
  for (const auto& q : traj.record.outcomes) rq_max = std::max(rq_max, (p.fm.R * q).norm());
  for (double tol : {1e-4, 1e-8, 1e-12}) {
    const auto est = mle(traj.record, p.fm, tol);
    const int geometric = static_cast<int>(std::ceil(std::log(tol * (1 - r) / rq_max) / std::log(r)));
    CHECK(est.truncation >= geometric);
    CHECK(est.tail_bound < tol);
  }
  CHECK(mle(traj.record, p.fm, 1e-12).truncation > mle(traj.record, p.fm, 1e-4).truncation);
}

TEST_CASE("mle_shifted and residuals track ζ_n and η_n") {
  const auto p = ho_process();
  Rng rng = stream_rng(9, 1);
  const auto traj = simulate_from(p, pt(1.0, -1.0), 90, rng);
  std::vector<PhaseSpacePoint> hats;
  for (int n = 0; n < 30; ++n) {
    const auto est = mle_shifted(traj.record, n, p.fm, 1e-9);
    CHECK((est.zeta_hat.flat() - traj.zetas[n].flat()).norm() <= est.tail_bound);
    hats.push_back(est.zeta_hat);
  }
  const auto res = residuals(traj.record, hats);
  REQUIRE(res.size() == 30);
  for (int n = 0; n < 30; ++n) CHECK((res[n] - traj.etas[n]).norm() < 1e-9);
  CHECK_THROWS_AS(mle_shifted(traj.record, 90, p.fm), Error);
}

TEST_CASE("mle: short records report the required length") {
  const auto p = free_process();
  Rng rng = stream_rng(4, 2);
  const auto traj = simulate_from(p, pt(0.1, 0.1), 60, rng);
  MeasurementRecord shortrec = traj.record;
  shortrec.outcomes.resize(5);
  int required = 0;
  try {
    mle(shortrec, p.fm, 1e-10);
    FAIL("expected RecordTooShort");
  } catch (const RecordTooShort& e) {
    required = e.required_length();
    CHECK(std::string(e.what()).find("need about") != std::string::npos);
  }
  CHECK(required > 5);
  CHECK(required <= 60);
  CHECK_THROWS_AS(mle(MeasurementRecord{}, p.fm), RecordTooShort);
}

TEST_CASE("mle: rejects M with spectral radius one") {
  FilterMatrices fm = free_process().fm;
  fm.M = Mat::Identity(2, 2);
  MeasurementRecord rec;
  rec.outcomes.assign(10, Vec::Ones(1));
  CHECK_THROWS_AS(mle(rec, fm), AssumptionError);
}

TEST_CASE("rn_weight: identity for equal states and the coherent ratio") {
  const auto p = free_process();
  const auto rho = two_bumps(p.w_hat);
  const auto z = pt(0.7, -0.2);
  CHECK(rn_weight(rho, rho, p.w_hat.W_hat, z) == doctest::Approx(1.0).epsilon(1e-14));

  const CoherentState a(p.w_hat.W_hat, pt(0.0, 0.0));
  const CoherentState b(SqueezingMatrix::Scalar({0.3, 1.7}), pt(1.0, 0.5));
  const auto ra = InitialStateSpec::Coherent(a);
  const auto rb = InitialStateSpec::Coherent(b);
  const CoherentState probe(p.w_hat.W_hat, z);
  const double expected = fidelity(probe, a) / fidelity(probe, b);
  CHECK(rn_weight(ra, rb, p.w_hat.W_hat, z) == doctest::Approx(expected).epsilon(1e-12));

  const auto far = InitialStateSpec::Coherent(CoherentState(p.w_hat.W_hat, pt(500.0, 0.0)));
  CHECK_THROWS_AS(rn_weight(ra, far, p.w_hat.W_hat, z), Error);
}

TEST_CASE("log_povm_mass equals the master density of the same record") {
  const MasterDensityOptions exact;
  for (const auto& p : {free_process(), ho_process()}) {
    const auto rho = two_bumps(p.w_hat);
    Rng rng = stream_rng(77, 0);
    const auto traj = simulate(p, rho, 6, rng);
    const auto mass = log_povm_mass(rho, traj.record, p.model, 6);
    CHECK(std::abs(mass[0]) < 1e-14);
    for (int n = 1; n <= 6; ++n) {
      MeasurementRecord prefix = traj.record;
      prefix.outcomes.resize(n);
      CHECK(mass[n] == doctest::Approx(master_density(rho, p, prefix, exact).log_value).epsilon(1e-9));
    }
  }
  const auto p = magnetic_process();
  const auto rho = InitialStateSpec::Coherent(
      CoherentState(SqueezingMatrix(CMat::Identity(2, 2) * Complex(0.2, 1.1)),
                    PhaseSpacePoint(Vec::LinSpaced(4, -1.0, 1.0))));
  Rng rng = stream_rng(78, 0);
  const auto traj = simulate(p, rho, 4, rng);
  const auto mass = log_povm_mass(rho, traj.record, p.model, 4);
  CHECK(mass[4] == doctest::Approx(master_density(rho, p, traj.record, exact).log_value).epsilon(1e-9));
}

TEST_CASE("povm ratio: E_τ M_n = 1 and M_n → N on long records") {
  const auto p = free_process();
  const auto rho = two_bumps(p.w_hat);
  const auto tau = lattice_reference(p.w_hat.W_hat, pt(0.0, 0.0), Vec::Constant(2, 5.0), 11);
  CHECK(tau.components().size() == 121);
  std::vector<double> m3;
  double gap_early = 0.0, gap_late = 0.0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    Rng rng = stream_rng(2024, t);
    const auto traj = simulate(p, tau, 60, rng);
    const auto ratio = povm_ratio_sequence(rho, tau, traj.record, p.model, p.w_hat, p.fm, 40, 1e-6);
    m3.push_back(std::exp(ratio.log_ratio[3]));
    const double limit = std::exp(ratio.log_limit);
    gap_early += std::abs(std::exp(ratio.log_ratio[1]) - limit);
    gap_late += std::abs(std::exp(ratio.log_ratio[40]) - limit);
  }
  double mean = 0.0, var = 0.0;
  for (double v : m3) mean += v;
  mean /= trials;
  for (double v : m3) var += (v - mean) * (v - mean);
  var /= trials - 1;
  CHECK(std::abs(mean - 1.0) < 4.0 * std::sqrt(var / trials));
  CHECK(gap_late < 1e-3 * gap_early);
}
