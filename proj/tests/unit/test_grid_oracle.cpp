#include <doctest.h>

#include <numbers>

#include "qtrack/grid_oracle.hpp"
#include "qtrack/quadrature.hpp"
#include "qtrack/stats.hpp"

using namespace qtrack;

namespace {

constexpr Complex kI{0.0, 1.0};

CoherentState coh(Complex w, double xi, double pi) {
  return {SqueezingMatrix::Scalar(w), PhaseSpacePoint(Vec::Constant(1, xi), Vec::Constant(1, pi))};
}

ModelSpec ho(double omega, double sigma2) {
  return ModelSpec::Create(presets::harmonic_oscillator(omega), sigma2 * Mat::Ones(1, 1));
}

}  // namespace

TEST_CASE("init_coherent_grid") {
  const GridSpec spec{-16, 16, 1024};
  const auto gs = init_coherent_grid(spec, coh(kI, 0, 0));
  CHECK(std::abs(gs.norm2() - 1.0) < 1e-12);
  // Real symmetric Gaussian.
  for (int j = 1; j < spec.n_points; ++j) {
    CHECK(std::abs(gs.amplitudes()(j).imag()) < 1e-15);
    CHECK(std::abs(gs.amplitudes()(j) - gs.amplitudes()(spec.n_points - j)) < 1e-14);
  }
  CHECK(std::abs(gs.position_variance() - 0.5) < 1e-6);
  CHECK(gs.boundary_mass() < 1e-8);
  CHECK_THROWS_AS(init_coherent_grid(spec, coh(Complex(0, 0.01), 0, 0)), Error);
  CHECK_THROWS_AS(init_coherent_grid(GridSpec{-16, 16, 1000}, coh(kI, 0, 0)), Error);
}

TEST_CASE("apply_V_grid: weak limit, Gaussian weight and completeness") {
  const GridSpec spec{-20, 20, 1024};
  const auto s = coh(Complex(0.4, 0.8), 0.5, 1.0);
  const auto gs = init_coherent_grid(spec, s);

  const auto weak = apply_V_grid(gs, 0.5, 1e6);
  CHECK(weak.weight == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi * 1e6)).epsilon(1e-6));
  CHECK(weak.state.fidelity_with(s) > 1 - 1e-6);

  const auto model = ModelSpec::Create(presets::free_particle(1.0), 0.3 * Mat::Ones(1, 1));
  for (int k = 0; k <= 20; ++k) {
    const double q = -4.5 + 0.5 * k;
    const auto grid = apply_V_grid(gs, q, 0.3);
    const auto closed = apply_measurement(Vec::Constant(1, q), model, s);
    CHECK(std::abs(grid.weight - closed.weight) < 1e-6);
    CHECK(grid.state.fidelity_with(closed.state) > 1 - 1e-6);
  }

  const auto rule = composite_gauss_legendre(40, 12, -20, 20);
  double total = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) total += rule.weights[i] * apply_V_grid(gs, rule.nodes[i], 0.3).weight;
  CHECK(std::abs(total - 1.0) < 1e-6);

  CHECK_THROWS_AS(apply_V_grid(gs, 1e4, 1e-4), Error);
}

TEST_CASE("propagate_grid: unitarity and coherent transport") {
  const GridSpec spec{-24, 24, 2048};
  const auto s = coh(Complex(0.3, 1.1), -1.0, 0.8);
  const auto gs = init_coherent_grid(spec, s);
  for (const auto& model : {ModelSpec::Isotropic(presets::free_particle(1.0), 1.0),
                            ho(std::numbers::pi / 2, 0.5), ho(0.7, 1.0),
                            ModelSpec::Isotropic(presets::free_particle(2.5), 1.0)}) {
    const auto fwd = propagate_grid(gs, model);
    CHECK(std::abs(fwd.norm2() - 1.0) < 1e-10);
    CHECK(fwd.fidelity_with(evolve_forward(model, s)) > 1 - 1e-6);

    const auto inverse = ModelSpec::Create(model.S.inverse(), model.Sigma);
    const auto bwd = propagate_grid(gs, inverse);
    CHECK(bwd.fidelity_with(evolve_backward(model, s)) > 1 - 1e-6);
  }
}

TEST_CASE("free propagation moves a plane-wave packet at velocity p/M") {
  const GridSpec spec{-30, 30, 2048};
  const auto gs = init_coherent_grid(spec, coh(Complex(0, 0.5), -10.0, 3.0));
  const auto out = propagate_grid(gs, ModelSpec::Isotropic(presets::free_particle(2.0), 1.0));
  CHECK(out.position_mean() == doctest::Approx(-10.0 + 1.5).epsilon(1e-8));
}

TEST_CASE("quarter-period oscillator maps position profile to momentum profile") {
  const GridSpec spec{-16, 16, 1024};
  const auto gs = init_coherent_grid(spec, coh(Complex(0, 2.0), 1.5, 0.0));
  const auto out = propagate_grid(gs, ho(std::numbers::pi / 2, 1.0));
  // X → P and P → −X: position variance becomes the old momentum variance.
  CHECK(out.position_variance() == doctest::Approx(gs.momentum_variance()).epsilon(1e-8));
  CHECK(out.momentum_mean() == doctest::Approx(-1.5).epsilon(1e-8));
}

TEST_CASE("sample_outcome_grid: concentration, mean and law") {
  const GridSpec spec{-20, 20, 2048};
  Rng rng = stream_rng(1, 0);
  const auto narrow = init_coherent_grid(spec, coh(Complex(0, 200.0), 2.0, 0.0));
  for (int k = 0; k < 100; ++k) CHECK(std::abs(sample_outcome_grid(narrow, 1e-10, rng) - 2.0) < 0.3);

  const Superposition two({1.0, 1.0}, {coh(Complex(0, 1.0), -2.0, 0.0), coh(Complex(0, 1.0), 2.5, 0.0)});
  const auto gs = init_superposition_grid(spec, two);
  const double sigma2 = 0.4;
  const int n = 20000;
  std::vector<double> draws(n);
  for (auto& d : draws) d = sample_outcome_grid(gs, sigma2, rng);
  double mean = 0.0;
  for (double d : draws) mean += d;
  mean /= n;
  const double sd = std::sqrt(gs.position_variance() + sigma2);
  CHECK(std::abs(mean - gs.position_mean()) < 4 * sd / std::sqrt(double(n)));

  // Reference CDF: |ψ|² convolved with 𝒩(0, σ²), by quadrature on the grid.
  auto cdf = [&](double q) {
    double acc = 0.0;
    for (int j = 0; j < spec.n_points; ++j) {
      acc += std::norm(gs.amplitudes()(j)) * spec.dx() *
             0.5 * std::erfc(-(q - spec.x(j)) / std::sqrt(2 * sigma2));
    }
    return acc;
  };
  const auto ks = ks_one_sample(draws, cdf);
  CHECK(ks.p_value > 1e-3);
}

TEST_CASE("oracle trajectory tracks the closed-form coherent state") {
  const auto model = ModelSpec::Isotropic(presets::free_particle(1.0), 1.0);
  const auto sol = solve_squeezing(model);
  const CoherentState s(sol.W_hat, PhaseSpacePoint(Vec::Constant(1, 0.0), Vec::Constant(1, 0.5)));
  const GridSpec spec{-40, 40, 4096};
  Rng rng = stream_rng(2, 0);
  OracleOptions opts;
  opts.closed_form = s;
  const auto traj = run_oracle_trajectory(init_coherent_grid(spec, s), model, 10, rng, opts);
  REQUIRE(traj.fidelity.size() == 10);
  for (double f : traj.fidelity) CHECK(f > 1 - 1e-5);
  CHECK(traj.record.size() == 10);

  const auto none = run_oracle_trajectory(init_coherent_grid(spec, s), model, 0, rng, opts);
  CHECK(none.record.empty());
}

TEST_CASE("grid resolution convergence of fidelities") {
  const auto model = ho(std::numbers::pi / 2, 0.5);
  const auto s = coh(Complex(0.2, 1.3), 1.0, -0.5);
  const auto expected = evolve_forward(model, s);
  const double coarse = propagate_grid(init_coherent_grid(GridSpec{-20, 20, 1024}, s), model).fidelity_with(expected);
  const double fine = propagate_grid(init_coherent_grid(GridSpec{-20, 20, 2048}, s), model).fidelity_with(expected);
  CHECK(std::abs(coarse - fine) < 1e-6);
}

TEST_CASE("boundary violation aborts the oracle") {
  const auto model = ModelSpec::Isotropic(presets::free_particle(1.0), 1.0);
  const GridSpec spec{-8, 8, 512};
  const auto gs = init_coherent_grid(spec, coh(kI, 0.0, 6.0));
  Rng rng = stream_rng(3, 0);
  CHECK_THROWS_AS(run_oracle_trajectory(gs, model, 10, rng), Error);
}
