#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "qtrack/examples.hpp"

namespace fs = std::filesystem;
using namespace qtrack;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trajectories;
  std::optional<int> steps;
  std::string out;
  double tol = kDefaultEstimatorTol;
  std::string records;
  std::string example;
  std::string csv_a, csv_b;
};

void common_flags(CLI::App* cmd, Flags& f, bool needs_config) {
  auto* c = cmd->add_option("--config", f.config, "Scenario JSON");
  if (needs_config) c->required();
  cmd->add_option("--seed", f.seed, "Override the scenario seed");
  cmd->add_option("--trajectories", f.trajectories, "Override the number of trajectories")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--steps", f.steps, "Override the number of steps")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--tol", f.tol, "Estimator truncation tolerance")->check(CLI::PositiveNumber);
}

fs::path out_dir(const Flags& f, const std::string& fallback) {
  fs::path dir = f.out.empty() ? fs::path(fallback) : fs::path(f.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  return os;
}

void emit(const json& j, const std::optional<fs::path>& file) {
  std::cout << j.dump(2) << '\n';
  if (file) write_json_file(file->string(), j);
}

// The model alone, from a scenario or a bare model file.
ModelSpec model_of(const std::string& path) {
  const json j = read_json_file(path);
  if (j.is_object() && j.contains("model")) return model_from_json(j["model"], "model");
  return model_from_json(j, "$");
}

Scenario scenario_of(const Flags& f) {
  Scenario sc = load_scenario(f.config);
  if (f.seed) sc.seed = *f.seed;
  if (f.trajectories) sc.n_trajectories = *f.trajectories;
  if (f.steps) sc.n_steps = *f.steps;
  return sc;
}

json moments_json(const std::vector<MeasurementRecord>& records) {
  json steps = json::array();
  if (records.empty()) return steps;
  const int n = records.front().size();
  for (int k = 0; k < n; ++k) {
    Mat q(records.size(), records.front().outcomes[k].size());
    for (std::size_t i = 0; i < records.size(); ++i) q.row(i) = records[i].outcomes[k].transpose();
    const Vec mean = column_means(q);
    json entry = {{"step", k}, {"mean", std::vector<double>(mean.data(), mean.data() + mean.size())}};
    if (q.rows() > 1) {
      const Mat cov = sample_covariance(q);
      const Vec var = cov.diagonal();
      entry["variance"] = std::vector<double>(var.data(), var.data() + var.size());
    }
    steps.push_back(entry);
  }
  return steps;
}

int cmd_solve(const Flags& f) {
  const ModelSpec model = model_of(f.config);
  const auto w = solve_squeezing(model);
  json j = squeezing_to_json(w, model);
  j["model"] = model_to_json(model);
  emit(j, f.out.empty() ? std::nullopt : std::optional(out_dir(f, ".") / "solve.json"));
  return 0;
}

int cmd_check(const Flags& f) {
  const ModelSpec model = model_of(f.config);
  AssumptionReport report;
  if (assumption_aw(model.S)) {
    report = check_assumptions(model, build_filter(model, solve_squeezing(model)));
  } else {
    // Ŵ does not exist; AM cannot be evaluated.
    report.aw_ok = false;
    report.sxp_min_singular = sxp_min_singular_value(model.S);
    report.s_eigenvalues = eigenvalues(model.S.matrix());
    report.as_ok = true;
    for (const auto& ev : report.s_eigenvalues)
      if (std::abs(std::abs(ev) - 1.0) > kAsTolerance) report.as_ok = false;
  }
  emit(assumptions_to_json(report),
       f.out.empty() ? std::nullopt : std::optional(out_dir(f, ".") / "check.json"));
  return report.all_ok() ? 0 : kExitFail;
}

int cmd_simulate(const Flags& f) {
  const Scenario sc = scenario_of(f);
  const auto init = sc.init.as_mixture();
  const Process process = Process::Build(sc.model);
  const auto samples =
      simulate_ensemble(process, init, {sc.n_trajectories, sc.n_steps, sc.seed, Backend::Parallel});
  const fs::path dir = out_dir(f, sc.out_dir);
  {
    auto os = open_out(dir / "trajectories.csv");
    write_trajectories_csv(os, samples, sc.model.d);
  }
  const auto report = simulation_checks(process, init, samples);
  std::vector<MeasurementRecord> records;
  for (const auto& s : samples) records.push_back(s.record);
  json summary = {{"scenario", sc.name},
                  {"seed", sc.seed},
                  {"n_trajectories", sc.n_trajectories},
                  {"n_steps", sc.n_steps},
                  {"w_hat", complex_matrix_to_json(sc.w_hat.W_hat.value())},
                  {"moments", moments_json(records)},
                  {"report", report.to_json()}};
  emit(summary, dir / "summary.json");
  return report.all_pass() ? 0 : kExitFail;
}

int cmd_oracle(const Flags& f) {
  const Scenario sc = scenario_of(f);
  if (sc.model.d != 1) throw ConfigError("model.d", "the grid oracle is one-dimensional");
  if (sc.init.kind == InitConfig::Kind::Mixture) {
    throw ConfigError("init.type", "the grid oracle needs a pure state (coherent or superposition)");
  }
  const GridSpec grid =
      sc.grid ? *sc.grid : suggest_grid(sc.model, sc.init.weights, sc.init.states, sc.n_steps);
  const GridState g0 = init_superposition_grid(grid, sc.init.as_superposition());
  OracleOptions oo;
  if (sc.init.kind == InitConfig::Kind::Coherent) {
    oo.closed_form = sc.init.states.front();
  } else {
    oo.fit_frame = sc.w_hat.W_hat;
  }
  const auto runs =
      oracle_ensemble(g0, sc.model, {sc.n_trajectories, sc.n_steps, sc.seed, Backend::Parallel}, oo);

  const fs::path dir = out_dir(f, sc.out_dir);
  std::vector<MeasurementRecord> records;
  for (const auto& r : runs) records.push_back(r.record);
  {
    auto os = open_out(dir / "records.csv");
    write_records_csv(os, records, 1);
  }
  ComparisonReport report;
  {
    auto os = open_out(dir / "fidelity.csv");
    os << "traj_id,step,fidelity,fit_fidelity,fit_xi,fit_pi\n";
    double worst = 1.0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& r = runs[i];
      for (int k = 0; k < sc.n_steps; ++k) {
        os << i << ',' << k << ',';
        if (k < static_cast<int>(r.fidelity.size())) {
          os << format_double(r.fidelity[k]);
          worst = std::min(worst, r.fidelity[k]);
        }
        os << ',';
        if (k < static_cast<int>(r.fit_fidelity.size())) {
          os << format_double(r.fit_fidelity[k]) << ',' << format_double(r.fit_zeta[k].xi()[0])
             << ',' << format_double(r.fit_zeta[k].pi()[0]);
        } else {
          os << ",,";
        }
        os << '\n';
      }
    }
    if (oo.closed_form) {
      report.add({"oracle.closed_form_fidelity", 1.0 - worst, 1e-6, 1.0 - worst < 1e-6,
                  "1 − min fidelity with the tracked coherent state"});
    }
  }
  json summary = {{"scenario", sc.name},
                  {"seed", sc.seed},
                  {"n_trajectories", sc.n_trajectories},
                  {"n_steps", sc.n_steps},
                  {"grid", {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"n_points", grid.n_points}}},
                  {"moments", moments_json(records)},
                  {"report", report.to_json()}};
  emit(summary, dir / "summary.json");
  return report.all_pass() ? 0 : kExitFail;
}

int cmd_estimate(const Flags& f) {
  const Scenario sc = scenario_of(f);
  std::ifstream in(f.records);
  if (!in) throw ConfigError(f.records, "cannot open file");
  const auto records = read_records_csv(in, f.records);
  const Process process = Process::Build(sc.model);
  const int d = sc.model.d;
  const fs::path dir = out_dir(f, sc.out_dir);
  auto os = open_out(dir / "estimates.csv");
  os << "traj_id,step";
  for (const char* g : {"xi_hat", "pi_hat", "eta_hat"})
    for (int i = 1; i <= d; ++i) os << ',' << g << '_' << i;
  os << ",truncation,tail_bound\n";

  std::vector<Vec> resid, lag;
  int estimated = 0;
  for (const auto& rec : records) {
    std::vector<Vec> eta;
    for (int k = 0; k < rec.size(); ++k) {
      EstimatorOutput e;
      try {
        e = mle_shifted(rec, k, process.fm, f.tol);
      } catch (const RecordTooShort& err) {
        if (k == 0) {
          throw ConfigError(f.records + ": traj " + std::to_string(rec.traj_id), err.what());
        }
        break;
      }
      const Vec eta_hat = rec.outcomes[k] - e.zeta_hat.position();
      os << rec.traj_id << ',' << k;
      for (int i = 0; i < 2 * d; ++i) os << ',' << format_double(e.zeta_hat.flat()[i]);
      for (int i = 0; i < d; ++i) os << ',' << format_double(eta_hat[i]);
      os << ',' << e.truncation << ',' << format_double(e.tail_bound) << '\n';
      eta.push_back(eta_hat);
    }
    for (std::size_t k = 0; k < eta.size(); ++k) {
      resid.push_back(eta[k]);
      if (k + 1 < eta.size()) {
        const Mat outer = eta[k] * eta[k + 1].transpose();
        lag.push_back(Eigen::Map<const Vec>(outer.data(), outer.size()));
      }
    }
    ++estimated;
  }
  ComparisonReport report;
  auto stack = [](const std::vector<Vec>& v) {
    Mat m(v.size(), v.front().size());
    for (std::size_t i = 0; i < v.size(); ++i) m.row(i) = v[i].transpose();
    return m;
  };
  if (resid.size() > 1) {
    const Mat r = stack(resid);
    report.merge(compare_mean(r, Vec::Zero(d), 4.0, "residual_mean"));
    report.merge(compare_covariance(r, process.noise_cov, 4.0, "residual_cov"));
  }
  if (lag.size() > 1) {
    report.merge(compare_mean(stack(lag), Vec::Zero(d * d), 4.0, "residual_lag1_cross_moment"));
  }
  json diag = {{"scenario", sc.name},
               {"records", estimated},
               {"residuals", resid.size()},
               {"tol", f.tol},
               {"innovation_covariance", process.noise_cov.rows() == 1
                                             ? json(process.noise_cov(0, 0))
                                             : json(std::vector<double>(process.noise_cov.data(),
                                                                        process.noise_cov.data() +
                                                                            process.noise_cov.size()))},
               {"report", report.to_json()}};
  emit(diag, dir / "diagnostics.json");
  return report.all_pass() ? 0 : kExitFail;
}

int cmd_example(const Flags& f) {
  const Example e = parse_example(f.example);
  ExampleOptions opt;
  if (f.seed) opt.seed = *f.seed;
  if (f.trajectories) opt.n_trajectories = *f.trajectories;
  if (f.steps) opt.n_steps = *f.steps;
  opt.tol = f.tol;
  const auto report = run_example(e, opt);
  json j = {{"example", example_name(e)}, {"seed", opt.seed}, {"report", report.to_json()}};
  emit(j, f.out.empty() ? std::nullopt
                        : std::optional(out_dir(f, ".") / ("example_" + example_name(e) + ".json")));
  return report.all_pass() ? 0 : kExitFail;
}

int cmd_compare(const Flags& f) {
  auto read = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open file");
    auto recs = read_records_csv(in, path);
    if (recs.empty()) throw ConfigError(path, "no records");
    return recs;
  };
  auto a = read(f.csv_a);
  auto b = read(f.csv_b);
  int n = f.steps ? *f.steps : std::numeric_limits<int>::max();
  for (const auto* set : {&a, &b})
    for (const auto& r : *set) n = std::min(n, r.size());
  if (n <= 0) throw ConfigError("records", "no common steps to compare");
  for (auto* set : {&a, &b})
    for (auto& r : *set) r.outcomes.resize(n);
  const auto report = record_law_checks(a, b, "compare");
  json j = {{"a", f.csv_a}, {"b", f.csv_b}, {"steps", n}, {"report", report.to_json()}};
  emit(j, f.out.empty() ? std::nullopt : std::optional(out_dir(f, ".") / "compare.json"));
  return report.all_pass() ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tracks of a quantum particle under repeated Gaussian position measurements"};
  app.require_subcommand(1);
  Flags f;

  auto* solve = app.add_subcommand("solve", "Stable squeezing matrix Ŵ as JSON");
  common_flags(solve, f, true);
  auto* check = app.add_subcommand("check", "Assumption report (AW, AS, AM) as JSON");
  common_flags(check, f, true);
  auto* simulate = app.add_subcommand("simulate", "Phase-space process ensemble");
  common_flags(simulate, f, true);
  auto* oracle = app.add_subcommand("oracle", "Grid wavefunction oracle ensemble (d = 1)");
  common_flags(oracle, f, true);
  auto* estimate = app.add_subcommand("estimate", "Maximum-likelihood track from a record CSV");
  common_flags(estimate, f, true);
  estimate->add_option("--records", f.records, "Record CSV (traj_id, step, q_*)")->required();
  auto* example = app.add_subcommand("example", "Run a bundled example pipeline");
  common_flags(example, f, false);
  example->add_option("name", f.example, "free, ho or magnetic")->required();
  auto* compare = app.add_subcommand("compare", "Compare the joint law of two record CSVs");
  common_flags(compare, f, false);
  compare->add_option("a", f.csv_a, "First record CSV")->required();
  compare->add_option("b", f.csv_b, "Second record CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*solve) return cmd_solve(f);
    if (*check) return cmd_check(f);
    if (*simulate) return cmd_simulate(f);
    if (*oracle) return cmd_oracle(f);
    if (*estimate) return cmd_estimate(f);
    if (*example) return cmd_example(f);
    if (*compare) return cmd_compare(f);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const AssumptionError& e) {
    std::cerr << "assumption " << e.which() << " failed: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitConfig;
}
