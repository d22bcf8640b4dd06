#include "qtrack/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace qtrack {
namespace {

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key, "missing field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

int integer(const json& j, const std::string& path, int lo) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > 1000000000LL) throw ConfigError(path, "out of range");
  return static_cast<int>(v);
}

Vec vector_of(const json& j, int n, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  if (static_cast<int>(j.size()) != n) {
    throw ConfigError(path, "expected " + std::to_string(n) + " entries, got " +
                                std::to_string(j.size()));
  }
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

// Row-major, either nested [[...], ...] or flat [...].
Mat matrix_of(const json& j, int rows, int cols, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  Mat m(rows, cols);
  if (!j.empty() && j[0].is_array()) {
    if (static_cast<int>(j.size()) != rows) {
      throw ConfigError(path, "expected " + std::to_string(rows) + " rows");
    }
    for (int r = 0; r < rows; ++r) {
      m.row(r) = vector_of(j[r], cols, path + "[" + std::to_string(r) + "]").transpose();
    }
    return m;
  }
  const Vec flat = vector_of(j, rows * cols, path);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = flat[r * cols + c];
  return m;
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json complex_list(const std::vector<Complex>& v) {
  json out = json::array();
  for (const auto& z : v) out.push_back({z.real(), z.imag()});
  return out;
}

SqueezingMatrix squeezing_of(const json& j, const SqueezingMatrix& w_hat, int d,
                             const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() != "hat") throw ConfigError(path, "the only string value is \"hat\"");
    return w_hat;
  }
  CMat w(d, d);
  w.real() = matrix_of(field(j, "re", path), d, d, path + ".re");
  w.imag() = matrix_of(field(j, "im", path), d, d, path + ".im");
  try {
    return SqueezingMatrix(w);
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

CoherentState coherent_of(const json& j, const SqueezingMatrix& w_hat, int d,
                          const std::string& path) {
  const auto w = squeezing_of(field(j, "W", path), w_hat, d, path + ".W");
  const Vec xi = vector_of(field(j, "xi", path), d, path + ".xi");
  const Vec pi = vector_of(field(j, "pi", path), d, path + ".pi");
  return CoherentState(w, PhaseSpacePoint(xi, pi));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void header(std::ostream& os, int d, bool latent) {
  os << "traj_id,step";
  std::vector<std::string> groups{"q"};
  if (latent) groups = {"q", "xi", "pi", "eta"};
  for (const auto& g : groups)
    for (int i = 1; i <= d; ++i) os << ',' << g << '_' << i;
  os << '\n';
}

}  // namespace

ModelSpec model_from_json(const json& j, const std::string& path) {
  const int d = integer(field(j, "d", path), path + ".d", 1);
  const Mat s = matrix_of(field(j, "S", path), 2 * d, 2 * d, path + ".S");
  const Mat sigma = matrix_of(field(j, "Sigma", path), d, d, path + ".Sigma");
  SymplecticMatrix sym;
  try {
    sym = SymplecticMatrix::FromMatrix(s);
  } catch (const Error& e) {
    throw ConfigError(path + ".S", e.what());
  }
  try {
    return ModelSpec::Create(sym, sigma);
  } catch (const Error& e) {
    throw ConfigError(path + ".Sigma", e.what());
  }
}

json model_to_json(const ModelSpec& model) {
  return {{"d", model.d}, {"S", matrix_to_json(model.S.matrix())},
          {"Sigma", matrix_to_json(model.Sigma)}};
}

InitialStateSpec InitConfig::as_mixture() const {
  if (kind == Kind::Superposition) {
    throw ConfigError("init.type", "a superposition is not a coherent mixture");
  }
  std::vector<InitialStateSpec::Component> comps;
  for (std::size_t i = 0; i < states.size(); ++i) comps.push_back({weights[i], states[i]});
  return InitialStateSpec::Mixture(std::move(comps));
}

Superposition InitConfig::as_superposition() const {
  if (kind == Kind::Mixture) throw ConfigError("init.type", "a mixture is not a pure state");
  return Superposition(amplitudes, states);
}

InitConfig init_from_json(const json& j, const SqueezingMatrix& w_hat, int d,
                          const std::string& path) {
  InitConfig cfg;
  const json& type = field(j, "type", path);
  if (!type.is_string()) throw ConfigError(path + ".type", "expected a string");
  const std::string kind = type.get<std::string>();
  if (kind == "coherent") {
    cfg.kind = InitConfig::Kind::Coherent;
    cfg.states.push_back(coherent_of(j, w_hat, d, path));
    cfg.weights.push_back(1.0);
    cfg.amplitudes.push_back(1.0);
    return cfg;
  }
  if (kind != "mixture" && kind != "superposition") {
    throw ConfigError(path + ".type", "unknown init type \"" + kind +
                                          "\" (coherent, mixture or superposition)");
  }
  cfg.kind = kind == "mixture" ? InitConfig::Kind::Mixture : InitConfig::Kind::Superposition;
  const json& comps = field(j, "components", path);
  const std::string cpath = path + ".components";
  if (!comps.is_array() || comps.empty()) throw ConfigError(cpath, "expected a non-empty array");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string p = cpath + "[" + std::to_string(i) + "]";
    cfg.states.push_back(coherent_of(comps[i], w_hat, d, p));
    if (cfg.kind == InitConfig::Kind::Mixture) {
      const double w = number(field(comps[i], "weight", p), p + ".weight");
      if (w < 0.0) throw ConfigError(p + ".weight", "must be non-negative");
      cfg.weights.push_back(w);
      cfg.amplitudes.push_back(std::sqrt(w));
    } else {
      const Vec a = vector_of(field(comps[i], "amplitude", p), 2, p + ".amplitude");
      cfg.amplitudes.emplace_back(a[0], a[1]);
      cfg.weights.push_back(std::norm(cfg.amplitudes.back()));
    }
  }
  try {
    if (cfg.kind == InitConfig::Kind::Mixture) {
      cfg.as_mixture();
    } else {
      cfg.as_superposition();
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(cpath, e.what());
  }
  return cfg;
}

Scenario parse_scenario(const json& j) {
  if (!j.is_object()) throw ConfigError("$", "scenario must be a JSON object");
  const int version = integer(field(j, "schema_version", "$"), "schema_version", 0);
  if (version != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version));
  }
  Scenario sc;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ConfigError("name", "expected a string");
    sc.name = j["name"].get<std::string>();
  }
  sc.model = model_from_json(field(j, "model", "$"));
  sc.n_steps = integer(field(j, "n_steps", "$"), "n_steps", 0);
  sc.n_trajectories = integer(field(j, "n_trajectories", "$"), "n_trajectories", 1);
  const json& seed = field(j, "seed", "$");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    throw ConfigError("seed", "expected a non-negative integer");
  }
  sc.seed = seed.get<std::uint64_t>();
  if (j.contains("grid")) {
    const json& g = j["grid"];
    GridSpec spec;
    spec.x_min = number(field(g, "x_min", "grid"), "grid.x_min");
    spec.x_max = number(field(g, "x_max", "grid"), "grid.x_max");
    spec.n_points = integer(field(g, "n_points", "grid"), "grid.n_points", 2);
    try {
      spec.validate();
    } catch (const Error& e) {
      throw ConfigError("grid", e.what());
    }
    sc.grid = spec;
  }
  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) throw ConfigError("outputs.dir", "expected a string");
      sc.out_dir = o["dir"].get<std::string>();
    }
  }

  // Ŵ is needed before init ("W": "hat"); AW fails here.
  sc.w_hat = solve_squeezing(sc.model);
  sc.fm = build_filter(sc.model, sc.w_hat);
  sc.assumptions = check_assumptions(sc.model, sc.fm);
  if (!sc.assumptions.aw_ok) throw AssumptionError("AW", "Assumption AW fails: S_xp is singular");
  if (!sc.assumptions.as_ok) {
    throw AssumptionError("AS", "Assumption AS fails: S has eigenvalues off the unit circle");
  }
  if (!sc.assumptions.am_ok) {
    std::ostringstream msg;
    msg << "Assumption AM fails: spectral radius of M is " << sc.assumptions.m_spectral_radius;
    throw AssumptionError("AM", msg.str());
  }
  sc.init = init_from_json(field(j, "init", "$"), sc.w_hat.W_hat, sc.model.d);
  return sc;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) { return parse_scenario(read_json_file(path)); }

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

json complex_matrix_to_json(const CMat& m) {
  return {{"re", matrix_to_json(m.real())}, {"im", matrix_to_json(m.imag())}};
}

json squeezing_to_json(const StableSqueezing& w, const ModelSpec& model) {
  return {{"W_hat", complex_matrix_to_json(w.W_hat.value())},
          {"residual", w.residual},
          {"iterations", w.iterations},
          {"kappa", matrix_to_json(w.kappa)},
          {"kappa_eigenvalues", complex_list(eigenvalues(w.kappa))},
          {"innovation_covariance", matrix_to_json(w.innovation_covariance(model))}};
}

json assumptions_to_json(const AssumptionReport& r) {
  return {{"AW", {{"ok", r.aw_ok}, {"sxp_min_singular", r.sxp_min_singular}}},
          {"AS", {{"ok", r.as_ok}, {"s_eigenvalues", complex_list(r.s_eigenvalues)}}},
          {"AM",
           {{"ok", r.am_ok},
            {"spectral_radius", r.m_spectral_radius},
            {"m_eigenvalues", complex_list(r.m_eigenvalues)}}},
          {"all_ok", r.all_ok()}};
}

std::string format_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_trajectories_csv(std::ostream& os, const std::vector<TrajectorySample>& samples, int d) {
  header(os, d, true);
  for (const auto& s : samples) {
    for (int k = 0; k < s.record.size(); ++k) {
      os << s.record.traj_id << ',' << k;
      for (int i = 0; i < d; ++i) os << ',' << format_double(s.record.outcomes[k][i]);
      for (int i = 0; i < d; ++i) os << ',' << format_double(s.zetas[k].xi()[i]);
      for (int i = 0; i < d; ++i) os << ',' << format_double(s.zetas[k].pi()[i]);
      for (int i = 0; i < d; ++i) os << ',' << format_double(s.etas[k][i]);
      os << '\n';
    }
  }
}

void write_records_csv(std::ostream& os, const std::vector<MeasurementRecord>& records, int d) {
  header(os, d, false);
  for (const auto& r : records) {
    for (int k = 0; k < r.size(); ++k) {
      os << r.traj_id << ',' << k;
      for (int i = 0; i < d; ++i) os << ',' << format_double(r.outcomes[k][i]);
      os << '\n';
    }
  }
}

std::vector<MeasurementRecord> read_records_csv(std::istream& is, const std::string& name) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError(name, "empty file");
  const auto cols = split_csv(line);
  int traj_col = -1, step_col = -1;
  std::vector<int> q_cols;
  for (int c = 0; c < static_cast<int>(cols.size()); ++c) {
    if (cols[c] == "traj_id") traj_col = c;
    if (cols[c] == "step") step_col = c;
    if (cols[c].rfind("q_", 0) == 0) q_cols.push_back(c);
  }
  if (traj_col < 0 || step_col < 0 || q_cols.empty()) {
    throw ConfigError(name, "header needs traj_id, step and q_* columns");
  }
  std::vector<MeasurementRecord> out;
  std::map<std::uint64_t, std::size_t> index;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    const std::string where = name + ":" + std::to_string(lineno);
    if (cells.size() < cols.size()) throw ConfigError(where, "too few columns");
    std::uint64_t id = 0;
    long step = 0;
    try {
      id = std::stoull(cells[traj_col]);
      step = std::stol(cells[step_col]);
    } catch (const std::exception&) {
      throw ConfigError(where, "bad traj_id or step");
    }
    auto [it, fresh] = index.emplace(id, out.size());
    if (fresh) {
      out.emplace_back();
      out.back().traj_id = id;
    }
    auto& rec = out[it->second];
    if (step != rec.size()) throw ConfigError(where, "steps must be consecutive from 0");
    Vec q(q_cols.size());
    for (std::size_t i = 0; i < q_cols.size(); ++i) {
      try {
        std::size_t used = 0;
        q[i] = std::stod(cells[q_cols[i]], &used);
        if (used != cells[q_cols[i]].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError(where, "bad value in column " + cols[q_cols[i]]);
      }
    }
    rec.outcomes.push_back(std::move(q));
  }
  return out;
}

}  // namespace qtrack
