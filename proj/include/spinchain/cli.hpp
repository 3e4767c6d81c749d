#pragma once
// Experiment orchestration: strict JSON configuration, grid execution over a
// worker pool, and deterministic CSV/JSON emission with a run manifest.
//
// Config layout (strict, unknown keys rejected):
//   {
//     "experiment": "phase_diagram|spectrum|bethe_solve|dynamics|compare|scaling",
//     "model":    { "n": grid, "delta": grid, "g": grid,
//                   "m": int (default N/2; scaling defaults to 2),
//                   "delta_prime": real },
//     "solver":   { "tol_eigen", "tol_bethe", "max_applies", "dense_cap",
//                   "pt_tol", "eigen_target": "auto|steady|ground",
//                   "path": { "g_initial", "step_delta", "step_g",
//                             "margin", "min_step" } },
//     "dynamics": { "dt", "t_max", "record_every",
//                   "initial_state": "domain_wall|xxz_ground" },
//     "output":   { "directory", "format": "csv|json" },
//     "threads":  int
//   }
// A grid is a number, an array of numbers, or {"start", "stop", "step"}.
//
// Grid points run in lexicographic (delta, g, n) order; workers pull points
// from an atomic counter and a single collector writes files in point order,
// so identical configs produce byte-identical CSV (12 significant digits).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bethe.hpp"
#include "dynamics.hpp"
#include "model.hpp"
#include "spectral.hpp"
#include "thermo.hpp"

namespace spinchain::cli {

using json = nlohmann::json;
using model::ModelParams;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Experiment {
  phase_diagram,
  spectrum,
  bethe_solve,
  dynamics,
  compare,
  scaling
};

inline const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::phase_diagram: return "phase_diagram";
    case Experiment::spectrum: return "spectrum";
    case Experiment::bethe_solve: return "bethe_solve";
    case Experiment::dynamics: return "dynamics";
    case Experiment::compare: return "compare";
    case Experiment::scaling: return "scaling";
  }
  return "?";
}

inline Experiment experiment_from_name(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "phase_diagram") return Experiment::phase_diagram;
  if (t == "spectrum") return Experiment::spectrum;
  if (t == "bethe_solve") return Experiment::bethe_solve;
  if (t == "dynamics") return Experiment::dynamics;
  if (t == "compare") return Experiment::compare;
  if (t == "scaling") return Experiment::scaling;
  throw ConfigError("experiment: unknown value '" + s + "'");
}

struct RunConfig {
  Experiment experiment = Experiment::spectrum;

  std::vector<int> n_values;
  std::vector<double> delta_values;
  std::vector<double> g_values;
  int n_magnons = -1;  // -1 selects the per-experiment default
  double delta_prime = 0.0;

  double tol_eigen = 1e-8;
  double tol_bethe = 1e-10;
  long max_applies = 1000000;
  std::size_t dense_cap = 2048;
  double pt_tol = 1e-9;
  std::string eigen_target = "auto";  // auto|steady|ground
  bethe::ContinuationPath path{};

  double dt = 0.0;     // 0 selects the evolve default
  double t_max = 0.0;  // 0 selects 100/g
  int record_every = 1;
  std::string initial_state = "domain_wall";  // domain_wall|xxz_ground

  std::string out_dir = ".";
  std::string format = "csv";  // csv|json
  int threads = 1;
};

namespace detail {

inline std::string fmt_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * std::uint64_t(n - k + i) / std::uint64_t(i);
  return r;
}

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

inline const json& require_key(const json& obj, const char* key,
                               const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ConfigError(where + "." + key + ": missing required key");
  return *it;
}

inline double get_number(const json& v, const std::string& field) {
  if (!v.is_number())
    throw ConfigError(field + ": expected a number");
  return v.get<double>();
}

inline long get_integer(const json& v, const std::string& field) {
  if (v.is_number_integer()) return v.get<long>();
  if (v.is_number()) {
    const double x = v.get<double>();
    if (std::abs(x - std::round(x)) < 1e-9) return std::lround(x);
  }
  throw ConfigError(field + ": expected an integer");
}

inline std::string get_string(const json& v, const std::string& field) {
  if (!v.is_string())
    throw ConfigError(field + ": expected a string");
  return v.get<std::string>();
}

inline std::vector<double> parse_grid(const json& v, const std::string& field) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const json& e : v) out.push_back(get_number(e, field));
  } else if (v.is_object()) {
    check_keys(v, field, {"start", "stop", "step"});
    const double start = get_number(require_key(v, "start", field), field + ".start");
    const double stop = get_number(require_key(v, "stop", field), field + ".stop");
    const double step = get_number(require_key(v, "step", field), field + ".step");
    if (step <= 0.0)
      throw ConfigError(field + ".step: must be positive");
    if (stop < start)
      throw ConfigError(field + ": stop below start");
    const double slack = 1e-9 * std::max({1.0, std::abs(start), std::abs(stop)});
    for (long k = 0;; ++k) {
      const double x = start + double(k) * step;
      if (x > stop + slack) break;
      out.push_back(x);
    }
  } else {
    throw ConfigError(field + ": expected number, array, or {start, stop, step}");
  }
  if (out.empty())
    throw ConfigError(field + ": empty grid");
  return out;
}

inline std::vector<int> parse_int_grid(const json& v, const std::string& field) {
  std::vector<int> out;
  for (double x : parse_grid(v, field)) {
    if (std::abs(x - std::round(x)) > 1e-9)
      throw ConfigError(field + ": expected integer values");
    out.push_back(int(std::lround(x)));
  }
  return out;
}

}  // namespace detail

inline int effective_magnons(const RunConfig& cfg, int n) {
  if (cfg.n_magnons >= 0) return cfg.n_magnons;
  return cfg.experiment == Experiment::scaling ? 2 : n / 2;
}

inline RunConfig parse_config(const std::string& config_path,
                              const std::string* subcommand = nullptr) {
  std::ifstream in(config_path);
  if (!in)
    throw ConfigError("config: cannot open '" + config_path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!root.is_object())
    throw ConfigError("config: top level must be a JSON object");
  detail::check_keys(root, "config",
                     {"experiment", "model", "solver", "dynamics", "output",
                      "threads"});

  RunConfig cfg;

  if (root.contains("experiment")) {
    cfg.experiment = experiment_from_name(
        detail::get_string(root["experiment"], "experiment"));
    if (subcommand && cfg.experiment != experiment_from_name(*subcommand))
      throw ConfigError("experiment: config says '" +
                        std::string(experiment_name(cfg.experiment)) +
                        "' but the subcommand is '" + *subcommand + "'");
  } else if (subcommand) {
    cfg.experiment = experiment_from_name(*subcommand);
  } else {
    throw ConfigError("experiment: missing required key");
  }

  if (!root.contains("model"))
    throw ConfigError("model: missing required key");
  const json& m = root["model"];
  if (!m.is_object())
    throw ConfigError("model: expected an object");
  detail::check_keys(m, "model", {"n", "delta", "g", "m", "delta_prime"});
  cfg.n_values = detail::parse_int_grid(detail::require_key(m, "n", "model"), "model.n");
  cfg.delta_values =
      detail::parse_grid(detail::require_key(m, "delta", "model"), "model.delta");
  cfg.g_values = detail::parse_grid(detail::require_key(m, "g", "model"), "model.g");
  if (m.contains("m")) {
    const long v = detail::get_integer(m["m"], "model.m");
    if (v < 0)
      throw ConfigError("model.m: must be nonnegative");
    cfg.n_magnons = int(v);
  }
  if (m.contains("delta_prime"))
    cfg.delta_prime = detail::get_number(m["delta_prime"], "model.delta_prime");

  if (root.contains("solver")) {
    const json& s = root["solver"];
    if (!s.is_object())
      throw ConfigError("solver: expected an object");
    detail::check_keys(s, "solver",
                       {"tol_eigen", "tol_bethe", "max_applies", "dense_cap",
                        "pt_tol", "eigen_target", "path"});
    if (s.contains("tol_eigen"))
      cfg.tol_eigen = detail::get_number(s["tol_eigen"], "solver.tol_eigen");
    if (s.contains("tol_bethe"))
      cfg.tol_bethe = detail::get_number(s["tol_bethe"], "solver.tol_bethe");
    if (s.contains("max_applies"))
      cfg.max_applies = detail::get_integer(s["max_applies"], "solver.max_applies");
    if (s.contains("dense_cap")) {
      const long v = detail::get_integer(s["dense_cap"], "solver.dense_cap");
      if (v <= 0)
        throw ConfigError("solver.dense_cap: must be positive");
      cfg.dense_cap = std::size_t(v);
    }
    if (s.contains("pt_tol"))
      cfg.pt_tol = detail::get_number(s["pt_tol"], "solver.pt_tol");
    if (s.contains("eigen_target"))
      cfg.eigen_target = detail::get_string(s["eigen_target"], "solver.eigen_target");
    if (s.contains("path")) {
      const json& p = s["path"];
      if (!p.is_object())
        throw ConfigError("solver.path: expected an object");
      detail::check_keys(p, "solver.path",
                         {"g_initial", "step_delta", "step_g", "margin",
                          "min_step"});
      if (p.contains("g_initial"))
        cfg.path.g_initial = detail::get_number(p["g_initial"], "solver.path.g_initial");
      if (p.contains("step_delta"))
        cfg.path.step_delta = detail::get_number(p["step_delta"], "solver.path.step_delta");
      if (p.contains("step_g"))
        cfg.path.step_g = detail::get_number(p["step_g"], "solver.path.step_g");
      if (p.contains("margin"))
        cfg.path.margin = detail::get_number(p["margin"], "solver.path.margin");
      if (p.contains("min_step"))
        cfg.path.min_step = detail::get_number(p["min_step"], "solver.path.min_step");
    }
  }

  if (root.contains("dynamics")) {
    const json& d = root["dynamics"];
    if (!d.is_object())
      throw ConfigError("dynamics: expected an object");
    detail::check_keys(d, "dynamics",
                       {"dt", "t_max", "record_every", "initial_state"});
    if (d.contains("dt")) cfg.dt = detail::get_number(d["dt"], "dynamics.dt");
    if (d.contains("t_max"))
      cfg.t_max = detail::get_number(d["t_max"], "dynamics.t_max");
    if (d.contains("record_every"))
      cfg.record_every =
          int(detail::get_integer(d["record_every"], "dynamics.record_every"));
    if (d.contains("initial_state"))
      cfg.initial_state =
          detail::get_string(d["initial_state"], "dynamics.initial_state");
  }

  if (root.contains("output")) {
    const json& o = root["output"];
    if (!o.is_object())
      throw ConfigError("output: expected an object");
    detail::check_keys(o, "output", {"directory", "format"});
    if (o.contains("directory"))
      cfg.out_dir = detail::get_string(o["directory"], "output.directory");
    if (o.contains("format"))
      cfg.format = detail::get_string(o["format"], "output.format");
  }

  if (root.contains("threads"))
    cfg.threads = int(detail::get_integer(root["threads"], "threads"));

  // Cross-field validation; every message names the offending field.
  if (cfg.tol_eigen <= 0) throw ConfigError("solver.tol_eigen: must be positive");
  if (cfg.tol_bethe <= 0) throw ConfigError("solver.tol_bethe: must be positive");
  if (cfg.pt_tol <= 0) throw ConfigError("solver.pt_tol: must be positive");
  if (cfg.max_applies <= 0) throw ConfigError("solver.max_applies: must be positive");
  if (cfg.path.g_initial <= 1.0)
    throw ConfigError("solver.path.g_initial: must exceed 1");
  if (cfg.path.step_delta <= 0 || cfg.path.step_g <= 0 || cfg.path.min_step <= 0)
    throw ConfigError("solver.path: step sizes must be positive");
  if (cfg.path.margin <= 0 || cfg.path.margin >= 1)
    throw ConfigError("solver.path.margin: must lie in (0, 1)");
  if (cfg.eigen_target != "auto" && cfg.eigen_target != "steady" &&
      cfg.eigen_target != "ground")
    throw ConfigError("solver.eigen_target: expected auto, steady, or ground");
  if (cfg.format != "csv" && cfg.format != "json")
    throw ConfigError("output.format: expected csv or json");
  if (cfg.threads < 1) throw ConfigError("threads: must be at least 1");
  if (cfg.record_every < 1)
    throw ConfigError("dynamics.record_every: must be at least 1");
  if (cfg.dt < 0) throw ConfigError("dynamics.dt: must be positive");
  if (cfg.t_max < 0) throw ConfigError("dynamics.t_max: must be positive");
  if (cfg.initial_state != "domain_wall" && cfg.initial_state != "xxz_ground")
    throw ConfigError("dynamics.initial_state: expected domain_wall or xxz_ground");

  for (int n : cfg.n_values) {
    if (n < 2 || n % 2 != 0)
      throw ConfigError("model.n: n = " + std::to_string(n) +
                        " must be even and at least 2");
    if (n > 62)
      throw ConfigError("model.n: n = " + std::to_string(n) + " exceeds 62");
    const int mm = effective_magnons(cfg, n);
    if (mm > n)
      throw ConfigError("model.m: m = " + std::to_string(mm) +
                        " exceeds n = " + std::to_string(n));
  }

  if (cfg.experiment == Experiment::dynamics) {
    for (int n : cfg.n_values)
      if (effective_magnons(cfg, n) != n / 2)
        throw ConfigError("model.m: dynamics requires m = n/2 (n = " +
                          std::to_string(n) + ")");
    for (double g : cfg.g_values)
      if (g <= 0 && (cfg.dt <= 0 || cfg.t_max <= 0))
        throw ConfigError(
            "model.g: g = 0 requires explicit dynamics.dt and dynamics.t_max");
  }

  if (cfg.experiment == Experiment::bethe_solve ||
      cfg.experiment == Experiment::compare) {
    if (cfg.delta_prime != 0.0)
      throw ConfigError("model.delta_prime: must be 0 for " +
                        std::string(experiment_name(cfg.experiment)));
  }

  const bool needs_dense = cfg.experiment == Experiment::phase_diagram ||
                           cfg.experiment == Experiment::spectrum ||
                           cfg.experiment == Experiment::scaling;
  if (needs_dense) {
    for (int n : cfg.n_values) {
      const int mm = effective_magnons(cfg, n);
      const std::uint64_t dim = detail::binomial(n, mm);
      if (dim > cfg.dense_cap)
        throw ConfigError("model.n: sector dimension " + std::to_string(dim) +
                          " at n = " + std::to_string(n) + ", m = " +
                          std::to_string(mm) + " exceeds solver.dense_cap = " +
                          std::to_string(cfg.dense_cap));
    }
  }

  return cfg;
}

inline json config_json(const RunConfig& c) {
  json j;
  j["experiment"] = experiment_name(c.experiment);
  j["model"] = {{"n", c.n_values},
                {"delta", c.delta_values},
                {"g", c.g_values},
                {"m", c.n_magnons},
                {"delta_prime", c.delta_prime}};
  j["solver"] = {{"tol_eigen", c.tol_eigen},
                 {"tol_bethe", c.tol_bethe},
                 {"max_applies", c.max_applies},
                 {"dense_cap", c.dense_cap},
                 {"pt_tol", c.pt_tol},
                 {"eigen_target", c.eigen_target},
                 {"path",
                  {{"g_initial", c.path.g_initial},
                   {"step_delta", c.path.step_delta},
                   {"step_g", c.path.step_g},
                   {"margin", c.path.margin},
                   {"min_step", c.path.min_step}}}};
  j["dynamics"] = {{"dt", c.dt},
                   {"t_max", c.t_max},
                   {"record_every", c.record_every},
                   {"initial_state", c.initial_state}};
  j["output"] = {{"directory", c.out_dir}, {"format", c.format}};
  j["threads"] = c.threads;
  return j;
}

inline json bethe_state_json(const bethe::BetheState& s) {
  json j;
  j["params"] = {{"n", s.params.n_sites},
                 {"delta", s.params.delta},
                 {"g", s.params.g},
                 {"delta_prime", s.params.delta_prime}};
  json roots = json::array();
  for (const auto& b : s.roots) roots.push_back({b.real(), b.imag()});
  j["roots"] = std::move(roots);
  j["residual"] = s.residual;
  j["energy"] = {s.energy.real(), s.energy.imag()};
  json path = json::array();
  for (const auto& w : s.path) path.push_back({w[0], w[1]});
  j["path"] = std::move(path);
  return j;
}

namespace detail {

struct GridPoint {
  double delta;
  double g;
  int n;
  int m;
};

struct PointResult {
  bool ok = false;
  std::string message;
  std::vector<json> rows;             // rows for the experiment's main table
  std::optional<json> point_json;     // per-point JSON payload (bethe_solve)
  std::optional<dynamics::TimeSeries> series;  // per-point trajectory
  int series_sites = 0;
  double scalar = std::numeric_limits<double>::quiet_NaN();  // scaling mean
};

inline std::string fmt_cell(const json& v) {
  if (v.is_number_float()) return fmt_g(v.get<double>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

inline void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream f(p, std::ios::binary);
  if (!f)
    throw ConfigError("output.directory: cannot write '" + p.string() + "'");
  f << body;
  if (!f)
    throw ConfigError("output.directory: write failed for '" + p.string() + "'");
}

// One table, two encodings: CSV (fixed 12-significant-digit cells) or a JSON
// array of row objects. Returns the file name actually written.
inline std::string write_table(const std::filesystem::path& dir,
                               const std::string& stem,
                               const std::vector<std::string>& columns,
                               const std::vector<json>& rows,
                               const std::string& format) {
  if (format == "json") {
    json arr = json::array();
    for (const json& r : rows) arr.push_back(r);
    write_text(dir / (stem + ".json"), arr.dump(2) + "\n");
    return stem + ".json";
  }
  std::string body;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) body += ',';
    body += columns[c];
  }
  body += '\n';
  for (const json& r : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) body += ',';
      body += fmt_cell(r.at(columns[c]));
    }
    body += '\n';
  }
  write_text(dir / (stem + ".csv"), body);
  return stem + ".csv";
}

inline std::string write_timeseries_csv(const std::filesystem::path& dir,
                                        const std::string& stem,
                                        const dynamics::TimeSeries& ts,
                                        int n_sites) {
  std::string body = "t";
  for (int s = 1; s <= n_sites; ++s) body += ",sz_" + std::to_string(s);
  body += ",im_estimate\n";
  for (std::size_t i = 0; i < ts.times.size(); ++i) {
    body += fmt_g(ts.times[i]);
    for (int s = 1; s <= n_sites; ++s)
      body += ',' + fmt_g(ts.values.at("sz_" + std::to_string(s))[i]);
    body += ',' + fmt_g(ts.values.at("im_estimate")[i]);
    body += '\n';
  }
  const std::string name = stem + ".csv";
  write_text(dir / name, body);
  return name;
}

inline std::string utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

// Thermodynamic-limit Im(E) for the state the ED side targets; 0 in the
// PT-exact gapless phase where the steady-state energy is real.
inline double thermo_im_reference(double delta, double g) {
  const thermo::ThermoParams tp = thermo::ThermoParams::make(delta, g);
  switch (tp.regime) {
    case thermo::Regime::gapless:
      if (std::isnan(tp.lambda0)) return 0.0;
      return thermo::im_energy_gapless(delta, g).im_total;
    case thermo::Regime::gapped:
      return thermo::im_energy_gapped(delta, g).im_total;
    case thermo::Regime::string:
      return thermo::string_im_energy(delta, g);
  }
  return 0.0;
}

inline spectral::EigenKind resolve_eigen_kind(const RunConfig& cfg,
                                              double delta) {
  if (cfg.eigen_target == "steady") return spectral::EigenKind::max_imag;
  if (cfg.eigen_target == "ground") return spectral::EigenKind::min_real;
  return delta >= 0 ? spectral::EigenKind::max_imag
                    : spectral::EigenKind::min_real;
}

// Executes the configured experiment, writes tables plus manifest.json into
// the output directory, and returns the process exit code (0 clean, 1 if any
// grid point failed).
inline int run_experiment(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const auto t_start = std::chrono::steady_clock::now();
  const std::string started = detail::utc_now();

  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec)
    throw ConfigError("output.directory: cannot create '" + cfg.out_dir +
                      "': " + ec.message());
  const fs::path dir(cfg.out_dir);

  std::vector<detail::GridPoint> points;
  for (double d : cfg.delta_values)
    for (double g : cfg.g_values)
      for (int n : cfg.n_values)
        points.push_back({d, g, n, effective_magnons(cfg, n)});

  auto compute = [&](const detail::GridPoint& pt) {
    detail::PointResult res;
    ModelParams params;
    params.n_sites = pt.n;
    params.delta = pt.delta;
    params.g = pt.g;
    params.delta_prime = cfg.delta_prime;
    json base = {{"delta", pt.delta}, {"g", pt.g}, {"n", pt.n}, {"m", pt.m}};

    switch (cfg.experiment) {
      case Experiment::phase_diagram: {
        const auto basis = model::build_sector_basis(pt.n, pt.m);
        const auto h = model::assemble_dense(params, basis, cfg.dense_cap);
        const auto recs = spectral::full_spectrum(h, false);
        std::vector<model::cplx> eigs;
        eigs.reserve(recs.size());
        for (const auto& r : recs) eigs.push_back(r.eigenvalue);
        const auto pc = spectral::classify_pt(eigs, cfg.pt_tol);
        json row = base;
        row["phase"] =
            pc.phase == spectral::PtClassification::Phase::exact ? "exact"
                                                                 : "broken";
        row["max_abs_imag"] = pc.max_abs_imag;
        res.rows.push_back(std::move(row));
        break;
      }
      case Experiment::spectrum: {
        const auto basis = model::build_sector_basis(pt.n, pt.m);
        const auto h = model::assemble_dense(params, basis, cfg.dense_cap);
        const auto recs = spectral::full_spectrum(h, true, &basis);
        for (std::size_t i = 0; i < recs.size(); ++i) {
          json row = base;
          row["idx"] = i;
          row["re"] = recs[i].eigenvalue.real();
          row["im"] = recs[i].eigenvalue.imag();
          row["participation"] = recs[i].participation.value_or(0.0);
          row["residual"] = recs[i].residual;
          res.rows.push_back(std::move(row));
        }
        break;
      }
      case Experiment::bethe_solve: {
        const auto which = resolve_eigen_kind(cfg, pt.delta) ==
                                   spectral::EigenKind::max_imag
                               ? bethe::StateTarget::steady
                               : bethe::StateTarget::ground;
        const auto state =
            bethe::adiabatic_solve(params, pt.m, cfg.path, which, cfg.tol_bethe);
        json row = base;
        row["residual"] = state.residual;
        row["energy_re"] = state.energy.real();
        row["energy_im"] = state.energy.imag();
        res.rows.push_back(std::move(row));
        res.point_json = bethe_state_json(state);
        break;
      }
      case Experiment::dynamics: {
        const auto basis = model::build_sector_basis(pt.n, pt.m);
        const auto psi0 =
            cfg.initial_state == "domain_wall"
                ? dynamics::domain_wall_state(basis)
                : dynamics::hermitian_ground_state(pt.delta, pt.n, basis,
                                                   cfg.tol_eigen);
        dynamics::EvolutionConfig ec2;
        ec2.dt = cfg.dt;
        ec2.t_max = cfg.t_max > 0 ? cfg.t_max : 100.0 / pt.g;
        ec2.record_every = cfg.record_every;
        auto ts = dynamics::evolve(params, psi0, ec2);
        json row = base;
        row["t_final"] = ts.times.back();
        row["im_estimate_final"] = ts.values.at("im_estimate").back();
        res.rows.push_back(std::move(row));
        res.series = std::move(ts);
        res.series_sites = pt.n;
        break;
      }
      case Experiment::compare: {
        const auto basis = model::build_sector_basis(pt.n, pt.m);
        spectral::EigenTarget target;
        target.kind = resolve_eigen_kind(cfg, pt.delta);
        target.tolerance = cfg.tol_eigen;
        target.max_iterations = cfg.max_applies;
        const auto rec = spectral::targeted_eigenpair(params, basis, target);
        const double im_ed = rec.eigenvalue.imag();
        const double im_ba = thermo_im_reference(pt.delta, pt.g);
        json row = base;
        row["im_ed"] = im_ed;
        row["im_ba"] = im_ba;
        row["abs_diff"] = std::abs(im_ed - im_ba);
        res.rows.push_back(std::move(row));
        break;
      }
      case Experiment::scaling: {
        const auto basis = model::build_sector_basis(pt.n, pt.m);
        const auto h = model::assemble_dense(params, basis, cfg.dense_cap);
        const auto recs = spectral::full_spectrum(h, true, &basis);
        // Positive-Im states minus the boundary bound state, identified as
        // the most localized one (smallest participation entropy).
        std::vector<const spectral::SpectrumRecord*> pos;
        for (const auto& r : recs)
          if (r.eigenvalue.imag() > cfg.pt_tol) pos.push_back(&r);
        if (pos.empty())
          throw std::runtime_error("scaling: no positive-Im states at this point");
        if (pos.size() > 1) {
          auto bound = std::min_element(
              pos.begin(), pos.end(), [](const auto* a, const auto* b) {
                return a->participation.value_or(0.0) <
                       b->participation.value_or(0.0);
              });
          pos.erase(bound);
        }
        double mean = 0.0;
        for (const auto* r : pos) mean += r->eigenvalue.imag();
        mean /= double(pos.size());
        json row = base;
        row["mean_im"] = mean;
        row["n_states"] = pos.size();
        res.rows.push_back(std::move(row));
        res.scalar = mean;
        break;
      }
    }
    res.ok = true;
    return res;
  };

  std::vector<detail::PointResult> results(points.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= points.size()) return;
      try {
        results[i] = compute(points[i]);
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].message = e.what();
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(cfg.threads, int(points.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Serial collection in point order keeps output deterministic.
  static const std::map<Experiment, std::vector<std::string>> table_columns = {
      {Experiment::phase_diagram,
       {"delta", "g", "n", "m", "phase", "max_abs_imag"}},
      {Experiment::spectrum,
       {"delta", "g", "n", "m", "idx", "re", "im", "participation", "residual"}},
      {Experiment::bethe_solve,
       {"delta", "g", "n", "m", "residual", "energy_re", "energy_im"}},
      {Experiment::dynamics,
       {"delta", "g", "n", "m", "t_final", "im_estimate_final"}},
      {Experiment::compare,
       {"delta", "g", "n", "m", "im_ed", "im_ba", "abs_diff"}},
      {Experiment::scaling,
       {"delta", "g", "n", "m", "mean_im", "n_states"}}};

  json manifest;
  manifest["schema_version"] = 1;
  manifest["experiment"] = experiment_name(cfg.experiment);
  manifest["config"] = config_json(cfg);
  manifest["columns"] = table_columns.at(cfg.experiment);
  manifest["started_utc"] = started;

  std::vector<json> all_rows;
  json manifest_points = json::array();
  int failures = 0;
  char stem[64];
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    auto& res = results[i];
    json entry = {{"index", i},     {"delta", pt.delta}, {"g", pt.g},
                  {"n", pt.n},      {"m", pt.m},
                  {"status", res.ok ? "ok" : "failed"}};
    if (!res.ok) {
      ++failures;
      entry["message"] = res.message;
    } else {
      json outputs = json::array();
      if (res.point_json) {
        std::snprintf(stem, sizeof stem, "bethe_point_%04zu.json", i);
        detail::write_text(dir / stem, res.point_json->dump(2) + "\n");
        outputs.push_back(stem);
      }
      if (res.series) {
        std::snprintf(stem, sizeof stem, "dynamics_point_%04zu", i);
        outputs.push_back(detail::write_timeseries_csv(dir, stem, *res.series,
                                                       res.series_sites));
      }
      entry["outputs"] = std::move(outputs);
      for (json& r : res.rows) all_rows.push_back(std::move(r));
    }
    manifest_points.push_back(std::move(entry));
  }
  manifest["points"] = std::move(manifest_points);

  const std::string table_file =
      detail::write_table(dir, experiment_name(cfg.experiment),
                          table_columns.at(cfg.experiment), all_rows, cfg.format);
  manifest["table"] = table_file;

  if (cfg.experiment == Experiment::scaling) {
    // Per-(delta, g) linear fit of the continuum mean against 1/n.
    json fits = json::array();
    for (double d : cfg.delta_values)
      for (double g : cfg.g_values) {
        std::vector<double> inv_n, means;
        for (std::size_t i = 0; i < points.size(); ++i)
          if (results[i].ok && points[i].delta == d && points[i].g == g) {
            inv_n.push_back(1.0 / points[i].n);
            means.push_back(results[i].scalar);
          }
        if (inv_n.size() >= 3) {
          const auto fit = numerics::fit_line(inv_n, means);
          fits.push_back({{"delta", d},
                          {"g", g},
                          {"intercept", fit.intercept},
                          {"slope", fit.slope},
                          {"r2", fit.r2},
                          {"n_points", inv_n.size()}});
        }
      }
    manifest["summary"] = {{"fits", std::move(fits)}};
  }

  manifest["failures"] = failures;
  manifest["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  return failures > 0 ? 1 : 0;
}

}  // namespace spinchain::cli
