#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinchain/cli.hpp"

namespace fs = std::filesystem;
namespace cl = spinchain::cli;
using nlohmann::json;
using Catch::Matchers::ContainsSubstring;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("spinchain_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

fs::path write_config(const TempDir& dir, const std::string& name,
                      const json& body) {
  const fs::path p = dir.path / name;
  std::ofstream f(p);
  f << body.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> split_line(const std::string& text, std::size_t row) {
  std::istringstream in(text);
  std::string line;
  for (std::size_t k = 0; k <= row; ++k) REQUIRE(std::getline(in, line));
  std::vector<std::string> cells;
  std::istringstream ls(line);
  std::string cell;
  while (std::getline(ls, cell, ',')) cells.push_back(cell);
  return cells;
}

json minimal_model(int n, double delta, double g) {
  return json{{"n", n}, {"delta", delta}, {"g", g}};
}

}  // namespace

TEST_CASE("minimal config applies documented defaults") {
  TempDir dir("defaults");
  const auto p = write_config(
      dir, "c.json",
      json{{"experiment", "spectrum"}, {"model", minimal_model(4, 0.5, 0.8)}});
  const auto cfg = cl::parse_config(p.string());
  CHECK(cfg.experiment == cl::Experiment::spectrum);
  CHECK(cfg.n_values == std::vector<int>{4});
  CHECK(cfg.delta_values == std::vector<double>{0.5});
  CHECK(cfg.g_values == std::vector<double>{0.8});
  CHECK(cfg.n_magnons == -1);
  CHECK(cl::effective_magnons(cfg, 4) == 2);
  CHECK(cfg.tol_eigen == 1e-8);
  CHECK(cfg.format == "csv");
  CHECK(cfg.threads == 1);
  CHECK(cfg.initial_state == "domain_wall");
  CHECK(cfg.path.g_initial == 1.5);
}

TEST_CASE("scaling defaults to the two-magnon sector") {
  TempDir dir("scalingm");
  const auto p = write_config(
      dir, "c.json",
      json{{"experiment", "scaling"}, {"model", minimal_model(20, 0.8, 0.8)}});
  const auto cfg = cl::parse_config(p.string());
  CHECK(cl::effective_magnons(cfg, 20) == 2);
}

TEST_CASE("unknown keys are rejected by name") {
  TempDir dir("unknown");
  auto model = minimal_model(4, 0.5, 0.8);
  model["foo"] = 1;
  const auto p = write_config(
      dir, "c.json", json{{"experiment", "spectrum"}, {"model", model}});
  CHECK_THROWS_WITH(cl::parse_config(p.string()), ContainsSubstring("foo"));

  const auto q = write_config(dir, "d.json",
                              json{{"experiment", "spectrum"},
                                   {"model", minimal_model(4, 0.5, 0.8)},
                                   {"extra", 1}});
  CHECK_THROWS_AS(cl::parse_config(q.string()), cl::ConfigError);
}

TEST_CASE("grids accept scalars, arrays, and ranges") {
  TempDir dir("grids");
  auto model = minimal_model(4, 0.5, 0.0);
  model["g"] = json{{"start", 0.7}, {"stop", 1.5}, {"step", 0.2}};
  model["delta"] = json::array({0.3, 0.8});
  const auto p = write_config(
      dir, "c.json", json{{"experiment", "spectrum"}, {"model", model}});
  const auto cfg = cl::parse_config(p.string());
  REQUIRE(cfg.g_values.size() == 5);
  CHECK(cfg.g_values.front() == Catch::Approx(0.7));
  CHECK(cfg.g_values.back() == Catch::Approx(1.5));
  CHECK(cfg.delta_values == std::vector<double>{0.3, 0.8});

  model["g"] = json{{"start", 1.0}, {"stop", 0.5}, {"step", 0.1}};
  const auto q = write_config(
      dir, "d.json", json{{"experiment", "spectrum"}, {"model", model}});
  CHECK_THROWS_WITH(cl::parse_config(q.string()), ContainsSubstring("model.g"));

  model["g"] = json{{"start", 0.5}, {"stop", 1.0}, {"step", -0.1}};
  const auto r = write_config(
      dir, "e.json", json{{"experiment", "spectrum"}, {"model", model}});
  CHECK_THROWS_WITH(cl::parse_config(r.string()),
                    ContainsSubstring("must be positive"));
}

TEST_CASE("dense sector guard fires before any computation") {
  TempDir dir("cap");
  const auto p = write_config(
      dir, "c.json",
      json{{"experiment", "spectrum"}, {"model", minimal_model(16, 0.8, 0.8)}});
  CHECK_THROWS_WITH(cl::parse_config(p.string()),
                    ContainsSubstring("dense_cap"));

  const auto q = write_config(dir, "d.json",
                              json{{"experiment", "spectrum"},
                                   {"model", minimal_model(16, 0.8, 0.8)},
                                   {"solver", {{"dense_cap", 13000}}}});
  CHECK_NOTHROW(cl::parse_config(q.string()));
}

TEST_CASE("subcommand and config experiment must agree") {
  TempDir dir("sub");
  const auto p = write_config(
      dir, "c.json",
      json{{"experiment", "spectrum"}, {"model", minimal_model(4, 0.5, 0.8)}});
  const std::string wrong = "compare";
  CHECK_THROWS_AS(cl::parse_config(p.string(), &wrong), cl::ConfigError);
  const std::string right = "spectrum";
  CHECK_NOTHROW(cl::parse_config(p.string(), &right));

  const auto q =
      write_config(dir, "d.json", json{{"model", minimal_model(4, 0.5, 0.8)}});
  CHECK_THROWS_AS(cl::parse_config(q.string()), cl::ConfigError);
  const auto cfg = cl::parse_config(q.string(), &right);
  CHECK(cfg.experiment == cl::Experiment::spectrum);
}

TEST_CASE("field validation names the offending entry") {
  TempDir dir("valid");
  auto bad_n = json{{"experiment", "spectrum"},
                    {"model", minimal_model(5, 0.5, 0.8)}};
  CHECK_THROWS_WITH(
      cl::parse_config(write_config(dir, "a.json", bad_n).string()),
      ContainsSubstring("model.n"));

  auto dyn = json{{"experiment", "dynamics"},
                  {"model", minimal_model(6, 0.5, 0.8)}};
  dyn["model"]["m"] = 2;
  CHECK_THROWS_WITH(
      cl::parse_config(write_config(dir, "b.json", dyn).string()),
      ContainsSubstring("m = n/2"));

  auto dp = json{{"experiment", "compare"},
                 {"model", minimal_model(6, 0.5, 0.8)}};
  dp["model"]["delta_prime"] = 0.1;
  CHECK_THROWS_WITH(
      cl::parse_config(write_config(dir, "c.json", dp).string()),
      ContainsSubstring("delta_prime"));

  auto fmt = json{{"experiment", "spectrum"},
                  {"model", minimal_model(4, 0.5, 0.8)},
                  {"output", {{"format", "xml"}}}};
  CHECK_THROWS_WITH(
      cl::parse_config(write_config(dir, "d.json", fmt).string()),
      ContainsSubstring("output.format"));

  auto tgt = json{{"experiment", "compare"},
                  {"model", minimal_model(4, 0.5, 0.8)},
                  {"solver", {{"eigen_target", "top"}}}};
  CHECK_THROWS_WITH(
      cl::parse_config(write_config(dir, "e.json", tgt).string()),
      ContainsSubstring("eigen_target"));
}

TEST_CASE("compare run writes a consistent table and manifest") {
  TempDir dir("cmprun");
  auto model = minimal_model(6, 0.8, 1.3);
  model["m"] = 3;
  const auto out = (dir.path / "out").string();
  const auto p = write_config(dir, "c.json",
                              json{{"experiment", "compare"},
                                   {"model", model},
                                   {"output", {{"directory", out}}}});
  const auto cfg = cl::parse_config(p.string());
  CHECK(cl::run_experiment(cfg) == 0);

  const std::string table = slurp(fs::path(out) / "compare.csv");
  const auto header = split_line(table, 0);
  CHECK(header == std::vector<std::string>{"delta", "g", "n", "m", "im_ed",
                                           "im_ba", "abs_diff"});
  const auto row = split_line(table, 1);
  REQUIRE(row.size() == 7);
  const double im_ed = std::stod(row[4]);
  const double im_ba = std::stod(row[5]);
  const double diff = std::stod(row[6]);
  CHECK(std::abs(std::abs(im_ed - im_ba) - diff) < 1e-12);

  const json manifest = json::parse(slurp(fs::path(out) / "manifest.json"));
  CHECK(manifest.at("experiment") == "compare");
  CHECK(manifest.at("failures") == 0);
  CHECK(manifest.at("table") == "compare.csv");
  CHECK(manifest.at("points").at(0).at("status") == "ok");
  CHECK(manifest.at("config").at("solver").at("tol_eigen") == 1e-8);
}

TEST_CASE("identical configs produce identical bytes") {
  TempDir dir("deter");
  auto model = minimal_model(6, 0.8, 0.0);
  model["m"] = 3;
  model["g"] = json::array({0.5, 1.2});
  auto base = json{{"experiment", "spectrum"},
                   {"model", model},
                   {"threads", 2}};
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const auto out = (dir.path / ("out" + std::to_string(run))).string();
    base["output"] = {{"directory", out}};
    const auto p = write_config(dir, "c" + std::to_string(run) + ".json", base);
    REQUIRE(cl::run_experiment(cl::parse_config(p.string())) == 0);
    const std::string body = slurp(fs::path(out) / "spectrum.csv");
    if (run == 0)
      first = body;
    else
      CHECK(body == first);
  }
  CHECK(first.find("\n") != std::string::npos);
}

TEST_CASE("json table format is honored") {
  TempDir dir("jsonfmt");
  auto model = minimal_model(4, 0.5, 0.8);
  model["m"] = 2;
  const auto out = (dir.path / "out").string();
  const auto p = write_config(
      dir, "c.json",
      json{{"experiment", "phase_diagram"},
           {"model", model},
           {"output", {{"directory", out}, {"format", "json"}}}});
  REQUIRE(cl::run_experiment(cl::parse_config(p.string())) == 0);
  const json rows = json::parse(slurp(fs::path(out) / "phase_diagram.json"));
  REQUIRE(rows.is_array());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].contains("phase"));
  CHECK(rows[0].at("n") == 4);
}

TEST_CASE("dynamics run emits one trajectory per grid point") {
  TempDir dir("dynrun");
  const auto out = (dir.path / "out").string();
  const auto p = write_config(
      dir, "c.json",
      json{{"experiment", "dynamics"},
           {"model", minimal_model(4, 0.5, 0.8)},
           {"dynamics", {{"t_max", 1.0}, {"record_every", 5}}},
           {"output", {{"directory", out}}}});
  REQUIRE(cl::run_experiment(cl::parse_config(p.string())) == 0);

  const std::string traj = slurp(fs::path(out) / "dynamics_point_0000.csv");
  const auto header = split_line(traj, 0);
  CHECK(header == std::vector<std::string>{"t", "sz_1", "sz_2", "sz_3", "sz_4",
                                           "im_estimate"});
  CHECK(split_line(traj, 1).at(0) == "0");

  const json manifest = json::parse(slurp(fs::path(out) / "manifest.json"));
  const auto& outputs = manifest.at("points").at(0).at("outputs");
  REQUIRE(outputs.size() == 1);
  CHECK(outputs.at(0) == "dynamics_point_0000.csv");

  const std::string table = slurp(fs::path(out) / "dynamics.csv");
  const auto row = split_line(table, 1);
  CHECK(std::stod(row.at(4)) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("bethe run writes the root payload") {
  TempDir dir("bethe");
  auto model = minimal_model(6, 0.8, 0.8);
  model["m"] = 3;
  const auto out = (dir.path / "out").string();
  const auto p = write_config(dir, "c.json",
                              json{{"experiment", "bethe_solve"},
                                   {"model", model},
                                   {"output", {{"directory", out}}}});
  REQUIRE(cl::run_experiment(cl::parse_config(p.string())) == 0);

  const json st = json::parse(slurp(fs::path(out) / "bethe_point_0000.json"));
  REQUIRE(st.size() == 5);
  REQUIRE(st.contains("params"));
  REQUIRE(st.contains("roots"));
  REQUIRE(st.contains("residual"));
  REQUIRE(st.contains("energy"));
  REQUIRE(st.contains("path"));
  CHECK(st.at("roots").size() == 3);
  CHECK(st.at("roots").at(0).size() == 2);
  CHECK(st.at("residual").get<double>() <= 1e-9);
  CHECK(st.at("energy").at(1).get<double>() > 0.0);
  const auto& last = st.at("path").back();
  CHECK(last.at(0).get<double>() == Catch::Approx(0.8).margin(1e-12));
  CHECK(last.at(1).get<double>() == Catch::Approx(0.8).margin(1e-12));
}

TEST_CASE("failed grid points surface in the exit code and manifest") {
  TempDir dir("fail");
  auto model = minimal_model(6, 0.98, 0.8);
  model["m"] = 3;
  const auto out = (dir.path / "out").string();
  const auto p = write_config(dir, "c.json",
                              json{{"experiment", "bethe_solve"},
                                   {"model", model},
                                   {"output", {{"directory", out}}}});
  CHECK(cl::run_experiment(cl::parse_config(p.string())) == 1);
  const json manifest = json::parse(slurp(fs::path(out) / "manifest.json"));
  CHECK(manifest.at("failures") == 1);
  CHECK(manifest.at("points").at(0).at("status") == "failed");
  CHECK(!manifest.at("points").at(0).at("message").get<std::string>().empty());
  CHECK(fs::exists(fs::path(out) / "bethe_solve.csv"));
}

TEST_CASE("phase classification flips across the critical coupling") {
  TempDir dir("phase");
  auto model = minimal_model(8, 0.0, 0.0);
  model["g"] = json::array({0.3, 2.0});
  const auto out = (dir.path / "out").string();
  const auto p = write_config(dir, "c.json",
                              json{{"experiment", "phase_diagram"},
                                   {"model", model},
                                   {"output", {{"directory", out}}}});
  REQUIRE(cl::run_experiment(cl::parse_config(p.string())) == 0);
  const std::string table = slurp(fs::path(out) / "phase_diagram.csv");
  CHECK(split_line(table, 1).at(4) == "exact");
  CHECK(split_line(table, 2).at(4) == "broken");
}

#ifdef SPINCHAIN_BIN
TEST_CASE("binary maps outcomes onto exit codes") {
  TempDir dir("binary");
  const auto out = (dir.path / "out").string();
  auto model = minimal_model(4, 0.5, 0.8);
  model["m"] = 2;
  const auto good = write_config(dir, "good.json",
                                 json{{"experiment", "spectrum"},
                                      {"model", model},
                                      {"output", {{"directory", out}}}});
  auto broken = json{{"experiment", "spectrum"},
                     {"model", model},
                     {"bogus", 1}};
  const auto bad = write_config(dir, "bad.json", broken);

  auto run = [&](const std::string& args) {
    const std::string cmd =
        std::string(SPINCHAIN_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
  };

  CHECK(run("spectrum --config " + good.string()) == 0);
  CHECK(run("spectrum --config " + bad.string()) == 2);
  CHECK(run("compare --config " + good.string()) == 2);
  CHECK(run("spectrum") == 2);
  CHECK(run("--help") == 0);
}
#endif
