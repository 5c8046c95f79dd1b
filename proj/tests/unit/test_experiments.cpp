#include "doctest.h"

#include "chamberwalk/experiments.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace chamberwalk;

namespace {

std::vector<std::vector<std::string>> csv_rows(const std::string& body) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ExperimentConfig small_limit(int rank, KernelKind kind) {
  ExperimentConfig c;
  c.rank = rank;
  c.kernel = kind;
  c.n_schedule = {64, 256};
  return c;
}

}  // namespace

TEST_CASE("config: json round trip and overrides") {
  ExperimentConfig c;
  c.rank = 2;
  c.kernel = KernelKind::plain;
  c.start = {1.5, 0.5};
  c.t_list = {0.25, 1.0};
  const Json j = to_json(c);
  CHECK(to_json(config_from_json(j)) == j);

  Json o = Json::object();
  apply_override(o, "rank=3");
  apply_override(o, "n_schedule=[10,20]");
  apply_override(o, "output_dir=runs/a");
  apply_override(o, "kernel=plain");
  const ExperimentConfig d = config_from_json(o);
  CHECK(d.rank == 3);
  CHECK(d.n_schedule == std::vector<int>{10, 20});
  CHECK(d.output_dir == "runs/a");
  CHECK(d.kernel == KernelKind::plain);
}

TEST_CASE("config: rejects bad input") {
  CHECK_THROWS_AS(config_from_json(Json{{"rnak", 2}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"kernel", "lazy"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"rank", "two"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"rank", 1}, {"start", {1.0, 2.0}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"t_list", Json::array()}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json{{"q", 1}}), ConfigError);
  Json o;
  CHECK_THROWS_AS(apply_override(o, "noequals"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json", {}), ConfigError);
}

TEST_CASE("output helpers") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2) == "2");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(csv_metadata(2, 3, KernelKind::doob, 40, 7) == "# rank: 2\n# q: 3\n# kernel: doob\n# window: 40\n# seed: 7\n");

  const Json env = environment_metadata();
  CHECK(env.contains("version"));
  CHECK(env["version"] == CHAMBERWALK_VERSION);
}

TEST_CASE("auto window: explicit, reach cap, diffusive cap") {
  ExperimentConfig c;
  c.window = 17;
  CHECK(auto_window(c, 1000, 0) == 17);
  c.window = 0;
  CHECK(auto_window(c, 10, 3) == 13);
  const int w = auto_window(c, 10000, 0);
  CHECK(w < 10000);
  // radius c^{1/2} sqrt(n) (sqrt(3) + 8) scaled to level
  CHECK(w == static_cast<int>(std::ceil(std::sqrt(2.0) * std::sqrt(0.5 * 10000) * (std::sqrt(3.0) + 8))) + 2);
}

TEST_CASE("limit check r=1: converges, files and columns") {
  const ExperimentReport rep = limit_check(small_limit(1, KernelKind::doob));
  REQUIRE(rep.runs.size() == 2);
  const double tv64 = rep.runs[0]["tv"], tv256 = rep.runs[1]["tv"];
  CHECK(tv256 < tv64);
  CHECK(tv256 < 0.1);
  // the offset of the discrete harmonic function carries most of the error
  CHECK(double(rep.runs[1]["tv_shifted"]) < 0.3 * tv256);

  REQUIRE(rep.files.size() == 2);
  CHECK(rep.files[0].first == "law_N64.csv");
  CHECK(rep.files[1].first == "law_N256.csv");
  const auto rows = csv_rows(rep.files[1].second);
  CHECK(rows.front() == std::vector<std::string>{"m1", "mass", "rescaled_density", "ibm_density", "rel_err"});
  double total = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stoi(rows[i][0]) % 2 == 0);  // parity: 256 steps from the origin
    total += std::stod(rows[i][1]);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.files[1].second.rfind("# rank: 1\n# q: 2\n# kernel: doob\n", 0) == 0);

  const Json j = rep.to_json();
  CHECK(j["experiment"] == "limit-check");
  CHECK(j["config"]["n_schedule"] == Json::array({64, 256}));
  CHECK(j["environment"].contains("version"));
  CHECK(j["extra"]["time_constant"] == 0.5);
}

TEST_CASE("limit check: (t, N) and (4t, N/4) give the same relative errors") {
  ExperimentConfig a = small_limit(1, KernelKind::doob);
  a.n_schedule = {256};
  a.t_list = {0.5};
  ExperimentConfig b = a;
  b.n_schedule = {64};
  b.t_list = {2.0};
  for (int rank : {1, 2}) {
    a.rank = b.rank = rank;
    const auto ra = csv_rows(limit_check(a).files[0].second);
    const auto rb = csv_rows(limit_check(b).files[0].second);
    REQUIRE(ra.size() == rb.size());
    const int col = rank + 3;
    for (std::size_t i = 1; i < ra.size(); ++i) {
      CHECK(ra[i][0] == rb[i][0]);
      if (ra[i][col] == "nan") {
        CHECK(rb[i][col] == "nan");
        continue;
      }
      CHECK(std::stod(ra[i][col]) == doctest::Approx(std::stod(rb[i][col])).epsilon(1e-9));
    }
  }
}

TEST_CASE("limit check: plain kernel is the negative control") {
  const ExperimentReport rep = limit_check(small_limit(1, KernelKind::plain));
  CHECK_FALSE(rep.passed());
  CHECK(double(rep.runs[1]["tv"]) > 0.3);
}

TEST_CASE("limit check: doob window overflow is an error") {
  ExperimentConfig c = small_limit(1, KernelKind::doob);
  c.window = 8;
  CHECK_THROWS_AS(limit_check(c), WindowTooSmallError);
}

TEST_CASE("bridge check r=1") {
  ExperimentConfig c;
  c.n_schedule = {64, 256, 1024};
  const ExperimentReport rep = bridge_check(c);
  CHECK(rep.passed());
  REQUIRE(rep.runs.size() == 3);
  const double e = rep.runs[2]["rate_exponent"];
  CHECK(e > 0.9);
  CHECK(e < 1.1);
  const auto rows = csv_rows(rep.files[0].second);
  CHECK(rows.front() == std::vector<std::string>{"N", "n", "m1", "ratio", "target", "rel_err"});
  CHECK(rows.size() == 1 + 3 * (1 + 1 + 2 + 2 + 3));  // reachable levels for n = 0..4

  c.n_schedule = {2, 8};
  CHECK_THROWS_AS(bridge_check(c), ConfigError);
}

TEST_CASE("tightness: trivial limits and monotonicity") {
  ExperimentConfig c;
  c.n_schedule = {400};
  c.n_paths = 2000;
  c.eta_list = {0.01, 1.0};
  c.alpha_list = {0.05, 2.0};
  c.tightness_eta = 0.01;
  c.tightness_alpha = 2.0;
  const ExperimentReport rep = tightness_check(c);
  CHECK(rep.passed());
  for (const auto& run : rep.runs) {
    if (run["eta"] == 1.0 && run["alpha"] == 0.05) CHECK(double(run["estimate"]) == 1.0);
    if (run["eta"] == 0.01 && run["alpha"] == 2.0) CHECK(double(run["estimate"]) == 0.0);
  }
  c.tightness_eta = 0.02;
  CHECK_THROWS_AS(tightness_check(c), ConfigError);
}

TEST_CASE("interior start r=1") {
  ExperimentConfig c;
  c.start = {2.0};
  c.deep_start = {20.0};
  c.n_schedule = {2500};
  c.t_list = {0.1, 1.0};
  c.n_paths = 20000;
  c.energy_samples = 400;
  c.energy_permutations = 99;
  const ExperimentReport rep = interior_start_check(c);
  for (const auto& ch : rep.checks) CHECK_MESSAGE(ch.passed, ch.name << " " << ch.value);
  CHECK(rep.checks.size() == 6);
  CHECK(rep.extra["warnings"].empty());

  c.start = {0.0};
  CHECK_THROWS_AS(interior_start_check(c), ConfigError);
  c.start = {};
  CHECK_THROWS_AS(interior_start_check(c), ConfigError);
}

TEST_CASE("determinism: byte-identical reports and CSVs") {
  const auto dir = std::filesystem::temp_directory_path() / "chamberwalk_det";
  std::filesystem::remove_all(dir);
  ExperimentConfig c = small_limit(2, KernelKind::doob);
  c.n_schedule = {16, 32};
  std::string first;
  for (int pass = 0; pass < 2; ++pass) {
    c.output_dir = (dir / std::to_string(pass)).string();
    write_report(limit_check(c));
    ExperimentConfig t;
    t.n_schedule = {500};
    t.n_paths = 500;
    t.output_dir = c.output_dir + "/tight";
    write_report(tightness_check(t));
  }
  for (const char* f : {"report.json", "law_N16.csv", "law_N32.csv", "tight/report.json", "tight/tightness.csv"}) {
    const std::string a = slurp(dir / "0" / f), b = slurp(dir / "1" / f);
    CHECK_MESSAGE(!a.empty(), f);
    // output_dir differs between the two passes
    if (std::string(f).ends_with("report.json")) continue;
    CHECK_MESSAGE(a == b, f);
  }
  auto strip = [](std::string s) {
    Json j = Json::parse(s);
    j["config"].erase("output_dir");
    return j.dump();
  };
  CHECK(strip(slurp(dir / "0/report.json")) == strip(slurp(dir / "1/report.json")));
  CHECK(strip(slurp(dir / "0/tight/report.json")) == strip(slurp(dir / "1/tight/report.json")));
  std::filesystem::remove_all(dir);
}
