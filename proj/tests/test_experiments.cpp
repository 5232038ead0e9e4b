#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "elliprmt/error.hpp"
#include "elliprmt/experiments.hpp"

using namespace elliprmt;
using nlohmann::json;

namespace {

ExperimentConfig small_spike_dist() {
  return ExperimentConfig::from_json(json::parse(R"({
    "kind": "spike-dist", "p": 20, "n": 40, "reps": 60, "seed": 5,
    "radius": [{"nu": "0"}, {"nu": "p"}],
    "population": {"spikes": [8], "bulk": {"kind": "uniform"}},
    "hist_bins": 12
  })"));
}

double column_sum(const ExperimentResult& r, const std::string& name) {
  const auto it = std::find(r.columns.begin(), r.columns.end(), name);
  REQUIRE(it != r.columns.end());
  const auto k = static_cast<std::size_t>(it - r.columns.begin());
  double s = 0.0;
  for (const auto& row : r.records) s += row[k];
  return s;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("elliprmt_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("nu rules") {
  CHECK(NuRule::parse("0").evaluate(100) == 0.0);
  CHECK(NuRule::parse("sqrt(p)").evaluate(100) == doctest::Approx(10.0));
  CHECK(NuRule::parse("p").evaluate(100) == 100.0);
  CHECK(NuRule::parse("p^2").evaluate(100) == 10000.0);
  CHECK(NuRule::parse("2p").evaluate(100) == 200.0);
  CHECK(NuRule::parse("37.5").evaluate(100) == 37.5);
  for (const char* s : {"0", "sqrt(p)", "p", "p^2", "2p"}) CHECK(NuRule::parse(s).name() == s);
  CHECK_THROWS_AS(NuRule::parse("p^3"), ConfigError);
  CHECK_THROWS_AS(NuRule::parse("-1"), ConfigError);
}

TEST_CASE("experiment kind names") {
  for (ExperimentKind k : {ExperimentKind::spike_dist, ExperimentKind::eigvec_overlap, ExperimentKind::bilinear_as,
                           ExperimentKind::bilinear_clt, ExperimentKind::vesd, ExperimentKind::quadform_oracle,
                           ExperimentKind::goe_entries}) {
    CHECK(experiment_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(experiment_kind_from_string("spike"), ConfigError);
}

TEST_CASE("config rejects unknown keys") {
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"kind":"spike-dist","repz":10})")), ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json(json::parse(R"({"kind":"spike-dist","population":{"spike":[8]}})")),
      ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json(json::parse(R"({"kind":"spike-dist","population":{"bulk":{"kind":"uniform","vals":[1]}}})")),
      ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"kind":"spike-dist","radius":{"nu":"p","k":1}})")),
                  ConfigError);
  // Threshold names are checked per kind.
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"kind":"spike-dist","thresholds":{"cov_z":3}})")),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"p":10})")), ConfigError);
  try {
    ExperimentConfig::from_json(json::parse(R"({"kind":"vesd","quad_nn":3})"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("quad_nn") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"kind":"spike-dist","reps":0})")).validate(),
                  ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json(json::parse(R"({"kind":"spike-dist","thresholds":{"var_ratio":[1.2,0.8]}})")),
      ConfigError);
  auto cfg = small_spike_dist();
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config round trip") {
  const ExperimentConfig a = small_spike_dist();
  const ExperimentConfig b = ExperimentConfig::from_json(a.to_json());
  CHECK(a.to_json() == b.to_json());
  CHECK(b.radius.size() == 2);
  CHECK(b.population.spikes == std::vector<double>{8.0});
}

TEST_CASE("spike-dist records, histograms and checksum") {
  const ExperimentConfig cfg = small_spike_dist();
  const ExperimentResult r = run_experiment(cfg);
  CHECK(r.records.size() == 2 * static_cast<std::size_t>(cfg.reps));
  CHECK(r.columns.front() == "case");
  CHECK(r.summary["records"] == 2 * cfg.reps);
  CHECK(r.summary["records_checksum"] == fnv1a_hex(records_csv(r)));
  REQUIRE(r.histograms.size() == 2);
  for (const Histogram& h : r.histograms) {
    CHECK(h.bins.size() == 12);
    long total = 0;
    for (const HistogramBin& b : h.bins) {
      total += b.count;
      CHECK(b.right > b.left);
    }
    CHECK(total == cfg.reps - r.failures / 2);
  }
  CHECK(column_sum(r, "failed") == 0.0);
  CHECK(r.summary["cases"].size() == 2);
}

TEST_CASE("same seed gives byte-identical summaries for any job count") {
  ExperimentConfig cfg = small_spike_dist();
  const ExperimentResult a = run_experiment(cfg, {1});
  const ExperimentResult b = run_experiment(cfg, {8});
  CHECK(a.summary.dump(2) == b.summary.dump(2));
  CHECK(records_csv(a) == records_csv(b));
  cfg.seed = 6;
  const ExperimentResult c = run_experiment(cfg, {1});
  CHECK(records_csv(a) != records_csv(c));
}

TEST_CASE("quadform oracle at small scale") {
  const ExperimentConfig cfg = ExperimentConfig::from_json(json::parse(R"({
    "kind": "quadform-oracle", "reps": 40, "batch": 250, "pairs": 2, "quad_p": 4, "seed": 3,
    "thresholds": {"z": 5}
  })"));
  const ExperimentResult r = run_experiment(cfg, {2});
  CHECK(r.records.size() == 40);
  CHECK(r.failures == 0);
  CHECK(r.checks_pass());
}

TEST_CASE("thresholds decide pass") {
  json j = json::parse(R"({
    "kind": "quadform-oracle", "reps": 20, "batch": 100, "pairs": 1, "quad_p": 3, "seed": 4,
    "thresholds": {"z": 1e-9}
  })");
  CHECK_FALSE(run_experiment(ExperimentConfig::from_json(j)).checks_pass());
  j["thresholds"]["z"] = 1e9;
  CHECK(run_experiment(ExperimentConfig::from_json(j)).checks_pass());
}

TEST_CASE("real z near the support is rejected") {
  const ExperimentConfig cfg = ExperimentConfig::from_json(json::parse(R"({
    "kind": "bilinear-as", "p": 20, "n": 40, "reps": 2,
    "population": {"bulk": {"kind": "constant", "value": 1}},
    "z_points": [1.0]
  })"));
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("direction specs") {
  PopulationSpec ps;
  ps.p = 6;
  ps.spikes = {8.0, 5.0};
  ps.bulk.kind = BulkRule::Kind::constant;
  const Population pop = build_population(ps);
  CHECK(direction_from_spec("e3", pop, 1)(2) == 1.0);
  CHECK(direction_from_spec("uniform", pop, 1).sum() == doctest::Approx(std::sqrt(6.0)));
  const Eigen::VectorXd s2 = direction_from_spec("spike2", pop, 1);
  CHECK((pop.sigma * s2 - 5.0 * s2).norm() < 1e-10);
  const Eigen::VectorXd r1 = direction_from_spec("random1", pop, 1);
  const Eigen::VectorXd r2 = direction_from_spec("random2", pop, 1);
  CHECK(r1.norm() == doctest::Approx(1.0));
  CHECK(std::abs(r1.dot(r2)) < 1e-12);
  CHECK(direction_from_spec("random1", pop, 1) == r1);
  CHECK_THROWS_AS(direction_from_spec("e7", pop, 1), ConfigError);
  CHECK_THROWS_AS(direction_from_spec("spike3", pop, 1), ConfigError);
  CHECK_THROWS_AS(direction_from_spec("north", pop, 1), ConfigError);
}

TEST_CASE("FNV-1a") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("KS distance against the standard normal") {
  // Midpoint quantiles sit within 1/(2n) of the CDF.
  std::vector<double> q;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    const double u = (i + 0.5) / n;
    // Bisection on the normal CDF.
    double lo = -10, hi = 10;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (0.5 * std::erfc(-mid / std::sqrt(2.0)) < u ? lo : hi) = mid;
    }
    q.push_back(0.5 * (lo + hi));
  }
  CHECK(ks_standard_normal(q) == doctest::Approx(0.5 / n).epsilon(1e-6));
  for (double& x : q) x += 1.0;
  CHECK(ks_standard_normal(q) > 0.3);
}

TEST_CASE("write_experiment output files") {
  ExperimentConfig cfg = small_spike_dist();
  cfg.radius.resize(1);
  const ExperimentResult r = run_experiment(cfg);
  const auto dir = scratch_dir("single");
  write_experiment(r, dir);
  for (const char* f : {"records.csv", "summary.json", "theory.json", "hist.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  std::ifstream in(dir / "summary.json");
  const json s = json::parse(in);
  CHECK(s == r.summary);
  std::ifstream rec(dir / "records.csv");
  std::stringstream text;
  text << rec.rdbuf();
  CHECK(fnv1a_hex(text.str()) == s["records_checksum"]);

  const auto dir2 = scratch_dir("multi");
  write_experiment(run_experiment(small_spike_dist()), dir2);
  int hist_files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir2)) {
    if (e.path().filename().string().rfind("hist_", 0) == 0) ++hist_files;
  }
  CHECK(hist_files == 2);
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}
