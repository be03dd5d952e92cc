#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "fmk/experiment.hpp"
#include "fmk/report_json.hpp"

using namespace fmk;
using nlohmann::json;

namespace {

const char* kFbmConfig = R"({
  "kernel": {"name": "fbm", "hurst": 0.75},
  "ensemble": {"kind": "default", "seed": 17}
})";

RunOptions no_files() {
  RunOptions o;
  o.out_dir.clear();
  o.quiet = true;
  return o;
}

}  // namespace

TEST_CASE("selfint fbm converges to one half") {
  auto o = run_experiment("selfint", kFbmConfig, no_files());
  REQUIRE(o.error.empty());
  CHECK(o.exit_code == 0);
  json j = json::parse(o.report_json);
  CHECK(j["verdict"] == "Converged");
  CHECK(j["command"] == "selfint");
  CHECK(j["seed"] == 17);
  CHECK(j["value"].get<double>() == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(j["traces"].size() == 12);
  CHECK(o.trace_csv.rfind("system,n,sum\n", 0) == 0);
  CHECK(o.summary.find("selfint") != std::string::npos);
}

TEST_CASE("selfint verdict exit codes") {
  auto bwn = run_experiment("selfint", R"({"kernel":{"name":"brownian_wn"},"n_max":1024})",
                            no_files());
  CHECK(bwn.exit_code == 2);
  CHECK(json::parse(bwn.report_json)["verdict"] == "TagDependent");

  auto sing = run_experiment("selfint", R"({"kernel":{"name":"singular"},"n_max":16384})",
                             no_files());
  CHECK(sing.exit_code == 3);
  CHECK(json::parse(sing.report_json)["verdict"] == "Unbounded");
}

TEST_CASE("config errors exit 1 with a message") {
  auto opts = no_files();
  auto cases = {
      std::pair<const char*, const char*>{"selfint", R"({"kernel":{"name":"fbm"},"oops":1})"},
      {"selfint", R"({"kernel":{"name":"fbm","hurst":0.75,"extra":2}})"},
      {"selfint", R"({"kernel":{"name":"no_such"}})"},
      {"selfint", R"({"domain":{"lo":0,"hi":1}})"},
      {"selfint", "{not json"},
      {"selfint", ""},
      {"simulate", R"({"model":{"family":"fbm"},"mc":{"samples":100}})"},
      {"simulate", R"({"model":{"family":"weird"},"mc":{"samples":100,"seed":1}})"},
      {"tensor", R"({"tensor":{"psi":{"kind":"indicator"},"samples":100}})"},
      {"nonsense", "{}"},
  };
  for (const auto& [cmd, text] : cases) {
    auto o = run_experiment(cmd, text, opts);
    INFO(cmd << " " << text);
    CHECK(o.exit_code == 1);
    CHECK(!o.error.empty());
  }
}

TEST_CASE("seed and n_max overrides") {
  auto opts = no_files();
  opts.seed = 7;  // rescues a config with no mc.seed
  auto o = run_experiment(
      "simulate",
      R"({"model":{"family":"brownian_wn"},"mc":{"samples":200,"seed_missing_on_purpose":0}})",
      opts);
  CHECK(o.exit_code == 1);  // unknown key still rejected
  o = run_experiment("simulate", R"({"model":{"family":"brownian_wn"},"mc":{"samples":200}})",
                     opts);
  REQUIRE(o.error.empty());
  CHECK(json::parse(o.report_json)["seed"] == 7);

  opts = no_files();
  opts.n_max = 64;  // too coarse for fbm at tol 0.02
  auto coarse = run_experiment("selfint", kFbmConfig, opts);
  CHECK(coarse.exit_code == 2);
  CHECK(json::parse(coarse.report_json)["n_max"] == 64);
}

TEST_CASE("identical config and seed give byte-identical reports") {
  auto a = run_experiment("selfint", kFbmConfig, no_files());
  auto b = run_experiment("selfint", kFbmConfig, no_files());
  CHECK(strip_timestamp(a.report_json) == strip_timestamp(b.report_json));
  CHECK(a.trace_csv == b.trace_csv);

  const char* sim = R"({"model":{"family":"fbm"},"mc":{"samples":4000,"seed":11,"n":32}})";
  auto sa = run_experiment("simulate", sim, no_files());
  auto sb = run_experiment("simulate", sim, no_files());
  REQUIRE(sa.error.empty());
  CHECK(strip_timestamp(sa.report_json) == strip_timestamp(sb.report_json));
  CHECK(sa.diagnostics_csv == sb.diagnostics_csv);
  CHECK(strip_timestamp(sa.report_json).find("timestamp") == std::string::npos);
}

TEST_CASE("simulate diagnostics rows") {
  const char* cfg = R"({
    "model": {"family": "fbm", "hurst": 0.75},
    "mc": {"samples": 4000, "seed": 42, "levels": [16, 32], "tags": ["midpoint", "left"]}
  })";
  auto o = run_experiment("simulate", cfg, no_files());
  REQUIRE(o.error.empty());
  CHECK(o.exit_code == 0);
  json j = json::parse(o.report_json);
  REQUIRE(j["rows"].size() == 2);
  CHECK(j["rows"][0]["n"] == 16);
  CHECK(j["rows"][1]["n"] == 32);
  for (const auto& r : j["rows"]) {
    CHECK(r["mean"].get<double>() == doctest::Approx(0.5).epsilon(0.1));
    CHECK(r["var"].get<double>() == doctest::Approx(0.5).epsilon(0.2));
    CHECK(r["l2_gap"].get<double>() > 0.0);
    CHECK(r["se_mean"].get<double>() > 0.0);
  }
  // gap shrinks with refinement for fbm
  CHECK(j["rows"][1]["l2_gap"].get<double>() < j["rows"][0]["l2_gap"].get<double>());

  REQUIRE(o.diagnostics_csv.rfind("n,mean,se_mean,var,l2_gap\n", 0) == 0);
  int lines = 0;
  for (char c : o.diagnostics_csv)
    if (c == '\n') ++lines;
  CHECK(lines == 3);  // header + one row per level
}

TEST_CASE("tensor demo rows") {
  const char* cfg = R"({
    "tensor": {"same_measure": true, "psi": {"kind": "indicator", "closed": false},
               "n": 8, "samples": 4000, "seed": 3}
  })";
  auto o = run_experiment("tensor", cfg, no_files());
  REQUIRE(o.error.empty());
  CHECK(o.exit_code == 0);
  json j = json::parse(o.report_json);
  CHECK(j["diagonal_gap"].get<double>() == 1.0);
  REQUIRE(j["rows"].size() == 3);
  CHECK(j["rows"][0]["analytic"].get<double>() == 1.0);
  CHECK(j["rows"][1]["analytic"].get<double>() == 0.0);
  const auto& fub = j["rows"][2];
  CHECK(fub["psi"] == "indicator_open");
  // open indicator: both orders drop the diagonal cells differently
  CHECK(std::abs(fub["order_a"].get<double>() - fub["order_b"].get<double>()) > 0.5);
}

TEST_CASE("catalog lists six kernel families") {
  auto o = run_experiment("catalog", "", no_files());
  CHECK(o.exit_code == 0);
  json j = json::parse(o.report_json);
  CHECK(j["kernels"].size() == 6);
  bool has_fbm = false;
  for (const auto& k : j["kernels"])
    if (k["name"] == "fbm") has_fbm = true;
  CHECK(has_fbm);
}

TEST_CASE("writes report files into the out dir") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "fmk_test_out";
  fs::remove_all(dir);
  RunOptions opts;
  opts.out_dir = dir.string();
  opts.quiet = true;
  auto o = run_experiment("selfint", R"({"kernel":{"name":"brownian_wn"},"n_max":256})", opts);
  REQUIRE(o.error.empty());
  REQUIRE(o.written_files.size() == 2);
  CHECK(fs::exists(dir / "selfint_report.json"));
  CHECK(fs::exists(dir / "selfint_traces.csv"));
  std::ifstream in(dir / "selfint_report.json", std::ios::binary);
  std::string disk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(disk == o.report_json);

  // custom file names via the out section
  auto o2 = run_experiment(
      "selfint", R"({"kernel":{"name":"brownian_wn"},"n_max":256,"out":{"report":"r.json","traces":"t.csv"}})",
      opts);
  REQUIRE(o2.error.empty());
  CHECK(fs::exists(dir / "r.json"));
  CHECK(fs::exists(dir / "t.csv"));
  fs::remove_all(dir);
}

TEST_CASE("strip_timestamp and csv helpers") {
  std::string text = "{\n  \"a\": 1,\n  \"timestamp\": \"2024-01-01T00:00:00Z\",\n  \"b\": 2\n}\n";
  std::string stripped = strip_timestamp(text);
  CHECK(stripped.find("timestamp") == std::string::npos);
  CHECK(stripped.find("\"a\": 1") != std::string::npos);
  CHECK(stripped.find("\"b\": 2") != std::string::npos);

  std::vector<DiagnosticsRow> rows = {{8, 0.5, 0.01, 0.25, 0.125}};
  std::string csv = diagnostics_to_csv(rows);
  CHECK(csv == "n,mean,se_mean,var,l2_gap\n8,0.5,0.01,0.25,0.125\n");

  CHECK(!iso_timestamp().empty());
  CHECK(iso_timestamp().size() == 20);  // YYYY-MM-DDTHH:MM:SSZ
}

TEST_CASE("custom ensembles and quasi command") {
  const char* cfg = R"({
    "kernel": {"name": "brownian_wn"},
    "ensemble": {"kind": "custom", "seed": 4,
                 "systems": [{"scheme": "uniform", "tags": "left"},
                             {"scheme": "uniform", "tags": "midpoint"}]},
    "n_max": 512
  })";
  auto o = run_experiment("selfint", cfg, no_files());
  REQUIRE(o.error.empty());
  json j = json::parse(o.report_json);
  CHECK(j["traces"].size() == 2);
  CHECK(o.exit_code == 2);  // left 0 vs midpoint 1/2 stays split

  const char* qcfg = R"({"kernel": {"name": "fbm", "hurst": 0.75}, "n_max": 512})";
  auto q = run_experiment("quasi", qcfg, no_files());
  REQUIRE(q.error.empty());
  CHECK(q.exit_code == 0);
  json qj = json::parse(q.report_json);
  CHECK(qj["command"] == "quasi");
  CHECK(qj["value"].get<double>() == doctest::Approx(0.16523784436297837).epsilon(0.2));
}
