#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "topo/cli.hpp"

using nlohmann::json;

namespace {
struct Run {
  int code;
  std::string out, err;
  json report() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = topo::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / ("topoinv_test_" + name);
  std::ofstream(path) << content;
  return path.string();
}
}  // namespace

TEST_CASE("chern report") {
  Run r = run({"chern", "--model", "hopf-two-band", "--grid", "20"});
  CHECK(r.code == 0);
  json j = r.report();
  CHECK(j["report_version"] == 1);
  CHECK(j["subcommand"] == "chern");
  CHECK(j["result"]["c1"] == 1);
  CHECK(j["grid"]["sizes"] == json{20, 20});
  CHECK(j["model"]["name"] == "hopf-two-band");
  CHECK(j.contains("wall_time_s"));
  CHECK(run({"chern", "--model", "hopf-two-band", "--grid", "8", "--m", "-1"}).report()["result"]["c1"] == -1);
}

TEST_CASE("z2 and its checks") {
  Run r = run({"z2", "--model", "kane-mele", "--grid", "24", "--lv", "0.1"});
  CHECK(r.code == 0);
  json j = r.report();
  CHECK(j["result"]["nu"] == -1);
  for (const auto& c : j["checks"]) CHECK(c["pass"] == true);
  CHECK(run({"z2", "--model", "kane-mele", "--grid", "24", "--lv", "0.5"}).report()["result"]["nu"] == 1);
}

TEST_CASE("kgroup output") {
  Run t = run({"kgroup", "--kq", "-1", "--space", "torus", "--dim", "3", "--out", "text"});
  CHECK(t.code == 0);
  CHECK(t.out == "KQ^{-1}(T^3) = 3Z + Z2\n");
  json j = run({"kgroup", "--kq", "0", "--space", "torus", "--dim", "2", "--reduced"}).report();
  CHECK(j["result"]["value"] == "Z2");
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"chern", "--model", "nope"}).code == 2);
  CHECK(run({"chern"}).code == 2);
  CHECK(run({"chern", "--model", "kane-mele", "--bogus", "1"}).code == 2);
  CHECK(run({"chern", "--model", "hopf-two-band", "--grid", "7"}).code == 2);
  Run gap = run({"chern", "--model", "bhz", "--m", "0"});
  CHECK(gap.code == 3);
  CHECK(gap.report()["error"]["kind"] == "GapClosed");
  CHECK(gap.report()["error"]["class"] == "numerical");
  CHECK(run({"z2", "--model", "hopf-two-band"}).report()["error"]["kind"] == "NoTimeReversal");
  CHECK(!run({"chern", "--model", "nope"}).err.empty());
}

TEST_CASE("config file, flags win") {
  std::string cfg = temp_file("cfg.json", R"({"model": "hopf-two-band", "grid": 8, "params": {"m": -1}})");
  json a = run({"chern", "--config", cfg}).report();
  CHECK(a["result"]["c1"] == -1);
  CHECK(a["grid"]["sizes"] == json{8, 8});
  json b = run({"chern", "--config", cfg, "--grid", "12", "--m", "1"}).report();
  CHECK(b["result"]["c1"] == 1);
  CHECK(b["grid"]["sizes"] == json{12, 12});
  CHECK(run({"chern", "--config", temp_file("bad.json", "{not json")}).code == 2);
}

TEST_CASE("model files") {
  std::string path = temp_file("model.json", R"({"dim": 1, "bands": 1, "occupied": 1, "terms": [{"R": [0], "matrix": [[[-1, 0]]]}]})");
  Run r = run({"chern", "--model-file", path});
  CHECK(r.code == 2);  // one-dimensional model has no Chern plane
  std::string bad = temp_file("bad_model.json", R"({"dim": 2, "bands": 2, "occupied": 1, "terms": [{"R": [0], "matrix": [[[1,0],[0,0]],[[0,0],[-1,0]]]}]})");
  Run b = run({"chern", "--model-file", bad});
  CHECK(b.code == 2);
  CHECK(b.report()["error"]["kind"] == "SchemaError");
  CHECK(b.report()["error"]["data"]["path"] == "/terms/0/R");
}

TEST_CASE("sweeps collect per-point errors") {
  Run r = run({"chern", "--model", "bhz", "--grid", "12", "--sweep", "m=-1:1:3"});
  json j = r.report();
  REQUIRE(j["points"].size() == 3);
  CHECK(j["points"][1]["error"]["kind"] == "GapClosed");
  CHECK(j["points"][0].contains("result"));
  CHECK(r.code == 3);
  Run csv = run({"z2", "--model", "kane-mele", "--grid", "24", "--sweep", "lv=0:0.6:3", "--out", "csv"});
  CHECK(csv.code == 0);
  CHECK(csv.out.rfind("lv,", 0) == 0);
  CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 4);
}

TEST_CASE("nc-index") {
  json j = run({"nc-index", "--nc-dim", "1", "--winding", "-2", "--cutoff", "16"}).report();
  CHECK(j["result"]["toeplitz"]["index"] == -2);
  CHECK(j["result"]["pairing"]["rounded"] == -2);
  Run t = run({"nc-index", "--theta", "2/5"});
  CHECK(t.code == 0);
  for (const auto& c : t.report()["checks"]) CHECK(c["pass"] == true);
}

TEST_CASE("reports are deterministic up to timing") {
  std::vector<std::string> args = {"audit", "--model", "kane-mele", "--grid", "12", "--lv", "0.5"};
  Run a = run(args), b = run(args);
  CHECK(a.out != "");
  CHECK(topo::cli::strip_timing(a.out) == topo::cli::strip_timing(b.out));
  CHECK(json::parse(topo::cli::strip_timing(a.out)).contains("wall_time_s") == false);
}
