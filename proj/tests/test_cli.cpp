#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dneig/report.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DNEIG_CLI_PATH + "\" " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string("\"") + DNEIG_CONFIG_DIR + "/" + name + "\""; }

fs::path scratch_dir() { return fs::temp_directory_path() / ("dneig_cli_test_" + std::to_string(::getpid())); }

// Removes the scratch directory at process exit.
const struct ScratchCleanup {
  ~ScratchCleanup() {
    std::error_code ec;
    fs::remove_all(scratch_dir(), ec);
  }
} cleanup;

fs::path scratch(const std::string& name) {
  fs::create_directories(scratch_dir());
  return scratch_dir() / name;
}

fs::path write_json(const std::string& name, const nlohmann::json& j) {
  const fs::path p = scratch(name);
  std::ofstream(p) << j.dump(2);
  return p;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream is(p);
  return nlohmann::json::parse(is);
}

}  // namespace

TEST_CASE("flat square run passes with margin near one") {
  const fs::path report = scratch("flat.json");
  const Run r = run_cli("run " + config("flat_square.json") + " --report \"" + report.string() + "\"");
  INFO(r.out);
  CHECK(r.status == 0);
  CHECK(r.out.find("PASS inequality") != std::string::npos);
  const auto j = read_json(report);
  const double margin = j.at("checks").at(0).at("quantities").at("margin").get<double>();
  CHECK(std::abs(margin - 1.0) <= 5e-3);
  CHECK(j.at("spec_version") == 1);
}

TEST_CASE("invalid warp is an input error") {
  const Run r = run_cli("run " + config("invalid_warp.json"));
  INFO(r.out);
  CHECK(r.status == 2);
  CHECK(r.out.find("metric") != std::string::npos);
}

TEST_CASE("helicoid curvature check fails") {
  const Run r = run_cli("curvature-check " + config("helicoid_curvature.json"));
  INFO(r.out);
  CHECK(r.status == 1);
  CHECK(r.out.find("FAIL curvature") != std::string::npos);
}

TEST_CASE("oracle lists the cylinder spectra") {
  const Run r = run_cli("oracle --max-index 3");
  INFO(r.out);
  CHECK(r.status == 0);
  CHECK(r.out.starts_with("1,2,2,4,5,5,5,5"));
  CHECK(r.out.find("\n0,1,1,1,2,2") != std::string::npos);
}

TEST_CASE("Neumann spectrum of the square") {
  nlohmann::json j = read_json(fs::path(DNEIG_CONFIG_DIR) / "flat_square.json");
  j["domain"]["resolution"] = 32;
  j.erase("output");
  const fs::path cfg = write_json("square32.json", j);
  const fs::path csv = scratch("spectrum.csv");
  const Run r = run_cli("spectrum \"" + cfg.string() + "\" --bc neumann --count 6 --csv \"" + csv.string() + "\"");
  INFO(r.out);
  REQUIRE(r.status == 0);
  std::ifstream is(csv);
  std::string header, row1, row2;
  std::getline(is, header);
  std::getline(is, row1);
  std::getline(is, row2);
  CHECK(header == "index,value,multiplicity,residual");
  std::istringstream fields(row2);
  std::string idx, value, mult;
  std::getline(fields, idx, ',');
  std::getline(fields, value, ',');
  std::getline(fields, mult, ',');
  CHECK(idx == "2");
  CHECK(std::abs(dneig::parse_double(value) - 1.0) <= 1e-2);
  CHECK(mult == "2");
}

TEST_CASE("verify without a metric block is an input error") {
  nlohmann::json j = read_json(fs::path(DNEIG_CONFIG_DIR) / "flat_square.json");
  j.erase("metric");
  const fs::path cfg = write_json("no_metric.json", j);
  const Run r = run_cli("verify \"" + cfg.string() + "\"");
  INFO(r.out);
  CHECK(r.status == 2);
  CHECK(r.out.find("'metric'") != std::string::npos);
}

TEST_CASE("unknown subcommands and flags are usage errors") {
  CHECK(run_cli("frobnicate").status == 2);
  CHECK(run_cli("oracle --max-index").status == 2);
}

TEST_CASE("two runs produce identical reports apart from metadata") {
  const fs::path a = scratch("a.json"), b = scratch("b.json");
  REQUIRE(run_cli("run " + config("flat_cylinder.json") + " --report \"" + a.string() + "\" --csv-dir \"" +
                  scratch("tables_a").string() + "\"")
              .status == 0);
  REQUIRE(run_cli("run " + config("flat_cylinder.json") + " --parallel --report \"" + b.string() + "\" --csv-dir \"" +
                  scratch("tables_b").string() + "\"")
              .status == 0);
  auto ja = read_json(a), jb = read_json(b);
  ja.erase("metadata");
  jb.erase("metadata");
  ja["config"]["output"].erase("csv_dir");
  jb["config"]["output"].erase("csv_dir");
  ja["config"]["output"].erase("report");
  jb["config"]["output"].erase("report");
  CHECK(ja == jb);
  for (const auto& entry : fs::directory_iterator(scratch("tables_a"))) {
    std::ifstream x(entry.path()), y(scratch("tables_b") / entry.path().filename());
    std::stringstream sx, sy;
    sx << x.rdbuf();
    sy << y.rdbuf();
    CHECK(sx.str() == sy.str());
  }
}
