#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qrev/cli.hpp"

using namespace qrev;
using json = nlohmann::json;

namespace {

std::string schema_error_path(const std::string& text) {
  try {
    cli::parse_spec(text);
  } catch (const cli::SchemaError& e) {
    return e.path();
  }
  return "<none>";
}

cli::RunResult run_cmd(const std::string& text, const std::string& cmd, std::optional<std::string> out = {}) {
  return cli::run(cli::parse_spec(text), cli::RunOptions{cmd, std::move(out), std::nullopt, std::nullopt});
}

const std::string kMm1 = R"({"model":{"kind":"mm1","lambda":1,"mu":2},"truncation":{"bound":60}})";

std::string spec_dir() { return QREV_SPEC_DIR; }

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("parse minimal spec") {
  auto s = cli::parse_spec(kMm1);
  CHECK(s.kind == "mm1");
  CHECK(*s.truncation.bound == 60);
  CHECK(s.solver.method == "auto");
  CHECK(s.sim.events == 100000);
}

TEST_CASE("schema errors carry a path") {
  CHECK(schema_error_path(R"({"model":{"kind":"mm1","lambda":1,"mu":-2},"truncation":{"bound":60}})") == "model.mu");
  CHECK(schema_error_path(R"({"model":{"kind":"mm1","lambda":1},"truncation":{"bound":60}})") == "model.mu");
  CHECK(schema_error_path(R"({"model":{"kind":"mm1","lambda":1,"mu":2}})") == "truncation.bound");
  CHECK(schema_error_path(R"({"model":{"kind":"mm1","lambda":1,"mu":2,"x":1},"truncation":{"bound":6}})") == "model.x");
  CHECK(schema_error_path(R"({"model":{"kind":"mm1","lambda":1,"mu":2},"truncation":{"bound":6},"checks":["nope"]})") ==
        "checks[0]");
  CHECK(schema_error_path("{not json") == "$");
  CHECK(schema_error_path(R"({"model":{"kind":"explicit","states":[0,1],"rates":[[0,5,1.0]]}})") == "model.rates[0][1]");
  try {
    cli::parse_spec(R"({"model":{"kind":"mg1"}})");
    FAIL("expected a schema error");
  } catch (const cli::SchemaError& e) {
    CHECK(e.path() == "model.kind");
    for (const auto& k : cli::model_kinds()) CHECK(e.reason().find(k) != std::string::npos);
  }
}

TEST_CASE("example specs round-trip") {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(spec_dir())) {
    const auto spec = cli::parse_spec(read_file(entry.path().string()));
    CHECK(cli::parse_spec(cli::print_spec(spec)) == spec);
    CHECK(cli::spec_hash(cli::parse_spec(cli::print_spec(spec))) == cli::spec_hash(spec));
    ++n;
  }
  CHECK(n >= 10);
}

TEST_CASE("check command") {
  auto ok = run_cmd(R"({"model":{"kind":"mm1","lambda":1,"mu":2},"truncation":{"bound":60},
                        "checks":["reversible","quasi","gamma"]})",
                    "check");
  CHECK(ok.exit_code == cli::kOk);
  for (const auto& v : ok.report["verdicts"]) {
    CHECK(v["pass"].get<bool>());
    CHECK(v.contains("residual"));
    CHECK(v.contains("tol"));
  }
  CHECK(ok.report["schema_version"] == cli::kSchemaVersion);
  CHECK(ok.report["spec_hash"].get<std::string>().size() == 16);

  auto bad = run_cmd(R"({"model":{"kind":"batch_service","lambda":1,"mu":2,"batch_dist":[0.5,0.5],"counting":"all"},
                         "truncation":{"bound":60},"checks":["quasi"]})",
                     "check");
  CHECK(bad.exit_code == cli::kCheckFailed);

  auto na = run_cmd(R"({"model":{"kind":"mm1","lambda":1,"mu":2},"truncation":{"bound":10},"checks":["product_form"]})",
                    "check");
  CHECK(na.exit_code == cli::kInputError);
}

TEST_CASE("network command") {
  auto r = run_cmd(read_file(spec_dir() + "/jackson_tandem.json"), "network");
  CHECK(r.exit_code == cli::kOk);
  CHECK(r.report["product_form"]["tv_distance"].get<double>() < 1e-6);

  auto wrong = run_cmd(kMm1, "network");
  CHECK(wrong.exit_code == cli::kInputError);
  CHECK(wrong.report["error"]["path"] == "model.kind");
}

TEST_CASE("solve, reverse and simulate write sidecars") {
  const auto dir = (std::filesystem::temp_directory_path() / "qrev_cli_test").string();
  std::filesystem::remove_all(dir);
  auto s = run_cmd(kMm1, "solve", dir);
  CHECK(s.exit_code == cli::kOk);
  CHECK(s.report["closed_form_error"].get<double>() < 1e-10);
  CHECK(std::filesystem::exists(dir + "/pi.csv"));

  auto rv = run_cmd(read_file(spec_dir() + "/explicit_cycle.json"), "reverse", dir);
  CHECK(rv.exit_code == cli::kOk);
  CHECK_FALSE(rv.report["reversible"].get<bool>());
  CHECK(std::filesystem::exists(dir + "/reversed.csv"));

  auto sim = run_cmd(R"({"model":{"kind":"mm1","lambda":1,"mu":2},"truncation":{"bound":60},
                         "sim":{"events":5000,"seed":3}})",
                     "simulate", dir);
  CHECK(sim.exit_code == cli::kOk);
  CHECK(sim.report["seed"] == 3);
  CHECK(std::filesystem::exists(dir + "/trajectory.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("solver failures map to exit code 3") {
  auto r = run_cmd(R"({"model":{"kind":"explicit","states":[0,1,2],"rates":[[0,1,1.0],[1,0,1.0]]}})", "solve");
  CHECK(r.exit_code == cli::kSolverFailure);
  CHECK(r.report["error"]["code"] == "NotIrreducible");
}

TEST_CASE("main entry point") {
  const auto path = (std::filesystem::temp_directory_path() / "qrev_main_spec.json").string();
  {
    std::ofstream f(path);
    f << kMm1;
  }
  auto call = [](std::vector<std::string> args, std::string& out) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream o, e;
    int code = cli::main(static_cast<int>(argv.size()), argv.data(), o, e);
    out = o.str();
    return code;
  };
  std::string out;
  CHECK(call({"qrev", "check", "--spec", path, "--tol", "1e-8"}, out) == 0);
  auto rep = json::parse(out);
  CHECK(rep["tol"] == 1e-8);
  CHECK(call({"qrev", "frobnicate", "--spec", path}, out) == 2);
  CHECK_NOTHROW(json::parse(out));
  CHECK(call({"qrev", "check"}, out) == 2);
  CHECK_NOTHROW(json::parse(out));
  CHECK(call({"qrev", "check", "--spec", "/nonexistent.json"}, out) == 2);
  CHECK(call({"qrev", "simulate", "--spec", path, "--seed", "17"}, out) == 0);
  CHECK(json::parse(out)["seed"] == 17);
  std::filesystem::remove(path);
}
