#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "sublp/errors.hpp"
#include "sublp/reports.hpp"

using namespace sublp;

namespace {

const BoundReport& find(const ReportEnvelope& env, const std::string& id) {
  for (const auto& r : env.reports)
    if (r.inequality_id == id) return r;
  FAIL("missing report " << id);
  throw;
}

}  // namespace

TEST_CASE("list_checks: required ids, one owning module each") {
  const auto checks = list_checks();
  std::set<std::string> ids;
  for (const auto& c : checks) {
    CHECK(ids.insert(c.id).second);
    CHECK_FALSE(c.module.empty());
    CHECK_FALSE(c.statement.empty());
  }
  for (const char* id : {"thm1.1", "lem3.3", "cor3.6", "lem4.3", "lem5.1", "lem5.3", "eq6.08.9", "lem6.4", "thm6.5"})
    CHECK(ids.count(id) == 1);
  // every verb's default set is made of registered ids
  RunConfig c;
  for (const auto& verb : commands())
    for (const auto& id : default_checks(verb, c)) CHECK(ids.count(id) == 1);
}

TEST_CASE("config: json round trip and schema errors") {
  RunConfig c;
  c.command = "spde";
  c.phi_name = "two_stable";
  c.phi_params = {{"alpha", 0.2}};
  c.p = {2.0, 4.0, 8.0};
  c.seed = 99;
  c.checks = {"thm6.3"};
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());

  CHECK_THROWS_AS(RunConfig::from_json(json{{"bogus", 1}}), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"n", "64"}}), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"trials", {{"replica", 3}}}}), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"seed", -1}}), SchemaError);
  CHECK(RunConfig::from_json(json{{"p", 3}}).p == std::vector<double>{3.0});

  RunConfig bad;
  bad.phi_name = "no_such_phi";
  CHECK_THROWS_AS(bad.validate(), SchemaError);
  bad = RunConfig{};
  bad.checks = {"thm9.9"};
  CHECK_THROWS_AS(bad.validate(), SchemaError);
  bad = RunConfig{};
  bad.phi_params = {{"alpha", 3.0}};
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("resource caps stop a run before any output") {
  const auto dir = std::filesystem::temp_directory_path() / "sublp_cap_test";
  std::filesystem::create_directories(dir);
  RunConfig c;
  c.d = 3;
  c.n = 1 << 20;
  c.csv_path = (dir / "side.csv").string();
  c.binary_path = (dir / "side.bin").string();
  CHECK_THROWS_AS(run(c), ResourceLimitError);
  CHECK_FALSE(std::filesystem::exists(c.csv_path));
  CHECK_FALSE(std::filesystem::exists(c.binary_path));

  c = RunConfig{};
  c.replicas = 2000000;
  CHECK_THROWS_AS(run(c), ResourceLimitError);
  c = RunConfig{};
  c.n = 512;
  c.d = 3;
  CHECK_THROWS_AS(run(c), ResourceLimitError);  // 2^27 cells
  std::filesystem::remove_all(dir);
}

TEST_CASE("catalog verb on lambda^{1/2}") {
  RunConfig c;
  c.command = "catalog";
  const ReportEnvelope env = run(c);
  CHECK(env.pass());
  const auto& ex = find(env, "catalog.scaling").details["exponents"];
  for (const char* k : {"delta1", "delta2", "delta3"}) CHECK(std::abs(ex[k].get<double>() - 0.5) < 1e-3);
  CHECK(std::abs(find(env, "lem3.2").n_hat - 0.5) < 1e-6);
  CHECK(std::abs(find(env, "lem3.9").n_hat - 1.0) < 1e-4);
  const json j = env.to_json();
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["config"]["phi"]["name"] == "stable");
  CHECK(j["reports"][0]["grid"].contains("seed"));
}

TEST_CASE("lp-ratio verb: the p = 2 constant") {
  RunConfig c;
  c.command = "lp-ratio";
  c.n = 32;
  c.M = 128;
  c.random_fields = 6;
  const ReportEnvelope env = run(c);
  CHECK(env.pass());
  CHECK(find(env, "lem5.1").n_hat == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("replaying the echoed config reproduces every number") {
  RunConfig c;
  c.command = "spde";
  c.checks = {"thm6.3"};
  c.n = 16;
  c.M = 16;
  c.replicas = 200;
  const ReportEnvelope a = run(c);
  const ReportEnvelope b = run(RunConfig::from_json(a.config));
  CHECK(json(a.reports.at(0)).dump() == json(b.reports.at(0)).dump());
}

TEST_CASE("exit contract: errors and failures clear the pass flag") {
  RunConfig c;
  c.phi_name = "log_cosh";
  c.checks = {"lem3.3"};  // no closed-form jump density
  const ReportEnvelope env = run(c);
  CHECK(env.reports.empty());
  REQUIRE(env.errors.size() == 1);
  CHECK(env.errors[0]["type"] == "unsupported");
  CHECK_FALSE(env.pass());
  // the default kernel set skips it instead
  c.checks.clear();
  const auto ids = default_checks("kernel", c);
  CHECK(std::find(ids.begin(), ids.end(), "lem3.3") == ids.end());
}

TEST_CASE("simulate verb writes little-endian float64 samples") {
  const auto path = std::filesystem::temp_directory_path() / "sublp_sim_test.bin";
  RunConfig c;
  c.command = "simulate";
  c.samples = 100000;
  c.d = 2;
  c.binary_path = path.string();
  const ReportEnvelope env = run(c);
  CHECK(env.pass());
  CHECK(std::filesystem::file_size(path) == 100000u * 2u * 8u);
  std::ifstream in(path, std::ios::binary);
  double first[2];
  in.read(reinterpret_cast<char*>(first), sizeof first);
  CHECK(std::isfinite(first[0]));
  CHECK(std::isfinite(first[1]));
  std::filesystem::remove(path);
}
