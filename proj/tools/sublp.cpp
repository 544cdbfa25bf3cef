// Command-line front end: one verb per module, JSON report on stdout or --report.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "sublp/errors.hpp"
#include "sublp/reports.hpp"

namespace {

using sublp::json;

struct Overrides {
  std::string config_path;
  std::string report_path;
  std::optional<std::string> phi;
  std::vector<std::string> params;
  std::optional<int> d, n, M, K, random_fields, kmax, replicas;
  std::optional<double> L, T, samples;
  std::vector<double> p;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> checks;
  std::optional<std::string> csv, binary;
  bool demo = false;
  std::optional<int> max_n;
};

void add_options(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config_path, "JSON run config; flags override its values")->check(CLI::ExistingFile);
  app->add_option("-r,--report", o.report_path, "write the JSON report here instead of stdout");
  app->add_option("--phi", o.phi, "catalog entry");
  app->add_option("--param", o.params, "phi parameter override, key=value (repeatable)");
  app->add_option("--d", o.d, "space dimension");
  app->add_option("--L", o.L, "torus side");
  app->add_option("--n", o.n, "points per axis");
  app->add_option("--M", o.M, "time steps");
  app->add_option("--T,--t", o.T, "horizon (sampling time for simulate)");
  app->add_option("--K", o.K, "noise channels");
  app->add_option("--p", o.p, "exponents (repeatable)");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--random-fields", o.random_fields, "random test fields per ensemble");
  app->add_option("--kmax", o.kmax, "largest wavenumber in random fields");
  app->add_option("--replicas", o.replicas, "Monte Carlo replicas");
  app->add_option("--count,--samples", o.samples, "samples to draw");
  app->add_option("--check", o.checks, "check id to run (repeatable; default: the verb's set)");
  app->add_option("--csv", o.csv, "CSV side output (kernel table, sharp demo)");
  app->add_option("--out", o.binary, "binary sample output (little-endian float64, count x d)");
  app->add_flag("--demo", o.demo, "write the sharp-function demo CSV");
  app->add_option("--max-n", o.max_n, "resource cap on n");
}

sublp::RunConfig build_config(const std::string& command, const Overrides& o) {
  json base = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    try {
      base = json::parse(in);
    } catch (const json::exception& e) {
      throw sublp::SchemaError("config: " + std::string(e.what()));
    }
  }
  sublp::RunConfig c = sublp::RunConfig::from_json(base);
  c.command = command;
  if (o.phi) {
    if (*o.phi != c.phi_name) c.phi_params.clear();
    c.phi_name = *o.phi;
  }
  for (const auto& kv : o.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw sublp::SchemaError("--param expects key=value, got '" + kv + "'");
    try {
      c.phi_params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw sublp::SchemaError("--param value is not a number: '" + kv + "'");
    }
  }
  if (o.d) c.d = *o.d;
  if (o.n) c.n = *o.n;
  if (o.M) c.M = *o.M;
  if (o.K) c.K = *o.K;
  if (o.L) c.L = *o.L;
  if (o.T) c.T = *o.T;
  if (!o.p.empty()) c.p = o.p;
  if (o.seed) c.seed = *o.seed;
  if (o.random_fields) c.random_fields = *o.random_fields;
  if (o.kmax) c.kmax = *o.kmax;
  if (o.replicas) c.replicas = *o.replicas;
  if (o.samples) c.samples = *o.samples;
  if (!o.checks.empty()) c.checks = o.checks;
  if (o.csv) c.csv_path = *o.csv;
  if (o.binary) c.binary_path = *o.binary;
  if (o.demo) c.demo = true;
  if (o.max_n) c.limits.max_n = *o.max_n;
  if (!o.report_path.empty()) c.report_path = o.report_path;
  return c;
}

int emit_error(const std::string& type, const std::string& message) {
  std::cerr << json{{"error", type}, {"message", message}}.dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subordinate Brownian motion kernels, square-function bounds and SPDE checks"};
  app.require_subcommand(1);
  Overrides o;
  for (const auto& verb : sublp::commands()) add_options(app.add_subcommand(verb), o);
  auto* lc = app.add_subcommand("list-checks", "print every check id with its owning module");
  CLI11_PARSE(app, argc, argv);

  if (lc->parsed()) {
    json out = json::array();
    for (const auto& c : sublp::list_checks())
      out.push_back({{"id", c.id}, {"module", c.module}, {"statement", c.statement}});
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  sublp::ReportEnvelope env;
  sublp::RunConfig config;
  try {
    config = build_config(verb, o);
    env = sublp::run(config);
  } catch (const sublp::ResourceLimitError& e) {
    return emit_error("resource_limit", e.what());
  } catch (const sublp::SchemaError& e) {
    return emit_error("schema", e.what());
  } catch (const sublp::Error& e) {
    return emit_error("config", e.what());
  }

  const std::string text = env.to_json().dump(2);
  if (config.report_path.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream out(config.report_path);
    if (!out) return emit_error("io", "cannot write '" + config.report_path + "'");
    out << text << "\n";
  }
  return env.pass() ? 0 : 1;
}
