// atensor: builds example geometries, runs verification suites, sweeps the
// fiber-scale parameter, and emits machine-readable reports.
//
// Subcommands: verify, sweep, list. Exit codes: 0 all checks pass (or, with
// --expect fail, at least one check failed), 1 unexpected check outcome,
// 2 usage error. ATENSOR_THREADS caps worker threads.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "atensor/suites.hpp"

namespace {

using namespace atensor;

struct CliOptions {
  RunConfig config;
  std::string config_file;
  std::vector<std::string> tol_args;
  double c_min = 0.2, c_max = 1.4;
  int steps = 13;
};

void apply_tolerance_args(const std::vector<std::string>& args,
                          RunConfig& config) {
  for (const auto& kv : args) {
    auto pos = kv.find('=');
    if (pos == std::string::npos)
      throw usage_error("--tol expects suite=value, got '" + kv + "'");
    std::string suite = kv.substr(0, pos);
    suite_anchor(suite);  // validates the name
    double value = 0.0;
    try {
      value = std::stod(kv.substr(pos + 1));
    } catch (const std::exception&) {
      throw usage_error("--tol value is not a number in '" + kv + "'");
    }
    config.tolerance_overrides[suite] = value;
  }
}

void write_output(const std::string& path, const std::string& payload) {
  if (path == "-") {
    std::cout << payload;
    return;
  }
  std::ofstream out(path);
  if (!out) throw usage_error("cannot open output file '" + path + "'");
  out << payload;
}

void print_summary(const RunReport& report) {
  for (const auto& c : report.checks) {
    std::fprintf(stderr, "[%s] %s/%s residual=%.3e tol=%.1e%s%s\n",
                 c.pass ? "PASS" : "FAIL", c.suite.c_str(), c.check.c_str(),
                 c.residual, c.tolerance, c.annotation.empty() ? "" : "  # ",
                 c.annotation.c_str());
  }
}

int do_verify(CliOptions& opt) {
  opt.config.validate();
  RunReport report = run(opt.config);
  std::string payload = opt.config.format == "json"
                            ? to_json(report).dump(2) + "\n"
                            : checks_csv(report);
  write_output(opt.config.out, payload);
  print_summary(report);
  bool ok = report.all_pass();
  bool expected = opt.config.expect == "pass" ? ok : !ok;
  std::fprintf(stderr, "%zu checks, %s (expectation: %s)\n",
               report.checks.size(), ok ? "all passed" : "failures present",
               opt.config.expect.c_str());
  return expected ? 0 : 1;
}

int do_sweep(CliOptions& opt) {
  opt.config.example = "berger";
  opt.config.validate();
  auto result = sweep(opt.config, opt.c_min, opt.c_max, opt.steps);
  std::string payload = opt.config.format == "json"
                            ? sweep_json(result).dump(2) + "\n"
                            : sweep_csv(result);
  write_output(opt.config.out, payload);
  std::fprintf(stderr,
               "sweep of %d steps done; max |measured - formula|: lambda %.3e, "
               "mu %.3e\n",
               opt.steps, result.max_lambda_discrepancy,
               result.max_mu_discrepancy);
  return 0;
}

int do_list(const std::string& filter) {
  struct ExampleDoc {
    const char* name;
    const char* params;
  };
  static const ExampleDoc examples[] = {
      {"berger", "--K <curvature=1> --c <fiber scale=0.8> | --n <N> selects "
                 "the complex projective base"},
      {"sphere", "--n <dim=2> --r <radius=1>"},
      {"perturbed", "--eps <strength=0.3>"},
      {"fubini", "--n <complex dim=2>"},
      {"flat", "--n <dim=2>"},
  };
  bool matched = filter.empty();
  std::printf("examples:\n");
  for (const auto& e : examples) {
    if (!filter.empty() && filter != e.name) continue;
    matched = true;
    std::printf("  %-10s %s\n", e.name, e.params);
    std::printf("             suites:");
    for (const auto& s : applicable_suites(e.name)) std::printf(" %s", s.c_str());
    std::printf("\n");
  }
  std::printf("suites:\n");
  for (const auto& s : suite_registry()) {
    if (!filter.empty() && filter != s.name) continue;
    matched = true;
    std::printf("  %-15s -> %s : %s\n", s.name.c_str(), s.anchor.c_str(),
                s.summary.c_str());
  }
  if (!matched) {
    std::fprintf(stderr, "unknown name '%s'\n", filter.c_str());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chart-level verification of Ricci eigenstructure, Killing "
               "machinery, and circle-bundle curvature identities"};
  app.require_subcommand(1);

  CliOptions opt;

  auto add_geometry_flags = [&](CLI::App* cmd) {
    cmd->add_option("--example", opt.config.example,
                    "berger | sphere | perturbed | fubini | flat");
    cmd->add_option("--K", opt.config.K, "surface base curvature");
    cmd->add_option("--c", opt.config.c, "fiber scale");
    cmd->add_option("--n", opt.config.n,
                    "dimension (flat/sphere) or complex dimension (fubini; "
                    "for berger selects the projective base)");
    cmd->add_option("--r", opt.config.r, "sphere radius");
    cmd->add_option("--eps", opt.config.eps, "perturbation strength");
    cmd->add_option("--samples", opt.config.samples, "interior sample count");
    cmd->add_option("--seed", opt.config.seed, "sampling seed");
    cmd->add_option("--tol", opt.tol_args,
                    "per-suite tolerance override, suite=value (repeatable)");
    cmd->add_option("--out", opt.config.out, "output path ('-' = stdout)");
    cmd->add_option("--format", opt.config.format, "json | csv");
    cmd->add_option("--config", opt.config_file,
                    "JSON config file mirroring the flags");
  };

  auto* verify = app.add_subcommand("verify", "run verification suites");
  add_geometry_flags(verify);
  verify->add_option("--suite", opt.config.suites,
                     "suite name (repeatable; default: all applicable)");
  verify->add_option("--expect", opt.config.expect,
                     "pass | fail (inverts the exit status for negative "
                     "controls)");

  auto* sweep_cmd =
      app.add_subcommand("sweep", "sweep the fiber scale c and tabulate");
  add_geometry_flags(sweep_cmd);
  sweep_cmd->add_option("--c-min", opt.c_min, "sweep start (> 0)");
  sweep_cmd->add_option("--c-max", opt.c_max, "sweep end");
  sweep_cmd->add_option("--steps", opt.steps, "grid size (>= 2)");

  std::string list_filter;
  auto* list_cmd =
      app.add_subcommand("list", "list examples, parameters, and suites");
  list_cmd->add_option("name", list_filter, "restrict to one name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (cmd->get_name() == "list") return do_list(list_filter);

    // precedence: defaults, then config file, then explicit flags
    if (!opt.config_file.empty()) {
      std::ifstream in(opt.config_file);
      if (!in) throw usage_error("cannot read config file " + opt.config_file);
      nlohmann::json j = nlohmann::json::parse(in);
      RunConfig from_file = opt.config;
      config_from_json(j, from_file);
      auto keep_flag = [&](const char* flag) {
        return cmd->count(flag) > 0;
      };
      RunConfig merged = from_file;
      if (keep_flag("--example")) merged.example = opt.config.example;
      if (keep_flag("--K")) merged.K = opt.config.K;
      if (keep_flag("--c")) merged.c = opt.config.c;
      if (keep_flag("--n")) merged.n = opt.config.n;
      if (keep_flag("--r")) merged.r = opt.config.r;
      if (keep_flag("--eps")) merged.eps = opt.config.eps;
      if (keep_flag("--samples")) merged.samples = opt.config.samples;
      if (keep_flag("--seed")) merged.seed = opt.config.seed;
      if (keep_flag("--out")) merged.out = opt.config.out;
      if (keep_flag("--format")) merged.format = opt.config.format;
      if (cmd->get_name() == "verify") {
        if (cmd->count("--suite") > 0) merged.suites = opt.config.suites;
        if (cmd->count("--expect") > 0) merged.expect = opt.config.expect;
      }
      opt.config = merged;
    }
    if (cmd->count("--n") > 0 && opt.config.example == "berger")
      opt.config.base_is_fubini = true;
    apply_tolerance_args(opt.tol_args, opt.config);

    if (cmd->get_name() == "verify") return do_verify(opt);
    // sweeps tabulate as CSV unless JSON was asked for explicitly
    if (cmd->count("--format") == 0 && opt.config_file.empty())
      opt.config.format = "csv";
    return do_sweep(opt);
  } catch (const usage_error& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
