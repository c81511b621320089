#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "atensor/errors.hpp"
#include "atensor/linalg.hpp"

namespace atensor {

inline const char* kVersion = "0.1.0";

// One verification run: which geometry, which suites, how hard to sample.
struct RunConfig {
  std::string example;  // berger | sphere | perturbed | fubini | flat
  double K = 1.0;       // surface base curvature (berger)
  double c = 0.8;       // fiber scale (berger)
  int n = 2;            // complex dim (fubini / berger base), dim (sphere/flat)
  double r = 1.0;       // sphere radius
  double eps = 0.3;     // perturbation strength
  bool base_is_fubini = false;  // berger base selector (set when --n given)
  std::vector<std::string> suites;  // empty = all applicable
  int samples = 200;
  uint64_t seed = 42;
  std::map<std::string, double> tolerance_overrides;  // suite -> tolerance
  std::string out = "-";
  std::string format = "json";  // json | csv
  std::string expect = "pass";  // pass | fail

  void validate() const {
    static const char* examples[] = {"berger", "sphere", "perturbed", "fubini",
                                     "flat"};
    bool known = false;
    for (const char* e : examples) known |= example == e;
    if (!known) throw usage_error("unknown example '" + example + "'");
    if (samples < 10) throw usage_error("samples must be >= 10");
    for (const auto& [k, v] : tolerance_overrides)
      if (v <= 0.0) throw usage_error("tolerance for " + k + " must be > 0");
    if (format != "json" && format != "csv")
      throw usage_error("format must be json or csv");
    if (expect != "pass" && expect != "fail")
      throw usage_error("expect must be pass or fail");
    if (example == "sphere" && (n < 2 || r <= 0.0))
      throw usage_error("sphere needs n >= 2 and r > 0");
    if (example == "flat" && n < 1) throw usage_error("flat needs n >= 1");
    if (example == "fubini" && n < 1) throw usage_error("fubini needs n >= 1");
    if (example == "perturbed" && std::abs(eps) >= 0.5)
      throw usage_error("perturbed needs |eps| < 0.5");
    if (example == "berger" && c <= 0.0)
      throw usage_error("berger needs c > 0");
    if (example == "berger" && !base_is_fubini && K == 0.0)
      throw usage_error("berger surface base needs K != 0");
  }
};

struct CheckDetail {
  VecN<double> point;
  double value = 0.0;
};

struct CheckReport {
  std::string suite;
  std::string check;
  std::string paper_anchor;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  int n_samples = 0;
  std::string annotation;            // optional
  std::vector<CheckDetail> details;  // optional worst offenders
};

struct RunReport {
  RunConfig config;
  std::string version = kVersion;
  std::string timestamp;
  std::vector<CheckReport> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

inline std::string iso_timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["example"] = c.example;
  j["K"] = c.K;
  j["c"] = c.c;
  j["n"] = c.n;
  j["r"] = c.r;
  j["eps"] = c.eps;
  j["base_is_fubini"] = c.base_is_fubini;
  j["suites"] = c.suites;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["tolerances"] = c.tolerance_overrides;
  j["expect"] = c.expect;
  return j;
}

inline void config_from_json(const nlohmann::json& j, RunConfig& c) {
  if (j.contains("example")) c.example = j["example"].get<std::string>();
  if (j.contains("K")) c.K = j["K"].get<double>();
  if (j.contains("c")) c.c = j["c"].get<double>();
  if (j.contains("n")) {
    c.n = j["n"].get<int>();
    if (c.example == "berger") c.base_is_fubini = true;
  }
  if (j.contains("r")) c.r = j["r"].get<double>();
  if (j.contains("eps")) c.eps = j["eps"].get<double>();
  if (j.contains("base_is_fubini"))
    c.base_is_fubini = j["base_is_fubini"].get<bool>();
  if (j.contains("suites"))
    c.suites = j["suites"].get<std::vector<std::string>>();
  if (j.contains("samples")) c.samples = j["samples"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (j.contains("tolerances"))
    c.tolerance_overrides =
        j["tolerances"].get<std::map<std::string, double>>();
  if (j.contains("out")) c.out = j["out"].get<std::string>();
  if (j.contains("format")) c.format = j["format"].get<std::string>();
  if (j.contains("expect")) c.expect = j["expect"].get<std::string>();
}

inline nlohmann::ordered_json to_json(const CheckReport& c) {
  nlohmann::ordered_json j;
  j["suite"] = c.suite;
  j["check"] = c.check;
  j["paper_anchor"] = c.paper_anchor;
  j["residual"] = c.residual;
  j["tolerance"] = c.tolerance;
  j["pass"] = c.pass;
  j["n_samples"] = c.n_samples;
  if (!c.annotation.empty()) j["annotation"] = c.annotation;
  if (!c.details.empty()) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& d : c.details) {
      nlohmann::ordered_json e;
      e["point"] = d.point;
      e["value"] = d.value;
      arr.push_back(e);
    }
    j["details"] = arr;
  }
  return j;
}

inline nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["version"] = r.version;
  j["timestamp"] = r.timestamp;
  j["config"] = to_json(r.config);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) arr.push_back(to_json(c));
  j["checks"] = arr;
  return j;
}

inline CheckReport check_from_json(const nlohmann::json& j) {
  CheckReport c;
  c.suite = j.at("suite").get<std::string>();
  c.check = j.at("check").get<std::string>();
  c.paper_anchor = j.at("paper_anchor").get<std::string>();
  c.residual = j.at("residual").get<double>();
  c.tolerance = j.at("tolerance").get<double>();
  c.pass = j.at("pass").get<bool>();
  c.n_samples = j.at("n_samples").get<int>();
  if (j.contains("annotation")) c.annotation = j["annotation"];
  if (j.contains("details"))
    for (const auto& e : j["details"])
      c.details.push_back(
          {e.at("point").get<VecN<double>>(), e.at("value").get<double>()});
  return c;
}

// Flat CSV of the check table (one row per check).
inline std::string checks_csv(const RunReport& r) {
  std::string out =
      "suite,check,paper_anchor,residual,tolerance,pass,n_samples,annotation\n";
  char buf[512];
  for (const auto& c : r.checks) {
    std::snprintf(buf, sizeof(buf), "%s,%s,\"%s\",%.17g,%.17g,%d,%d,\"%s\"\n",
                  c.suite.c_str(), c.check.c_str(), c.paper_anchor.c_str(),
                  c.residual, c.tolerance, c.pass ? 1 : 0, c.n_samples,
                  c.annotation.c_str());
    out += buf;
  }
  return out;
}

}  // namespace atensor
