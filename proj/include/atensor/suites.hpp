#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "atensor/constructions.hpp"
#include "atensor/geodesics.hpp"
#include "atensor/reporting.hpp"

namespace atensor {

// ---------------------------------------------------------------------------
// Suite registry. Each suite certifies one block of identities and carries
// the anchor string reports use to name what it checks.
// ---------------------------------------------------------------------------

struct SuiteInfo {
  std::string name;
  std::string anchor;
  std::string summary;
};

inline const std::vector<SuiteInfo>& suite_registry() {
  static const std::vector<SuiteInfo> reg = {
      {"a-condition", "Prop 1.1 (c)",
       "cyclic sum of nabla Phi vanishes for the Ricci endomorphism"},
      {"eigenstructure", "Thm 3.3 (3.6)-(3.8) / Cor 2.3",
       "eigenvalue pattern, constancy, and formula match"},
      {"theorem-1-2", "Thm 1.2 (1.4)-(1.5)",
       "gradient and mixed-cluster identities for eigenfields"},
      {"distributions", "Cor 1.4 / Eq (1.10)",
       "integrability, autoparallelism, nabla S on eigendistributions"},
      {"killing", "Lem 2.4 / Cor 2.6",
       "Killing residual, deformation tensor structure, trace identity"},
      {"lemma-2-5", "Lem 2.5 / Eq (2.8)",
       "curvature identities for the unit Killing field"},
      {"oneill", "Eqs (3.1)-(3.2)",
       "submersion A-tensor equations and totally geodesic fibers"},
      {"theorem-3-3", "Thm 3.3",
       "full bundle certificate: eigenvalues, tau, T~, properness"},
      {"geodesics", "Prop 1.1 (b)",
       "conservation of Phi(gamma', gamma') and Killing momenta"},
      {"properness", "Thm 2.8 / Thm 2.10",
       "parallel vs proper classification consistency"},
  };
  return reg;
}

inline std::string suite_anchor(const std::string& name) {
  for (const auto& s : suite_registry())
    if (s.name == name) return s.anchor;
  throw usage_error("unknown suite '" + name + "'");
}

inline std::vector<std::string> applicable_suites(const std::string& example) {
  if (example == "berger")
    return {"a-condition", "eigenstructure", "theorem-1-2", "distributions",
            "killing",     "lemma-2-5",      "oneill",      "theorem-3-3",
            "geodesics",   "properness"};
  if (example == "flat")
    return {"a-condition", "eigenstructure", "theorem-1-2", "distributions",
            "killing",     "lemma-2-5",      "geodesics",   "properness"};
  if (example == "sphere" || example == "fubini")
    return {"a-condition", "eigenstructure", "theorem-1-2", "distributions",
            "geodesics"};
  if (example == "perturbed")
    return {"a-condition", "eigenstructure", "geodesics"};
  throw usage_error("unknown example '" + example + "'");
}

// ---------------------------------------------------------------------------
// Geometry context shared by the suites of one run.
// ---------------------------------------------------------------------------

struct SuiteContext {
  RunConfig config;
  ChartPatch patch;
  std::optional<BergerBundleSpec> bundle;
  std::optional<VectorField> xi;  // distinguished unit Killing field
  EndoField ricci;
  std::vector<VecN<double>> samples;

  double tolerance(const std::string& suite, double fallback) const {
    auto it = config.tolerance_overrides.find(suite);
    return it == config.tolerance_overrides.end() ? fallback : it->second;
  }
};

inline SuiteContext build_context(const RunConfig& config) {
  config.validate();
  SuiteContext ctx;
  ctx.config = config;
  if (config.example == "berger") {
    KaehlerBaseSpec base = config.base_is_fubini
                               ? fubini_study_base(config.n)
                               : surface_base(config.K);
    ctx.bundle = berger_bundle(base, config.c);
    ctx.patch = ctx.bundle->patch;
    ctx.xi = ctx.bundle->xi;
  } else if (config.example == "sphere") {
    ctx.patch = round_sphere_patch(config.n, config.r);
  } else if (config.example == "perturbed") {
    ctx.patch = perturbed_sphere_patch(config.eps);
  } else if (config.example == "fubini") {
    ctx.patch = fubini_study_base(config.n).patch;
  } else {  // flat
    ctx.patch = flat_patch(config.n);
    ctx.xi = constant_field(config.n, unit_coord(config.n, 0));
  }
  ctx.ricci = ricci_endofield(ctx.patch);
  ctx.samples = sample_points(ctx.patch, config.samples, config.seed);
  return ctx;
}

// ---------------------------------------------------------------------------
// Individual suites.
// ---------------------------------------------------------------------------

namespace detail {

inline CheckReport make_check(const SuiteContext& ctx, const std::string& suite,
                              const std::string& check, double residual,
                              double tolerance, const std::string& annotation = "") {
  CheckReport r;
  r.suite = suite;
  r.check = check;
  r.paper_anchor = suite_anchor(suite);
  r.residual = residual;
  r.tolerance = tolerance;
  r.pass = residual <= tolerance;
  r.n_samples = static_cast<int>(ctx.samples.size());
  r.annotation = annotation;
  return r;
}

inline void attach_worst_offenders(
    CheckReport& r, const std::vector<std::pair<VecN<double>, double>>& pts,
    size_t keep = 3) {
  auto sorted = pts;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.second > b.second; });
  for (size_t i = 0; i < std::min(keep, sorted.size()); ++i)
    r.details.push_back({sorted[i].first, sorted[i].second});
}

}  // namespace detail

inline std::vector<CheckReport> run_a_condition(SuiteContext& ctx) {
  const std::string s = "a-condition";
  double tol = ctx.tolerance(s, 1e-8);
  auto rep = a_condition_residual(ctx.patch, ctx.ricci, ctx.samples, tol);
  std::vector<CheckReport> out;
  out.push_back(detail::make_check(ctx, s, "ricci-g-symmetry",
                                   rep.max_symmetry_residual, 1e-8));
  auto cyc = detail::make_check(ctx, s, "cyclic-condition",
                                rep.max_cyclic_residual, tol);
  if (!cyc.pass) detail::attach_worst_offenders(cyc, rep.per_point);
  out.push_back(std::move(cyc));
  return out;
}

inline std::vector<CheckReport> run_eigenstructure(SuiteContext& ctx) {
  const std::string s = "eigenstructure";
  double tol = ctx.tolerance(s, 1e-8);
  auto rep = eigenvalue_constancy(ctx.patch, ctx.ricci, ctx.samples);
  std::vector<CheckReport> out;
  out.push_back(detail::make_check(ctx, s, "pattern-stable",
                                   rep.uniform_pattern ? 0.0 : 1.0, 0.5));
  double dev = 0.0;
  for (double d : rep.max_deviation) dev = std::max(dev, d);
  out.push_back(detail::make_check(ctx, s, "eigenvalue-constancy", dev, tol));
  out.push_back(detail::make_check(ctx, s, "directional-derivative",
                                   rep.max_directional_derivative, tol));

  if (ctx.bundle) {
    auto cert = theorem_3_3_certificate(*ctx.bundle, ctx.samples,
                                        ctx.config.seed);
    std::string note = cert.einstein_case ? "Einstein case" : "";
    out.push_back(detail::make_check(ctx, s, "lambda-matches-formula",
                                     cert.lambda_max_err, 1e-7, note));
    out.push_back(detail::make_check(ctx, s, "mu-matches-formula",
                                     cert.mu_max_err, 1e-7, note));
    out.push_back(detail::make_check(ctx, s, "multiplicities",
                                     cert.multiplicities_ok ? 0.0 : 1.0, 0.5));
    if (!cert.einstein_case)
      out.push_back(detail::make_check(ctx, s, "xi-alignment",
                                       cert.xi_alignment_residual, 1e-8));
  }
  return out;
}

inline std::vector<CheckReport> run_theorem_1_2(SuiteContext& ctx) {
  const std::string s = "theorem-1-2";
  double tol = ctx.tolerance(s, 1e-8);
  // eigenfield jets make this the most expensive suite per point
  int count = std::min<int>(static_cast<int>(ctx.samples.size()), 50);
  std::vector<VecN<double>> pts(ctx.samples.begin(),
                                ctx.samples.begin() + count);
  auto rep = theorem_1_2_residuals(ctx.patch, ctx.ricci, pts);
  std::vector<CheckReport> out;
  auto c14 = detail::make_check(ctx, s, "eq-1-4", rep.eq14_residual, tol);
  c14.n_samples = count;
  out.push_back(std::move(c14));
  auto c15 = detail::make_check(ctx, s, "eq-1-5", rep.eq15_residual, tol,
                                rep.skipped_pairs
                                    ? std::to_string(rep.skipped_pairs) +
                                          " near-degenerate pairs skipped"
                                    : "");
  c15.n_samples = count;
  out.push_back(std::move(c15));
  return out;
}

inline std::vector<CheckReport> run_distributions(SuiteContext& ctx) {
  const std::string s = "distributions";
  double tol = ctx.tolerance(s, 1e-8);
  const double persist = 1e-4;
  int count = std::min<int>(static_cast<int>(ctx.samples.size()), 30);
  std::vector<VecN<double>> pts(ctx.samples.begin(),
                                ctx.samples.begin() + count);
  auto es = eigenstructure(ctx.patch, ctx.ricci, pts.front());
  std::vector<CheckReport> out;
  for (int cl = 0; cl < es.count; ++cl) {
    auto rep = distribution_checks(ctx.patch, ctx.ricci, cl, pts);
    bool all_vanish = rep.integrability_residual <= tol &&
                      rep.autoparallel_residual <= tol &&
                      rep.nabla_s_residual <= tol;
    bool all_persist = rep.integrability_residual >= persist &&
                       rep.nabla_s_residual >= persist;
    std::string tag = "cluster-" + std::to_string(cl);
    std::string note = all_vanish   ? "integrable and autoparallel"
                       : all_persist ? "non-integrable, nabla S persists"
                                     : "";
    auto chk = detail::make_check(ctx, s, tag + "-consistency",
                                  (all_vanish || all_persist) ? 0.0 : 1.0, 0.5,
                                  note);
    chk.n_samples = count;
    out.push_back(std::move(chk));
    if (es.multiplicities[static_cast<size_t>(cl)] == 1) {
      auto chk1 = detail::make_check(
          ctx, s, tag + "-line-autoparallel",
          std::max(rep.autoparallel_residual,
                   std::max(rep.integrability_residual, rep.nabla_s_residual)),
          tol);
      chk1.n_samples = count;
      out.push_back(std::move(chk1));
    }
  }
  return out;
}

inline std::vector<CheckReport> run_killing(SuiteContext& ctx) {
  const std::string s = "killing";
  if (!ctx.xi) throw usage_error("killing suite needs a distinguished field");
  double tol = ctx.tolerance(s, 1e-8);
  auto rep = killing_and_T(ctx.patch, *ctx.xi, ctx.samples);
  std::vector<CheckReport> out;
  out.push_back(detail::make_check(ctx, s, "unit-norm", rep.unit_residual, 1e-10));
  out.push_back(
      detail::make_check(ctx, s, "killing-residual", rep.killing_residual, 1e-9));
  out.push_back(detail::make_check(ctx, s, "t-antisymmetry",
                                   rep.antisymmetry_residual, 1e-10));
  out.push_back(detail::make_check(ctx, s, "t-annihilates-xi",
                                   rep.t_xi_residual, 1e-10));
  out.push_back(detail::make_check(ctx, s, "lie-preserves-horizontal",
                                   rep.lie_dmu_residual, 1e-9));
  out.push_back(detail::make_check(ctx, s, "theta-coclosed",
                                   rep.coclosed_residual, 1e-10));
  out.push_back(detail::make_check(ctx, s, "lambda-equals-t-norm",
                                   rep.lambda_vs_t_norm, tol));
  out.push_back(detail::make_check(ctx, s, "trace-nabla-t",
                                   rep.trace_nabla_t_residual, tol));
  out.push_back(detail::make_check(ctx, s, "t-norm-constant",
                                   rep.t_norm_sq_spread, tol));
  return out;
}

inline std::vector<CheckReport> run_lemma_2_5(SuiteContext& ctx) {
  const std::string s = "lemma-2-5";
  if (!ctx.xi) throw usage_error("lemma-2-5 suite needs a distinguished field");
  double tol = ctx.tolerance(s, 1e-8);
  int count = std::min<int>(static_cast<int>(ctx.samples.size()), 50);
  std::vector<VecN<double>> pts(ctx.samples.begin(),
                                ctx.samples.begin() + count);
  auto rep = lemma_2_5_check(ctx.patch, *ctx.xi, pts, ctx.config.seed);
  std::vector<CheckReport> out;
  for (auto& [name, val] :
       std::initializer_list<std::pair<const char*, double>>{
           {"eq-2-6a", rep.eq26a_residual},
           {"eq-2-6b", rep.eq26b_residual},
           {"cor-2-5", rep.cor25_residual},
           {"eq-2-8", rep.eq28_residual}}) {
    auto chk = detail::make_check(ctx, s, name, val, tol);
    chk.n_samples = count;
    out.push_back(std::move(chk));
  }
  return out;
}

inline std::vector<CheckReport> run_oneill(SuiteContext& ctx) {
  const std::string s = "oneill";
  if (!ctx.bundle) throw usage_error("oneill suite needs a bundle example");
  double tol = ctx.tolerance(s, 1e-8);
  int count = std::min<int>(static_cast<int>(ctx.samples.size()), 50);
  std::vector<VecN<double>> pts(ctx.samples.begin(),
                                ctx.samples.begin() + count);
  auto rep = oneill_A_check(*ctx.bundle, pts);
  std::vector<CheckReport> out;
  auto push = [&](const char* name, double v, double t,
                  const std::string& note = "") {
    auto chk = detail::make_check(ctx, s, name, v, t, note);
    chk.n_samples = count;
    out.push_back(std::move(chk));
  };
  push("eq-3-1", rep.eq31_residual, tol);
  push("eq-3-2", rep.eq32_residual, tol,
       "measured |A_UV|^2 = " + std::to_string(rep.eq32_value));
  push("a-vertical-component", rep.a_vertical_residual, tol);
  push("a-on-vertical-args", rep.a_xixi_residual, 1e-10);
  push("totally-geodesic-fibers", rep.fiber_geodesic_residual, 1e-9);
  return out;
}

inline std::vector<CheckReport> run_theorem_3_3(SuiteContext& ctx) {
  const std::string s = "theorem-3-3";
  if (!ctx.bundle) throw usage_error("theorem-3-3 suite needs a bundle example");
  double tol = ctx.tolerance(s, 1e-7);
  auto cert = theorem_3_3_certificate(*ctx.bundle, ctx.samples,
                                      ctx.config.seed);
  std::string note = cert.einstein_case ? "Einstein case" : "";
  std::vector<CheckReport> out;
  out.push_back(detail::make_check(ctx, s, "lambda-eigenvalue",
                                   cert.lambda_max_err, tol, note));
  out.push_back(
      detail::make_check(ctx, s, "mu-eigenvalue", cert.mu_max_err, tol, note));
  out.push_back(detail::make_check(ctx, s, "multiplicities",
                                   cert.multiplicities_ok ? 0.0 : 1.0, 0.5));
  if (cert.einstein_case) {
    out.push_back(detail::make_check(ctx, s, "einstein-residual",
                                     cert.einstein_total_residual, 1e-8,
                                     "Einstein case"));
  } else {
    out.push_back(detail::make_check(ctx, s, "xi-alignment",
                                     cert.xi_alignment_residual, 1e-8));
    out.push_back(detail::make_check(ctx, s, "horizontal-eigenspace",
                                     cert.horizontal_residual, 1e-8));
  }
  out.push_back(detail::make_check(ctx, s, "tau-identity",
                                   cert.tau_identity_residual, tol));
  out.push_back(
      detail::make_check(ctx, s, "t-norm-formula", cert.t_norm_sq_err, 1e-8));
  out.push_back(detail::make_check(ctx, s, "t-tilde-vs-j",
                                   cert.t_tilde_j_residual, 1e-8));
  out.push_back(
      detail::make_check(ctx, s, "a-condition", cert.a_condition, 1e-8));
  out.push_back(detail::make_check(ctx, s, "delta-omega",
                                   cert.delta_omega_residual, 1e-9));
  bool prop_ok = cert.einstein_case
                     ? cert.properness.status == "einstein"
                     : (cert.proper_expected
                            ? cert.properness.status == "proper"
                            : cert.properness.status == "parallel");
  out.push_back(detail::make_check(ctx, s, "properness-classification",
                                   prop_ok ? 0.0 : 1.0, 0.5,
                                   cert.properness.status));
  return out;
}

inline std::vector<CheckReport> run_geodesics(SuiteContext& ctx) {
  const std::string s = "geodesics";
  double tol = ctx.tolerance(s, 1e-6);
  const double integrator_tol = 1e-10;
  const int count = 50;
  Rng rng(ctx.config.seed ^ 0x9e3779b97f4a7c15ull);

  double energy = 0.0, phi = 0.0, momentum = 0.0, vertical = 0.0;
  int drifted = 0;
  std::vector<VecN<double>> starts(
      ctx.samples.begin(),
      ctx.samples.begin() + std::min<size_t>(ctx.samples.size(), count));
  struct Draw {
    VecN<double> x, v;
  };
  std::vector<Draw> draws;
  for (const auto& x0 : starts)
    draws.push_back({x0, random_unit_tangent(ctx.patch, x0, rng)});

  std::vector<double> e(draws.size(), 0.0), p(draws.size(), 0.0),
      mo(draws.size(), 0.0);
  parallel_for(static_cast<int>(draws.size()), [&](int i) {
    const auto& d = draws[static_cast<size_t>(i)];
    auto traj = integrate_geodesic(ctx.patch, d.x, d.v, 10.0, integrator_tol);
    e[static_cast<size_t>(i)] =
        conserved_quantity_drift(ctx.patch, traj,
                                 [&](const VecN<double>& x,
                                     const VecN<double>& v) {
                                   return inner(ctx.patch.metric_value(x), v, v);
                                 })
            .relative_drift;
    p[static_cast<size_t>(i)] =
        conserved_quantity_drift(
            ctx.patch, traj,
            [&](const VecN<double>& x, const VecN<double>& v) {
              return inner(ctx.patch.metric_value(x),
                           ctx.ricci.eval(x).apply(v), v);
            })
            .relative_drift;
    if (ctx.xi)
      mo[static_cast<size_t>(i)] =
          killing_momentum_drift(ctx.patch, *ctx.xi, traj).relative_drift;
  });
  for (size_t i = 0; i < draws.size(); ++i) {
    energy = std::max(energy, e[i]);
    phi = std::max(phi, p[i]);
    momentum = std::max(momentum, mo[i]);
    if (p[i] > 1e-3) ++drifted;
  }

  std::vector<CheckReport> out;
  auto push = [&](const char* name, double v, double t,
                  const std::string& note = "") {
    auto chk = detail::make_check(ctx, s, name, v, t, note);
    chk.n_samples = static_cast<int>(draws.size());
    out.push_back(std::move(chk));
  };
  push("energy-drift", energy, 1e-8);
  push("ricci-quadratic-drift", phi, tol,
       std::to_string(drifted) + "/" + std::to_string(draws.size()) +
           " trajectories exceed 1e-3");
  if (ctx.xi) push("killing-momentum-drift", momentum, 1e-8);

  if (ctx.bundle) {
    for (int i = 0; i < 5; ++i) {
      const auto& x0 = ctx.samples[static_cast<size_t>(i)];
      auto traj = integrate_geodesic(ctx.patch, x0, ctx.bundle->xi.eval(x0),
                                     10.0, integrator_tol);
      for (const auto& st : traj.states) {
        auto g = ctx.patch.metric_value(st.x);
        auto xv = ctx.bundle->xi.eval(st.x);
        double ip = inner(g, st.v, xv);
        VecN<double> horiz(st.v.size());
        for (size_t k = 0; k < st.v.size(); ++k)
          horiz[k] = st.v[k] - ip * xv[k];
        vertical = std::max(vertical, vector_g_norm(g, horiz));
      }
    }
    push("vertical-geodesics-stay-vertical", vertical, 1e-9);
  }
  return out;
}

inline std::vector<CheckReport> run_properness(SuiteContext& ctx) {
  const std::string s = "properness";
  std::vector<CheckReport> out;
  int count = std::min<int>(static_cast<int>(ctx.samples.size()), 40);
  std::vector<VecN<double>> pts(ctx.samples.begin(),
                                ctx.samples.begin() + count);

  // Ricci endomorphism classification (bundle examples)
  if (ctx.bundle) {
    auto cert = properness_certificate(ctx.patch, ctx.ricci, pts,
                                       &*ctx.xi);
    bool einstein = cert.einstein_degenerate;
    std::string expected = einstein ? "einstein" : "proper";
    auto chk = detail::make_check(
        ctx, s, "ricci-classification", cert.status == expected ? 0.0 : 1.0,
        0.5, cert.status);
    chk.n_samples = count;
    out.push_back(std::move(chk));
    auto chk2 = detail::make_check(ctx, s, "ricci-norms-consistent",
                                   cert.consistent ? 0.0 : 1.0, 0.5);
    chk2.n_samples = count;
    out.push_back(std::move(chk2));
  }

  // The constructed two-eigenvalue tensor (lambda, mu) = (3, 7)
  if (ctx.xi) {
    auto sfield = construct_S_from_killing(ctx.patch, *ctx.xi, 3.0, 7.0, pts);
    auto rep = a_condition_residual(ctx.patch, sfield, pts,
                                    ctx.tolerance(s, 1e-8));
    auto chk = detail::make_check(ctx, s, "constructed-a-condition",
                                  rep.max_cyclic_residual,
                                  ctx.tolerance(s, 1e-8));
    chk.n_samples = count;
    out.push_back(std::move(chk));

    auto cert = properness_certificate(ctx.patch, sfield, pts, &*ctx.xi);
    std::string expected = ctx.bundle ? "proper" : "parallel";
    auto chk2 = detail::make_check(ctx, s, "constructed-classification",
                                   cert.status == expected ? 0.0 : 1.0, 0.5,
                                   cert.status);
    chk2.n_samples = count;
    out.push_back(std::move(chk2));
    auto chk3 = detail::make_check(ctx, s, "constructed-norms-consistent",
                                   cert.consistent ? 0.0 : 1.0, 0.5);
    chk3.n_samples = count;
    out.push_back(std::move(chk3));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orchestration.
// ---------------------------------------------------------------------------

inline std::vector<CheckReport> run_suite(const std::string& name,
                                          SuiteContext& ctx) {
  if (name == "a-condition") return run_a_condition(ctx);
  if (name == "eigenstructure") return run_eigenstructure(ctx);
  if (name == "theorem-1-2") return run_theorem_1_2(ctx);
  if (name == "distributions") return run_distributions(ctx);
  if (name == "killing") return run_killing(ctx);
  if (name == "lemma-2-5") return run_lemma_2_5(ctx);
  if (name == "oneill") return run_oneill(ctx);
  if (name == "theorem-3-3") return run_theorem_3_3(ctx);
  if (name == "geodesics") return run_geodesics(ctx);
  if (name == "properness") return run_properness(ctx);
  throw usage_error("unknown suite '" + name + "'");
}

inline RunReport run(const RunConfig& config) {
  auto ctx = build_context(config);
  auto valid = applicable_suites(config.example);
  std::vector<std::string> todo = config.suites.empty() ? valid : config.suites;
  for (const auto& name : todo) {
    suite_anchor(name);  // throws on unknown names
    if (std::find(valid.begin(), valid.end(), name) == valid.end())
      throw usage_error("suite '" + name + "' is not applicable to example '" +
                        config.example + "'");
  }
  RunReport report;
  report.config = config;
  report.timestamp = iso_timestamp_utc();
  for (const auto& name : todo) {
    auto checks = run_suite(name, ctx);
    report.checks.insert(report.checks.end(), checks.begin(), checks.end());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Parameter sweep over the fiber scale c.
// ---------------------------------------------------------------------------

struct SweepRow {
  double c = 0.0;
  double lambda_measured = 0.0, lambda_formula = 0.0;
  double mu_measured = 0.0, mu_formula = 0.0;
  double tau_measured = 0.0;
  double a_residual = 0.0;
  bool proper = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double max_lambda_discrepancy = 0.0;
  double max_mu_discrepancy = 0.0;
};

inline SweepResult sweep(const RunConfig& config, double c_min, double c_max,
                         int steps) {
  if (!(0.0 < c_min && c_min < c_max) || steps < 2)
    throw usage_error("sweep needs 0 < c_min < c_max and steps >= 2");
  RunConfig cfg = config;
  cfg.example = "berger";
  cfg.validate();
  KaehlerBaseSpec base =
      cfg.base_is_fubini ? fubini_study_base(cfg.n) : surface_base(cfg.K);

  SweepResult result;
  for (int k = 0; k < steps; ++k) {
    double c = c_min + (c_max - c_min) * k / (steps - 1);
    auto spec = berger_bundle(base, c);
    auto samples = sample_points(spec.patch, cfg.samples, cfg.seed);
    auto cert = theorem_3_3_certificate(spec, samples, cfg.seed);
    SweepRow row;
    row.c = c;
    row.lambda_formula = cert.lambda_formula;
    row.mu_formula = cert.mu_formula;
    row.lambda_measured = cert.lambda_measured;
    row.mu_measured = cert.einstein_case ? cert.lambda_measured
                                         : cert.mu_measured;
    row.tau_measured = cert.tau_measured;
    row.a_residual = cert.a_condition;
    row.proper = cert.properness.status == "proper";
    result.max_lambda_discrepancy =
        std::max(result.max_lambda_discrepancy,
                 std::abs(row.lambda_measured - row.lambda_formula));
    result.max_mu_discrepancy =
        std::max(result.max_mu_discrepancy,
                 std::abs(row.mu_measured - row.mu_formula));
    result.rows.push_back(row);
  }
  return result;
}

inline std::string sweep_csv(const SweepResult& res) {
  std::string out =
      "c,lambda_measured,lambda_formula,mu_measured,mu_formula,tau_measured,"
      "a_residual,proper_flag\n";
  char buf[512];
  for (const auto& r : res.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.3e,%d\n",
                  r.c, r.lambda_measured, r.lambda_formula, r.mu_measured,
                  r.mu_formula, r.tau_measured, r.a_residual,
                  r.proper ? 1 : 0);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "max_abs_discrepancy,%.17g,,%.17g,,,,\n",
                res.max_lambda_discrepancy, res.max_mu_discrepancy);
  out += buf;
  return out;
}

inline nlohmann::ordered_json sweep_json(const SweepResult& res) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : res.rows) {
    nlohmann::ordered_json j;
    j["c"] = r.c;
    j["lambda_measured"] = r.lambda_measured;
    j["lambda_formula"] = r.lambda_formula;
    j["mu_measured"] = r.mu_measured;
    j["mu_formula"] = r.mu_formula;
    j["tau_measured"] = r.tau_measured;
    j["a_residual"] = r.a_residual;
    j["proper_flag"] = r.proper;
    rows.push_back(j);
  }
  nlohmann::ordered_json j;
  j["rows"] = rows;
  j["max_lambda_discrepancy"] = res.max_lambda_discrepancy;
  j["max_mu_discrepancy"] = res.max_mu_discrepancy;
  return j;
}

}  // namespace atensor
