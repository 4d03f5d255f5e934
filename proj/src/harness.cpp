#include "mglue/harness.hpp"

#include "mglue/io.hpp"
#include "mglue/linear_theory.hpp"
#include "mglue/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

namespace mglue {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* model_key_names[] = {"dim", "index", "eig", "nonlinearity", "epsilon", "delta_max", "name"};

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string tag(double T) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << T;
  return os.str();
}

json constants_json(const ModelConstants& k) {
  return {{"sigma", k.sigma},         {"c", k.c_rightinv}, {"d", k.d_proj},        {"k", k.k_gamma_inv},
          {"epsilon", k.epsilon},     {"C", k.C_decay},    {"delta_max", k.delta_max},
          {"mu_big", k.mu_big},       {"delta_2", k.delta_2}, {"delta_4", k.delta_4}, {"delta_big", k.delta_big},
          {"rho_2", k.rho_2},         {"rho_4", k.rho_4},  {"rho_big", k.rho_big}, {"T0", k.T0}};
}

// Module-qualified diagnostics and the exit-code policy shared by all commands.
int guarded(const char* cmd, std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << cmd << ": config: " << e.what() << "\n";
  } catch (const ParseError& e) {
    log << cmd << ": morse_model: " << e.what() << "\n";
  } catch (const ModelError& e) {
    log << cmd << ": morse_model: " << e.what() << "\n";
  } catch (const IoError& e) {
    log << cmd << ": io: " << e.what() << "\n";
  } catch (const PreconditionError& e) {
    log << cmd << ": gluing: " << e.what() << "\n";
    return exit_verification;
  } catch (const ConvergenceError& e) {
    log << cmd << ": newton_picard: " << e.what() << "\n";
    return exit_verification;
  } catch (const CertificateError& e) {
    log << cmd << ": newton_picard: " << e.what() << "\n";
    return exit_verification;
  } catch (const SolverError& e) {
    log << cmd << ": invariant_manifolds: " << e.what() << "\n";
    return exit_verification;
  } catch (const std::exception& e) {
    log << cmd << ": " << e.what() << "\n";
  }
  return exit_usage;
}

std::vector<Vec> draw_seeds(std::mt19937_64& rng, int count, int dim) {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec v(dim);
    for (int j = 0; j < dim; ++j) v(j) = u(rng);
    out.push_back(v);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_experiment(const KvConfig& cfg, const fs::path& source) {
  ExperimentConfig e;
  e.source = source;
  if (cfg.has("model")) {
    fs::path mp = cfg.get("model");
    if (mp.is_relative() && !source.empty()) mp = source.parent_path() / mp;
    e.model_keys = KvConfig::load(mp);
  } else {
    if (!cfg.has("dim")) throw ConfigError(cfg.origin() + ": neither 'model' nor inline model keys given");
    for (const char* key : model_key_names)
      if (cfg.has(key)) e.model_keys.set(key, cfg.get(key));
  }
  e.cutoff = cfg.get_or("cutoff", e.cutoff);
  Cutoff::from_name(e.cutoff);
  if (cfg.has("x0")) e.x0 = to_vec(cfg.numbers("x0"));
  if (cfg.has("y0")) e.y0 = to_vec(cfg.numbers("y0"));
  e.seed_box = cfg.number_or("seed_box", 0);
  e.T_list = cfg.numbers_or("T_list", e.T_list);
  e.h = cfg.number_or("h", e.h);
  e.tol_zero = cfg.number_or("tol_zero", e.tol_zero);
  e.tol_flow = cfg.number_or("tol_flow", e.tol_flow);
  std::string mode = cfg.get_or("mode", "strict");
  if (mode != "strict" && mode != "measured") throw ConfigError("mode must be 'strict' or 'measured'");
  e.strict = mode == "strict";
  e.out = cfg.get_or("out", e.out.string());
  e.rng_seed = static_cast<std::uint64_t>(cfg.number_or("rng_seed", 1));
  std::vector<double> orders = cfg.numbers_or("tangent_orders", {0, 1, 2});
  e.tangent_orders.clear();
  for (double o : orders) {
    if (o != std::floor(o) || o < 0 || o > 3) throw ConfigError("tangent_orders must lie in 0..3");
    e.tangent_orders.push_back(static_cast<int>(o));
  }
  e.certificate_samples = cfg.integer_or("certificate_samples", e.certificate_samples);
  e.debug_q_scale = cfg.number_or("debug_q_scale", 1.0);

  if (!(e.h > 0) || !(e.tol_zero > 0) || !(e.tol_flow > 0)) throw ConfigError("h and tolerances must be positive");
  if (e.T_list.empty()) throw ConfigError("T_list is empty");
  if (!std::is_sorted(e.T_list.begin(), e.T_list.end())) throw ConfigError("T_list must be sorted");
  if (e.T_list.front() < 3) throw ConfigError("T_list entries must be >= 3");
  if (e.seed_box < 0) throw ConfigError("seed_box must be non-negative");
  return e;
}

ExperimentConfig load_experiment(const fs::path& file) { return parse_experiment(KvConfig::load(file), file); }

Experiment build_experiment(const ExperimentConfig& cfg, bool with_decay_constant) {
  ModelFile mf = model_from_config(cfg.model_keys);
  const MorseModel& m = mf.model;
  ExperimentConfig c = cfg;
  const int ns = m.stable_dim(), nu = m.dim() - ns;
  if (c.x0.size() == 0) c.x0 = Vec::Zero(ns);
  if (c.y0.size() == 0) c.y0 = Vec::Zero(nu);
  if (c.x0.size() != ns) throw ConfigError("x0 must have " + std::to_string(ns) + " entries");
  if (c.y0.size() != nu) throw ConfigError("y0 must have " + std::to_string(nu) + " entries");
  for (double& T : c.T_list) T = snap_T(T, c.h);

  GlueSettings s;
  s.h = c.h;
  s.np.tol_zero = c.tol_zero;
  s.shoot.tol_flow = c.tol_flow;
  s.strict = c.strict;

  ConstantOptions opt;
  opt.delta_max = mf.delta_max;
  ModelConstants k = compute_constants(m, mf.epsilon, 0, opt);
  Cutoff beta = Cutoff::from_name(c.cutoff);
  if (with_decay_constant) {
    double box = c.seed_box > 0 ? c.seed_box
                                : std::max(c.x0.size() ? c.x0.cwiseAbs().maxCoeff() : 0.0,
                                           c.y0.size() ? c.y0.cwiseAbs().maxCoeff() : 0.0);
    if (box > 0) k = compute_constants(m, mf.epsilon, estimate_decay_constant(m, k, beta, box, c.T_list, s), opt);
  }
  return Experiment{std::move(c), std::move(mf), beta, k, s};
}

int cmd_constants(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded("constants", log, [&] {
    Experiment e = build_experiment(cfg, false);
    const auto& k = e.k;
    const double h = e.cfg.h;
    CsvTable csv({"T", "norm_Pi_measured", "d_bound", "norm_Q_measured", "c_bound", "gamma_opnorm", "gamma_minsv",
                  "k_bound"});
    bool ok = true;
    json rows = json::array();
    for (double T : e.cfg.T_list) {
      LinearTheory lt(e.model.model, T, h, k);
      LinearNorms ln = lt.measured_norms();
      const double normQ = ln.norm_Q * e.cfg.debug_q_scale;
      csv.row(std::vector<double>{lt.T(), ln.norm_Pi, k.d_proj, normQ, k.c_rightinv, ln.gamma_opnorm, ln.gamma_minsv,
                                  k.k_gamma_inv});
      const double slack = 1 + 5 * lt.grid().spacing();
      bool pi = ln.norm_Pi <= k.d_proj * slack, q = normQ <= k.c_rightinv * slack;
      bool gmax = ln.gamma_opnorm <= 1 + 1e-9, gmin = 1.0 / ln.gamma_minsv <= k.k_gamma_inv * (1 + 1e-9);
      if (!pi) log << "constants: T = " << lt.T() << ": projection norm " << ln.norm_Pi << " exceeds d = " << k.d_proj << "\n";
      if (!q) log << "constants: T = " << lt.T() << ": right inverse norm " << normQ << " exceeds c = " << k.c_rightinv << "\n";
      if (!gmax) log << "constants: T = " << lt.T() << ": infinitesimal gluing norm " << ln.gamma_opnorm << " exceeds 1\n";
      if (!gmin) log << "constants: T = " << lt.T() << ": inverse infinitesimal gluing norm exceeds k = " << k.k_gamma_inv << "\n";
      ok = ok && pi && q && gmax && gmin;
      rows.push_back({{"T", lt.T()},
                      {"projection norm <= d(1+5h)", {{"measured", ln.norm_Pi}, {"bound", k.d_proj * slack}, {"pass", pi}}},
                      {"right inverse norm <= c(1+5h)", {{"measured", normQ}, {"bound", k.c_rightinv * slack}, {"pass", q}}},
                      {"gluing operator norm <= 1", {{"measured", ln.gamma_opnorm}, {"bound", 1.0}, {"pass", gmax}}},
                      {"inverse gluing norm <= k", {{"measured", 1.0 / ln.gamma_minsv}, {"bound", k.k_gamma_inv}, {"pass", gmin}}},
                      {"min singular value of D on complement", ln.min_sv_D_on_K}});
    }
    write_atomic(e.cfg.out / "constants.csv", csv.str());
    json j = {{"model", e.model.model.name()}, {"constants", constants_json(k)}, {"rows", rows}, {"pass", ok}};
    write_atomic(e.cfg.out / "constants.json", j.dump(2) + "\n");
    log << "constants: c = " << fmt17(k.c_rightinv) << ", d = " << fmt17(k.d_proj) << ", k = " << fmt17(k.k_gamma_inv)
        << ", delta_4 = " << fmt17(k.delta_4) << (ok ? "; all measured norms within bounds\n" : "; BOUND VIOLATION\n");
    return ok ? exit_ok : exit_verification;
  });
}

int cmd_glue(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded("glue", log, [&] {
    Experiment e = build_experiment(cfg, true);
    const MorseModel& m = e.model.model;
    json all = json::array();
    for (double T : e.cfg.T_list) {
      GlueReport r = glue_seeds(m, e.k, e.beta, e.cfg.x0, e.cfg.y0, T, e.settings);
      write_atomic(e.cfg.out / ("glued_T" + tag(T) + ".csv"), path_csv(r.glued));
      write_atomic(e.cfg.out / ("preglued_T" + tag(T) + ".csv"), path_csv(r.preglued));
      json j = to_json(r);
      write_atomic(e.cfg.out / ("glue_T" + tag(T) + ".json"), j.dump(2) + "\n");
      all.push_back(j);
      log << "glue: T = " << r.T << "  iterations = " << r.np.iterations << "  ev_error = " << fmt17(r.ev_error) << "\n";
    }
    write_atomic(e.cfg.out / "glue.json", json{{"constants", constants_json(e.k)}, {"runs", all}}.dump(2) + "\n");
    return exit_ok;
  });
}

int cmd_converge(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded("converge", log, [&] {
    Experiment e = build_experiment(cfg, true);
    SweepTable t = convergence_sweep(e.model.model, e.k, e.beta, e.cfg.x0, e.cfg.y0, e.cfg.T_list, e.k.C_decay,
                                     e.settings);
    write_atomic(e.cfg.out / "sweep.csv", sweep_csv(t));
    json rows = json::array();
    for (const auto& r : t.rows)
      rows.push_back({{"T", r.T},
                      {"np_iters", r.np_iters},
                      {"contraction", r.contraction},
                      {"ev_error <= sqrt2 4cC exp(-eps T)", {{"measured", r.ev_error}, {"bound", r.ev_bound}, {"pass", r.within_bound}}},
                      {"correction <= 2c|F(w_T)|", {{"measured", r.corr_norm}, {"bound", r.bound_2cF}}}});
    json j = {{"constants", constants_json(e.k)}, {"C", t.C}, {"rows", rows}};
    j["ev_fit"] = t.ev_fit ? to_json(*t.ev_fit) : json();
    j["residual_fit"] = t.residual_fit ? to_json(*t.residual_fit) : json();
    write_atomic(e.cfg.out / "sweep.json", j.dump(2) + "\n");
    for (const auto& r : t.rows) log << "converge: T = " << r.T << "  ev_error = " << fmt17(r.ev_error) << "\n";
    if (t.ev_fit) log << "converge: fitted rate " << t.ev_fit->rate << " (r2 " << t.ev_fit->r2 << ")\n";
    return exit_ok;
  });
}

int cmd_tangent(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded("tangent", log, [&] {
    Experiment e = build_experiment(cfg, false);
    const MorseModel& m = e.model.model;
    json out = json::array();
    for (int order : e.cfg.tangent_orders) {
      std::mt19937_64 rng(e.cfg.rng_seed + order);
      const int count = (1 << order) - 1;
      auto sp = draw_seeds(rng, count, m.stable_dim());
      auto sm = draw_seeds(rng, count, m.dim() - m.stable_dim());
      TangentSweepTable t = tangent_convergence_sweep(m, e.k, e.beta, e.cfg.x0, e.cfg.y0, sp, sm, e.cfg.T_list, order,
                                                      e.settings);
      CsvTable csv({"T", "ev_error", "np_iters", "preglue_resid"});
      for (const auto& r : t.rows) csv.row(std::vector<double>{r.T, r.ev_error, double(r.np_iters), r.preglue_resid});
      write_atomic(e.cfg.out / ("tangent_m" + std::to_string(order) + ".csv"), csv.str());
      json j = {{"order", order},
                {"tangent differential at 0 <= d^(2^m)", {{"measured", t.dN0_norm}, {"bound", t.dN0_bound}}}};
      j["fit"] = t.fit ? to_json(*t.fit) : json();
      out.push_back(j);
      log << "tangent: m = " << order << "  |dN(0)| = " << fmt17(t.dN0_norm) << " (bound " << fmt17(t.dN0_bound) << ")\n";
    }
    write_atomic(e.cfg.out / "tangent.json", out.dump(2) + "\n");
    return exit_ok;
  });
}

int cmd_decay(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded("decay", log, [&] {
    Experiment e = build_experiment(cfg, false);
    const MorseModel& m = e.model.model;
    const double S = head_length(e.settings, e.cfg.T_list.back());
    HalfTrajectory wp = shoot_stable(m, e.cfg.x0, S, e.cfg.h, e.settings.shoot);
    HalfTrajectory wm = shoot_unstable(m, e.cfg.y0, S, e.cfg.h, e.settings.shoot);
    json records = json::array();
    std::mt19937_64 rng(e.cfg.rng_seed);
    for (const HalfTrajectory* w : {&wp, &wm}) {
      const std::string side = to_string(w->side);
      DecayFit f{};
      bool have = true;
      try {
        f = decay_fit(*w, 2, S - 2);
      } catch (const SolverError&) {
        have = false;  // the zero trajectory
      }
      write_atomic(e.cfg.out / ("trajectory_" + side + ".csv"), path_csv(w->head));
      write_atomic(e.cfg.out / ("trajectory_" + side + ".json"), trajectory_sidecar(*w, f).dump(2) + "\n");
      for (int order = 1; order <= 2; ++order) {
        const int count = (1 << order) - 1;
        auto seeds = draw_seeds(rng, count, static_cast<int>(w->seed.size()));
        auto W = solve_tangent_lift(m, *w, build_tangent_system(order), seeds);
        for (int q = 0; q < static_cast<int>(W.size()); ++q) {
          json rec = {{"side", side}, {"order", order}, {"component", q}};
          try {
            DecayFit d = w->side == Side::stable ? decay_fit(W[q], 2, S - 2) : decay_fit(W[q], 2, S - 2, true);
            rec["fit"] = to_json(d);
          } catch (const SolverError&) {
            rec["fit"] = nullptr;  // identically zero component
          }
          records.push_back(rec);
        }
      }
      if (have) log << "decay: " << side << " rate " << f.rate << " (r2 " << f.r2 << ")\n";
    }
    write_atomic(e.cfg.out / "decay.json", json{{"sigma", e.k.sigma}, {"records", records}}.dump(2) + "\n");
    return exit_ok;
  });
}

int cmd_verify(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded("verify", log, [&] {
    Experiment e = build_experiment(cfg, false);
    std::vector<CheckResult> checks = run_invariant_suite(e);
    std::ostringstream head;
    head << "model " << e.model.model.name() << "  cutoff " << e.beta.name() << "  h = " << e.cfg.h << "  seed "
         << e.cfg.rng_seed << "\n";
    std::string report = head.str() + format_check_matrix(checks, e.cfg.h);
    write_atomic(e.cfg.out / "verify_report.txt", report);
    json arr = json::array();
    bool ok = true;
    for (const auto& c : checks) {
      ok = ok && c.passed;
      arr.push_back({{"module", c.module}, {"check", c.name}, {"bound", c.bound_name}, {"measured", c.measured},
                     {"bound_value", c.bound}, {"pass", c.passed}, {"note", c.note}});
    }
    write_atomic(e.cfg.out / "verify.json", json{{"pass", ok}, {"checks", arr}}.dump(2) + "\n");
    log << report;
    return ok ? exit_ok : exit_verification;
  });
}

}  // namespace mglue
