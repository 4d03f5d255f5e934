#include "mglue/combinatorics.hpp"
#include "mglue/harness.hpp"
#include "mglue/io.hpp"
#include "mglue/linear_theory.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

namespace mglue {

namespace {

class Suite {
public:
  explicit Suite(std::vector<CheckResult>& out) : out_(out) {}

  void check(const std::string& module, const std::string& name, const std::string& bound_name, double measured,
             double bound, bool passed, std::string note = {}) {
    out_.push_back({module, name, bound_name, measured, bound, passed && std::isfinite(measured), std::move(note)});
  }
  void le(const std::string& module, const std::string& name, const std::string& bound_name, double measured,
          double bound) {
    check(module, name, bound_name, measured, bound, measured <= bound);
  }
  void ge(const std::string& module, const std::string& name, const std::string& bound_name, double measured,
          double bound) {
    check(module, name, bound_name, measured, bound, measured >= bound);
  }
  // An exception inside a group fails the group with its message.
  void group(const std::string& module, const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      check(module, name, "completes without error", 0, 0, false, e.what());
    }
  }

private:
  std::vector<CheckResult>& out_;
};

DiscretePath band_limited(const Grid& g, int n, int modes, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  const double L = g.t_max() - g.t_min();
  Eigen::MatrixXd a(n, modes), b(n, modes);
  for (int k = 0; k < modes; ++k)
    for (int i = 0; i < n; ++i) {
      a(i, k) = gauss(rng) / (1 + k);
      b(i, k) = gauss(rng) / (1 + k);
    }
  return DiscretePath::sample(g, n, [&](double s) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < modes; ++k) {
      double w = k * M_PI * (s - g.t_min()) / L;
      v += a.col(k) * std::cos(w) + b.col(k) * std::sin(w);
    }
    return v;
  });
}

Vec nonzero_or(const Vec& v, double fill) { return v.size() && v.cwiseAbs().maxCoeff() > 0 ? v : Vec::Constant(v.size(), fill); }

}  // namespace

std::vector<CheckResult> run_invariant_suite(const Experiment& e) {
  std::vector<CheckResult> out;
  Suite S(out);
  const MorseModel& m = e.model.model;
  const ModelConstants& k = e.k;
  const double h = e.cfg.h, sigma = k.sigma, eps = 0.9 * sigma;
  const int n = m.dim(), ns = m.stable_dim(), nu = n - ns;
  const std::vector<double>& Ts = e.cfg.T_list;
  const double Tlo = Ts.front(), Thi = Ts.back();
  GlueSettings strict = e.settings;
  strict.strict = true;
  GlueSettings measured = e.settings;
  measured.strict = false;

  // path_space
  S.group("path_space", "sobolev embedding", [&] {
    std::mt19937_64 rng = task_rng(e.cfg.rng_seed, 101);
    for (double T : {1.0, 3.0, 8.0}) {
      Grid g = Grid::symmetric(T, h);
      double worst = 0;
      const int modes = std::max(2, std::min(20, g.cells() / 8));
      for (int q = 0; q < 200; ++q) {
        PathNorms pn = norms(band_limited(g, n, modes, rng));
        worst = std::max(worst, pn.sup / pn.w12);
      }
      S.le("path_space", "sobolev embedding T=" + fmt17(T), "sup <= 2 w12 (1+5h)", worst, 2 * (1 + 5 * g.spacing()));
    }
  });
  S.group("path_space", "differentiation", [&] {
    Grid g = Grid::symmetric(Tlo, h);
    DiscretePath p = DiscretePath::sample(g, 1, [](double s) { return Eigen::VectorXd::Constant(1, s * s); });
    DiscretePath d = differentiate(p);
    double err = 0;
    for (int j = 0; j < g.size(); ++j) err = std::max(err, std::abs(d.samples()(0, j) - 2 * g.node(j)));
    S.le("path_space", "derivative of s^2", "stencil exact on quadratics", err, 1e-10);
  });

  // morse_model
  S.group("morse_model", "model", [&] {
    Eigen::MatrixXd J(n, n);
    Vec z = Vec::Zero(n);
    m.nonlinear_jacobian(z.data(), J.data());
    S.le("morse_model", "nonlinearity 2-jet at 0", "vanishes", J.norm() + m.nonlinear_grad(z).norm(), 1e-14);
    double sup = sampled_nonlinear_sup(m, k.delta_4, 200);
    S.le("morse_model", "linear radius delta_4", "sup |d grad f - A| <= 1/(4c)", sup, 1 / (4 * k.c_rightinv));
    S.le("morse_model", "T0 >= 3 and finite", "T0 finite", k.T0 >= 3 ? 0.0 : 1.0, 0.0);
  });

  // invariant_manifolds
  const Vec xs = nonzero_or(e.cfg.x0, 0.1), ys = nonzero_or(e.cfg.y0, 0.1);
  const double Sh = head_length(e.settings, Thi);
  S.group("invariant_manifolds", "half trajectories", [&] {
    HalfTrajectory wp = shoot_stable(m, xs, Sh, h, e.settings.shoot);
    HalfTrajectory wm = shoot_unstable(m, ys, Sh, h, e.settings.shoot);
    for (const HalfTrajectory* w : {&wp, &wm}) {
      std::string side = to_string(w->side);
      S.le("invariant_manifolds", side + " flow residual", "<= tol_flow", w->residual, e.cfg.tol_flow);
      DecayFit f = decay_fit(*w, 2, Sh - 2);
      S.ge("invariant_manifolds", side + " decay rate", ">= 0.9 sigma", f.rate, eps);
      S.ge("invariant_manifolds", side + " decay fit quality", "r2 >= 0.99", f.r2, 0.99);
    }
    // First tangent lift against central differences of the shooting map.
    const double fd = 1e-5;
    Vec e1 = Vec::Unit(ns, 0);
    auto W = solve_tangent_lift(m, wp, build_tangent_system(1), {e1});
    DiscretePath up = shoot_stable(m, xs + fd * e1, Sh, h, e.settings.shoot).head;
    DiscretePath dn = shoot_stable(m, xs - fd * e1, Sh, h, e.settings.shoot).head;
    DiscretePath diff = (1 / (2 * fd)) * (up - dn) - W[1];
    S.le("invariant_manifolds", "first tangent lift vs finite differences", "sup <= 1e-5",
         diff.samples().cwiseAbs().maxCoeff(), 1e-5);
    std::mt19937_64 rng = task_rng(e.cfg.rng_seed, 102);
    std::normal_distribution<double> gauss;
    std::vector<Vec> seeds;
    for (int q = 0; q < 3; ++q) seeds.push_back(Vec::NullaryExpr(ns, [&] { return 0.2 * gauss(rng); }));
    auto W2 = solve_tangent_lift(m, wp, build_tangent_system(2), seeds);
    double worst_rate = 1e300;
    for (int q = 1; q < 4; ++q) {
      if (W2[q].samples().cwiseAbs().maxCoeff() < 1e-13) continue;
      worst_rate = std::min(worst_rate, decay_fit(W2[q], 2, Sh - 2).rate);
    }
    S.ge("invariant_manifolds", "second tangent lift decay", "rate >= 0.9 sigma", worst_rate, eps);
  });

  // linear_theory
  for (double T : {Tlo, Thi}) {
    S.group("linear_theory", "uniform bounds", [&] {
      LinearTheory lt(m, T, h, k);
      LinearNorms ln = lt.measured_norms();
      const double sl = 1 + 5 * lt.grid().spacing();
      const std::string t = " T=" + fmt17(lt.T());
      S.le("linear_theory", "projection norm" + t, "<= d (1+5h)", ln.norm_Pi, k.d_proj * sl);
      S.le("linear_theory", "right inverse norm" + t, "<= c (1+5h)", ln.norm_Q, k.c_rightinv * sl);
      S.le("linear_theory", "infinitesimal gluing norm" + t, "<= 1", ln.gamma_opnorm, 1 + 1e-9);
      S.ge("linear_theory", "infinitesimal gluing min singular value" + t, ">= sqrt(1 - exp(-12 sigma))",
           ln.gamma_minsv, std::sqrt(1 - std::exp(-12 * sigma)) - 1e-9);
      std::mt19937_64 rng = task_rng(e.cfg.rng_seed, 103);
      std::normal_distribution<double> gauss;
      CellField eta = CellField::zero(lt.grid(), n);
      for (int c = 0; c < lt.grid().cells(); ++c)
        for (int i = 0; i < n; ++i) eta.values()(i, c) = gauss(rng);
      double dq = (lt.apply_D(lt.apply_Q(eta)) - eta).l2() / eta.l2();
      S.le("linear_theory", "D Q = Id" + t, "relative defect <= 1e-12", dq, 1e-12);
      Vec v = Vec::Ones(ns), w = Vec::Ones(nu);
      S.le("linear_theory", "kernel of D" + t, "sup <= 1e-12", lt.apply_D(lt.kernel_path({v, w})).sup(), 1e-12);
    });
  }

  // gluing and newton_picard on small admissible seeds
  const Vec xa = Vec::Constant(ns, 0.01), ya = Vec::Constant(nu, -0.01);
  for (double T : {Tlo, Thi}) {
    S.group("gluing", "strict glue", [&] {
      LinearTheory lt(m, T, h, k);
      GlueReport r = glue_seeds(m, k, e.beta, xa, ya, T, strict);
      const std::string t = " T=" + fmt17(lt.T());
      S.le("newton_picard", "correction" + t, "|gamma_T - w_T| <= 2c |F(w_T)| 1.01", r.np.correction_norm,
           r.bound_2cF * 1.01 + 1e-15);
      S.le("newton_picard", "contraction ratio" + t, "<= 0.55", r.np.contraction_ratio_max, 0.55);
      S.le("gluing", "glued path is a flow line" + t, "sup |F(gamma_T)| <= 10 tol_zero", r.flow_residual_sup,
           10 * e.cfg.tol_zero);
      S.le("gluing", "re-integration" + t, "<= 1e-5", reintegration_defect(m, r.glued), 1e-5);
      S.le("gluing", "gamma_T - w_T in complement" + t, "boundary defect == 0", r.boundary_defect, 0.0);
      double plateau = 0;
      for (int j = 0; j < lt.grid().size(); ++j)
        if (std::abs(lt.grid().node(j)) <= 1 + 1e-12) plateau = std::max(plateau, r.preglued.samples().col(j).norm());
      S.le("gluing", "plateau of the pre-glued path" + t, "== 0 on [-1, 1]", plateau, 0.0);
      HalfTrajectory wp = shoot_stable(m, xa, head_length(strict, lt.T()), lt.grid().spacing(), strict.shoot);
      HalfTrajectory wm = shoot_unstable(m, ya, head_length(strict, lt.T()), lt.grid().spacing(), strict.shoot);
      DiscretePath w = preglue(m, e.beta, wp, wm, lt.T(), lt.grid());
      auto [l, rr] = evaluate_ends(w);
      bool same = (l.array() == wp.start().array()).all() && (rr.array() == wm.start().array()).all();
      S.check("gluing", "endpoint identity" + t, "bitwise equal", same ? 0 : 1, 0, same);
      if (m.is_euclidean()) {
        Vec wp0 = Vec::Zero(n), wm0 = Vec::Zero(n);
        wp0.head(ns) = xa;
        wm0.tail(nu) = ya;
        DiscretePath ref = euclidean_gluing_reference(m, wp0, wm0, lt.T(), lt.grid());
        S.le("gluing", "euclidean closed form" + t, "sup <= 1e-6", (r.glued - ref).samples().cwiseAbs().maxCoeff(), 1e-6);
        S.le("gluing", "euclidean iteration count" + t, "<= 2", r.np.iterations, 2);
      }
    });
  }
  {
    int accepted = 0;
    for (double T : Ts) try {
        glue_seeds(m, k, e.beta, xa, ya, T, strict);
        ++accepted;
      } catch (const std::exception&) {
      }
    S.check("gluing", "one seed box for every T", "accepted in strict mode for all T", accepted,
            static_cast<double>(Ts.size()), accepted == static_cast<int>(Ts.size()));
  }

  S.group("gluing", "approximate zero", [&] {
    const Vec x3 = nonzero_or(e.cfg.x0, 0.3), y3 = nonzero_or(e.cfg.y0, 0.3);
    HalfTrajectory wp = shoot_stable(m, x3, Sh, h, e.settings.shoot);
    HalfTrajectory wm = shoot_unstable(m, y3, Sh, h, e.settings.shoot);
    ApproxZeroTable t = certify_approx_zero(m, e.beta, wp, wm, Ts, h, e.settings.execution);
    double outside = 0;
    for (const auto& r : t.rows) outside = std::max(outside, r.outside_support);
    S.le("gluing", "residual support", "<= 1e-8 away from the transition bands", outside, 1e-8);
    if (Ts.size() >= 3 && t.fit) {
      S.ge("gluing", "pre-gluing residual decay", "rate >= 0.9 sigma", t.fit->rate, eps);
      S.ge("gluing", "pre-gluing residual fit", "r2 >= 0.99", t.fit->r2, 0.99);
    }
  });

  S.group("gluing", "evaluation map convergence", [&] {
    const Vec x3 = nonzero_or(e.cfg.x0, 0.3), y3 = nonzero_or(e.cfg.y0, 0.3);
    double box = std::max(x3.cwiseAbs().maxCoeff(), y3.cwiseAbs().maxCoeff());
    double C = estimate_decay_constant(m, k, e.beta, box, Ts, measured);
    SweepTable sw = convergence_sweep(m, k, e.beta, x3, y3, Ts, C, measured);
    double worst = 0;
    for (const auto& r : sw.rows) worst = std::max(worst, r.ev_bound > 0 ? r.ev_error / r.ev_bound : 0.0);
    S.le("gluing", "ev error against the decay bound", "ev_error <= 1.2 sqrt2 4cC exp(-eps T)", worst, 1.2);
    if (Ts.size() >= 3 && sw.ev_fit) S.ge("gluing", "ev error decay rate", ">= 0.9 sigma", sw.ev_fit->rate, eps);
  });

  S.group("gluing", "linearized gluing", [&] {
    LinearTheory lt(m, Tlo, h, k);
    std::vector<std::pair<Vec, Vec>> probes{{Vec::Ones(ns), Vec::Zero(nu)}, {Vec::Zero(ns), Vec::Ones(nu)},
                                            {Vec::Ones(ns), -Vec::Ones(nu)}};
    LinearizedGlueReport r = linearized_glue_check(m, k, e.beta, lt, probes, strict);
    S.le("gluing", "finite-difference d gamma_T vs infinitesimal gluing", m.is_euclidean() ? "<= 1e-8" : "<= 1e-3",
         r.max_discrepancy, m.is_euclidean() ? 1e-8 : 1e-3);
  });

  S.group("newton_picard", "tangent map", [&] {
    LinearTheory lt(m, Tlo, h, k);
    NPProblem p = glue_problem(lt);
    HalfTrajectory wp = shoot_stable(m, xa, head_length(strict, lt.T()), lt.grid().spacing(), strict.shoot);
    HalfTrajectory wm = shoot_unstable(m, ya, head_length(strict, lt.T()), lt.grid().spacing(), strict.shoot);
    Vec x1 = preglue(m, e.beta, wp, wm, lt.T(), lt.grid()).flat();
    auto W1p = solve_tangent_lift(m, wp, build_tangent_system(1), {Vec::Constant(ns, 0.01)});
    auto W1m = solve_tangent_lift(m, wm, build_tangent_system(1), {Vec::Constant(nu, 0.01)});
    Vec xi1 = preglue_paths(e.beta, W1p[1], W1m[1], lt.T(), lt.grid()).flat();
    NPOptions o = e.settings.np;
    o.enforce_preconditions = false;
    TangentResult tr = np_tangent_solve(p, x1, xi1, o);
    NPResult base = np_solve(p, x1, o);
    S.le("newton_picard", "tangent solve base point", "|base - plain solve| <= 1e-10", p.norm_x(tr.x - base.x), 1e-10);
    for (int order = 0; order <= 2; ++order) {
      std::vector<Vec> sp(static_cast<size_t>((1 << order) - 1), Vec::Constant(ns, 0.01));
      std::vector<Vec> sm(sp.size(), Vec::Constant(nu, 0.01));
      TangentSweepTable t = tangent_convergence_sweep(m, k, e.beta, xa, ya, sp, sm, {Tlo}, order, strict);
      S.le("newton_picard", "tangent differential at 0, m=" + std::to_string(order), "<= d^(2^m) (1+5h)", t.dN0_norm,
           t.dN0_bound * (1 + 5 * lt.grid().spacing()));
    }
  });

  S.group("invariant_manifolds", "combinatorics", [&] {
    int bad = 0;
    for (std::uint64_t c = 1; c <= 4096; ++c)
      if (digit_code(digit_map(c)) != c) ++bad;
    for (int d = 1; d <= 6; ++d) {
      IndexSet D;
      for (int j = 1; j <= d; ++j) D.push_back(j);
      for (int b = 1; b <= d; ++b)
        if (partitions(D, b).size() != stirling2(d, b)) ++bad;
    }
    S.le("invariant_manifolds", "digit maps and partitions", "mismatches == 0", bad, 0);
  });
  return out;
}

std::string format_check_matrix(const std::vector<CheckResult>& checks, double h) {
  std::ostringstream os;
  char line[512];
  std::snprintf(line, sizeof line, "%-20s %-56s %-44s %14s %14s  %s\n", "module", "check", "bound", "measured",
                "bound value", "result");
  os << line;
  int failed = 0;
  for (const auto& c : checks) {
    std::snprintf(line, sizeof line, "%-20s %-56s %-44s %14.6e %14.6e  %s", c.module.c_str(), c.name.c_str(),
                  c.bound_name.c_str(), c.measured, c.bound, c.passed ? "PASS" : "FAIL");
    os << line;
    if (!c.note.empty()) os << "  (" << c.note << ")";
    if (!c.passed && h > 0.05) os << "  [grid too coarse: h = " << h << "; rerun with h <= 0.02]";
    os << "\n";
    if (!c.passed) ++failed;
  }
  os << (failed ? std::to_string(failed) + " of " + std::to_string(checks.size()) + " checks failed\n"
                : "all " + std::to_string(checks.size()) + " checks passed\n");
  return os.str();
}

}  // namespace mglue
