// Acceptance run: one PASS/FAIL line per criterion.  argv[1] is the source
// directory holding models/ and configs/.

#include "mglue/combinatorics.hpp"
#include "mglue/gluing.hpp"
#include "mglue/harness.hpp"
#include "mglue/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace mglue;
namespace fs = std::filesystem;

namespace {

struct Setup {
  ModelFile mf;
  ModelConstants k;
};

Setup load(const fs::path& src, const std::string& name) {
  Setup s{load_model_file((src / "models" / (name + ".model")).string()), {}};
  ConstantOptions opt;
  opt.delta_max = s.mf.delta_max;
  s.k = compute_constants(s.mf.model, s.mf.epsilon, 0, opt);
  return s;
}

ModelConstants with_decay(const Setup& s, double C) {
  ConstantOptions opt;
  opt.delta_max = s.mf.delta_max;
  return compute_constants(s.mf.model, s.mf.epsilon, C, opt);
}

Vec v1(double a) { return Vec::Constant(1, a); }
double sup_abs(const DiscretePath& p) { return p.samples().cwiseAbs().maxCoeff(); }

GlueSettings settings(bool strict) {
  GlueSettings s;
  s.h = 0.02;
  s.strict = strict;
  return s;
}

std::vector<double> range_T(int lo, int hi) {
  std::vector<double> out;
  for (int T = lo; T <= hi; ++T) out.push_back(T);
  return out;
}

// Sum of the first `modes` cosines and sines on the interval with decaying
// Gaussian amplitudes.
DiscretePath band_limited(const Grid& g, int n, int modes, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  const double L = g.t_max() - g.t_min();
  Eigen::MatrixXd a(n, modes), b(n, modes);
  for (int q = 0; q < modes; ++q)
    for (int i = 0; i < n; ++i) {
      a(i, q) = gauss(rng) / (1 + q);
      b(i, q) = gauss(rng) / (1 + q);
    }
  return DiscretePath::sample(g, n, [&](double s) {
    Vec v = Vec::Zero(n);
    for (int q = 0; q < modes; ++q) {
      double w = q * M_PI * (s - g.t_min()) / L;
      v += a.col(q) * std::cos(w) + b.col(q) * std::sin(w);
    }
    return v;
  });
}

// Restricted growth strings of length n, by exhaustive enumeration.
std::vector<std::vector<int>> brute_rgs(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(n, 0);
  for (;;) {
    int mx = -1;
    bool canonical = true;
    for (int i = 0; i < n; ++i) {
      if (a[i] > mx + 1) canonical = false;
      mx = std::max(mx, a[i]);
    }
    if (canonical) out.push_back(a);
    int i = n - 1;
    while (i >= 0 && ++a[i] == n) a[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void need(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Body = std::function<void(Outcome&)>;

int failures = 0;

void run(int id, const std::string& title, const Body& body) {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s  %s (%.1f s):%s\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), secs,
              o.detail.str().c_str());
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <source dir>\n";
    return 1;
  }
  const fs::path src = argv[1];
  configure_threads();
  const Setup E1 = load(src, "e1"), C1 = load(src, "c1");
  const MorseModel& me = E1.mf.model;
  const MorseModel& mc = C1.mf.model;
  const Cutoff beta = Cutoff::quintic();
  const double sigma = C1.k.sigma;

  run(1, "Euclidean exactness", [&](Outcome& o) {
    double worst = 0;
    int iters = 0;
    for (double T : {3.0, 5.0, 8.0})
      for (double x : {-0.5, 0.2, 0.5})
        for (double y : {-0.5, -0.1, 0.5}) {
          GlueReport r = glue_seeds(me, E1.k, beta, v1(x), v1(y), T, settings(false));
          DiscretePath ref = euclidean_gluing_reference(me, Eigen::Vector2d(x, 0), Eigen::Vector2d(0, y), r.T,
                                                        r.glued.grid());
          worst = std::max(worst, sup_abs(r.glued - ref));
          iters = std::max(iters, r.np.iterations);
        }
    o.detail << " sup error " << worst << ", max iterations " << iters;
    o.need(worst <= 1e-6, "sup error <= 1e-6");
    o.need(iters <= 2, "iterations <= 2");
  });

  run(2, "approximate-zero decay", [&](Outcome& o) {
    const double S = head_length(settings(true), 10);
    HalfTrajectory wp = shoot_stable(mc, v1(0.3), S), wm = shoot_unstable(mc, v1(0.3), S);
    ApproxZeroTable t = certify_approx_zero(mc, beta, wp, wm, range_T(3, 10), 0.02);
    double outside = 0;
    for (const auto& r : t.rows) outside = std::max(outside, r.outside_support);
    o.need(t.fit.has_value(), "fit exists");
    if (!t.fit) return;
    o.detail << " rate " << t.fit->rate << ", r2 " << t.fit->r2 << ", outside bands " << outside;
    o.need(t.fit->rate >= 0.9 * sigma, "rate >= 0.9 sigma");
    o.need(t.fit->r2 >= 0.99, "r2 >= 0.99");
    o.need(outside <= 1e-8, "outside support <= 1e-8");
  });

  run(3, "Newton-Picard contract on 50 admissible pairs", [&](Outcome& o) {
    GlueSettings s = settings(true);
    const std::vector<double> Ts = range_T(3, 10);
    double r = certified_seed_radius(mc, C1.k, beta, Ts, s, 0.05);
    ModelConstants k = with_decay(C1, estimate_decay_constant(mc, C1.k, beta, r, Ts, s));
    const double Tlo = std::max(3.0, k.T0);
    o.detail << " seed radius " << r << ", T in [" << Tlo << ", 10]";
    o.need(Tlo <= 10, "T0 <= 10");
    if (Tlo > 10) return;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> useed(-r, r), uT(Tlo, 10);
    std::vector<std::tuple<double, double, double>> pairs;
    for (int q = 0; q < 50; ++q) pairs.emplace_back(useed(rng), useed(rng), uT(rng));
    std::vector<GlueReport> reps(pairs.size());
    std::vector<std::string> errs(pairs.size());
    for_each_index(pairs.size(), Execution::parallel, [&](std::size_t i) {
      auto [x, y, T] = pairs[i];
      try {
        reps[i] = glue_seeds(mc, k, beta, v1(x), v1(y), T, s);
      } catch (const std::exception& e) {
        errs[i] = e.what();
      }
    });
    double resid = 0, ratio = 0, contraction = 0, boundary = 0;
    int rejected = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!errs[i].empty()) {
        ++rejected;
        continue;
      }
      const GlueReport& g = reps[i];
      resid = std::max({resid, g.np.residual_final, g.flow_residual_sup});
      boundary = std::max(boundary, g.boundary_defect);
      if (g.bound_2cF > 0) ratio = std::max(ratio, g.np.correction_norm / g.bound_2cF);
      contraction = std::max(contraction, g.np.contraction_ratio_max);
    }
    o.detail << "; rejected " << rejected << ", |F| " << resid << ", boundary " << boundary
             << ", correction/2c|F(w_T)| " << ratio << ", contraction " << contraction;
    o.need(rejected == 0, "all pairs admissible");
    o.need(resid <= 1e-8, "|F_T(gamma_T)| <= 1e-8");
    o.need(boundary == 0, "boundary defect exactly 0");
    o.need(ratio <= 1.01, "correction <= 2c|F(w_T)| 1.01");
    o.need(contraction <= 0.55, "contraction <= 0.55");
  });

  run(4, "uniform linear bounds", [&](Outcome& o) {
    for (const Setup* s : {&E1, &C1}) {
      const MorseModel& m = s->mf.model;
      std::vector<LinearNorms> rows(4);
      const std::vector<double> Ts{3, 5, 8, 12};
      for_each_index(Ts.size(), Execution::parallel, [&](std::size_t i) {
        rows[i] = LinearTheory(m, Ts[i], 0.02, s->k).measured_norms();
      });
      const double sl = 1 + 5 * 0.02, mins = std::sqrt(1 - std::exp(-12 * s->k.sigma)) - 1e-9;
      auto spread = [&](double LinearNorms::*f) {
        double lo = 1e300, hi = 0;
        for (const auto& r : rows) {
          lo = std::min(lo, r.*f);
          hi = std::max(hi, r.*f);
        }
        return (hi - lo) / hi;
      };
      double pi = 0, q = 0, g = 0, gm = 1e300;
      for (const auto& r : rows) {
        pi = std::max(pi, r.norm_Pi);
        q = std::max(q, r.norm_Q);
        g = std::max(g, r.gamma_opnorm);
        gm = std::min(gm, r.gamma_minsv);
      }
      const std::string tag = m.name() + " ";
      o.detail << " " << tag << "Pi " << pi << " Q " << q << " Gamma " << g << " minsv " << gm << "; ";
      o.need(pi <= s->k.d_proj * sl, tag + "|Pi| <= d(1+5h)");
      o.need(q <= s->k.c_rightinv * sl, tag + "|Q| <= c(1+5h)");
      o.need(g <= 1 + 1e-9, tag + "|Gamma| <= 1");
      o.need(gm >= mins, tag + "min sv of Gamma");
      for (auto f : {&LinearNorms::norm_Pi, &LinearNorms::norm_Q, &LinearNorms::gamma_opnorm, &LinearNorms::gamma_minsv})
        o.need(spread(f) < 0.05, tag + "variation < 5%");
    }
  });

  run(5, "Sobolev constant", [&](Outcome& o) {
    int violations = 0;
    double worst = 0;
    for (double T : {1.0, 3.0, 8.0}) {
      Grid g = Grid::symmetric(T, 0.02);
      std::vector<double> ratio(1000);
      for_each_index(ratio.size(), Execution::parallel, [&](std::size_t i) {
        std::mt19937_64 rng = task_rng(77 + static_cast<std::uint64_t>(T), i);
        PathNorms pn = norms(band_limited(g, 2, 2 + static_cast<int>(i % 24), rng));
        ratio[i] = pn.sup / pn.w12;
      });
      for (double r : ratio) {
        worst = std::max(worst, r);
        if (!(r <= 2 * (1 + 5 * g.spacing()))) ++violations;
      }
    }
    o.detail << " max sup/w12 " << worst << ", violations " << violations;
    o.need(violations == 0, "no violations");
  });

  run(6, "evaluation map convergence", [&](Outcome& o) {
    GlueSettings s = settings(false);
    const std::vector<double> Ts = range_T(3, 10);
    double C = estimate_decay_constant(mc, C1.k, beta, 0.3, Ts, s);
    ModelConstants k = with_decay(C1, C);
    SweepTable t = convergence_sweep(mc, k, beta, v1(0.3), v1(0.3), Ts, C, s);
    double worst = 0;
    const double eps = 0.9 * sigma;
    for (const auto& r : t.rows) {
      double bound = std::sqrt(2.0) * 4 * k.c_rightinv * C * std::exp(-eps * r.T) * 1.2;
      worst = std::max(worst, r.ev_error / bound);
    }
    o.need(t.ev_fit.has_value(), "fit exists");
    if (!t.ev_fit) return;
    o.detail << " C " << C << ", rate " << t.ev_fit->rate << ", r2 " << t.ev_fit->r2 << ", max error/bound " << worst;
    o.need(t.ev_fit->rate >= 0.9 * sigma, "rate >= 0.9 sigma");
    o.need(t.ev_fit->r2 >= 0.99, "r2 >= 0.99");
    o.need(worst <= 1, "every point below the bound");
  });

  run(7, "linearized gluing and cutoff independence", [&](Outcome& o) {
    std::vector<std::pair<Vec, Vec>> probes{{v1(1), v1(0)}, {v1(0), v1(1)}, {v1(0.6), v1(-0.8)}};
    GlueSettings s = settings(false);
    LinearTheory lc(mc, 3, 0.02, C1.k), le(me, 3, 0.02, E1.k);
    double dc = linearized_glue_check(mc, C1.k, beta, lc, probes, s).max_discrepancy;
    double de = linearized_glue_check(me, E1.k, beta, le, probes, s).max_discrepancy;
    o.detail << " C1 " << dc << ", E1 " << de;
    o.need(dc <= 1e-3, "C1 discrepancy <= 1e-3");
    o.need(de <= 1e-8, "E1 discrepancy <= 1e-8");

    // Γ_T from each cutoff: project the pre-glued linear halves onto the kernel.
    const Cutoff other = Cutoff::smooth();
    const double S = head_length(s, 3);
    HalfTrajectory zp = shoot_stable(mc, v1(0), S), zm = shoot_unstable(mc, v1(0), S);
    double gamma_gap = 0;
    for (const auto& [x, y] : probes) {
      auto lp = DiscretePath::sample(zp.head.grid(), 2, [&](double t) { return Eigen::Vector2d(std::exp(-t) * x(0), 0); });
      auto lm = DiscretePath::sample(zm.head.grid(), 2, [&](double t) { return Eigen::Vector2d(0, std::exp(t) * y(0)); });
      auto [ea, ra] = lc.project_E(preglue_paths(beta, lp, lm, 3, lc.grid()));
      auto [eb, rb] = lc.project_E(preglue_paths(other, lp, lm, 3, lc.grid()));
      DiscretePath ga = lc.kernel_path(ea), gb = lc.kernel_path(eb);
      gamma_gap = std::max(gamma_gap, w12_norm(ga - gb));
    }
    const double S8 = head_length(s, 3);
    HalfTrajectory wp = shoot_stable(mc, v1(0.3), S8), wm = shoot_unstable(mc, v1(0.3), S8);
    double pre_gap = sup_abs(preglue(mc, beta, wp, wm, 3, lc.grid()) - preglue(mc, other, wp, wm, 3, lc.grid()));
    o.detail << ", Gamma gap " << gamma_gap << ", pre-glued gap " << pre_gap;
    o.need(gamma_gap <= 1e-12, "Gamma identical across cutoffs");
    o.need(pre_gap >= 1e-3, "pre-glued paths differ");
  });

  run(8, "diffeomorphism certificate", [&](Outcome& o) {
    GlueSettings s = settings(true);
    const double r = certificate_radius(C1.k, beta);
    ModelConstants k = with_decay(C1, estimate_decay_constant(mc, C1.k, beta, 2 * r, range_T(3, 12), s));
    const double T0 = snap_T(std::max(3.0, k.T0), s.h);
    o.detail << " seed radius " << r << ", T0 " << T0;
    for (double T : {T0, 2 * T0}) {
      LinearTheory lt(mc, T, s.h, k);
      DiffeoCertificate c = diffeo_criterion(mc, k, beta, lt, 40, s);
      o.detail << "; T " << T << ": |dG(0)^-1| " << c.ift.inverse_norm << " variation " << c.ift.max_variation
               << " injectivity " << c.ift.min_injectivity_ratio << " preimages " << c.ift.preimages_found << "/"
               << c.ift.preimages_tried << " theta " << c.theta_norm << "/" << c.theta_bound;
      o.need(c.passed, "T = " + fmt17(T) + ": " + c.failure);
    }
  });

  run(9, "tangent machinery", [&](Outcome& o) {
    int bad = 0;
    for (std::uint64_t c = 1; c <= 4096; ++c) {
      IndexSet d = digit_map(c);
      std::uint64_t back = 0;
      for (int j = 1; j <= 13; ++j)
        if (c >> (j - 1) & 1) {
          if (std::find(d.begin(), d.end(), j) == d.end()) ++bad;
          back += 1ull << (j - 1);
        }
      if (back != c || digit_code(d) != c) ++bad;
    }
    for (int n = 1; n <= 6; ++n) {
      IndexSet D;
      for (int j = 1; j <= n; ++j) D.push_back(j);
      auto all = brute_rgs(n);
      for (int b = 1; b <= n; ++b) {
        std::vector<SetPartition> expect;
        for (const auto& a : all)
          if (*std::max_element(a.begin(), a.end()) + 1 == b) {
            SetPartition p(b);
            for (int i = 0; i < n; ++i) p[a[i]].push_back(D[i]);
            expect.push_back(p);
          }
        if (partitions(D, b) != expect) ++bad;
      }
    }
    o.detail << " enumeration mismatches " << bad;
    o.need(bad == 0, "enumeration equals brute force");

    const double S = 16, e = 1e-4, x0 = 0.3;
    HalfTrajectory w = shoot_stable(mc, v1(x0), S);
    auto W = solve_tangent_lift(mc, w, build_tangent_system(2), {v1(1), v1(1), v1(0)});
    auto at = [&](double x) { return shoot_stable(mc, v1(x), S).head; };
    double d1 = sup_abs((1 / (2 * e)) * (at(x0 + e) - at(x0 - e)) - W[1]);
    double d2 = sup_abs((1 / (e * e)) * (at(x0 + e) - 2.0 * w.head + at(x0 - e)) - W[3]);
    o.detail << "; lift vs FD m=1 " << d1 << ", m=2 " << d2;
    o.need(d1 <= 1e-5, "m=1 lift matches FD to 1e-5");
    o.need(d2 <= 1e-3, "m=2 lift matches FD to 1e-3");

    double rate = 1e300;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (Side side : {Side::stable, Side::unstable}) {
      HalfTrajectory b = side == Side::stable ? shoot_stable(mc, v1(0.2), 20) : shoot_unstable(mc, v1(0.2), 20);
      auto L = solve_tangent_lift(mc, b, build_tangent_system(2), {v1(u(rng)), v1(u(rng)), v1(u(rng))});
      for (int q = 1; q < 4; ++q) {
        if (sup_abs(L[q]) < 1e-13) continue;
        DecayFit f = decay_fit(L[q], 2, 18, side == Side::unstable);
        rate = std::min(rate, f.r2 >= 0.99 ? f.rate : 0.0);
      }
    }
    o.detail << ", worst lift decay rate " << rate;
    o.need(rate >= 0.9 * sigma, "lift decay rate >= 0.9 sigma");

    GlueSettings s = settings(false);
    LinearTheory lt(mc, 3, 0.02, C1.k);
    NPProblem p = glue_problem(lt);
    HalfTrajectory wp = shoot_stable(mc, v1(0.01), head_length(s, 3)), wm = shoot_unstable(mc, v1(-0.01), head_length(s, 3));
    Vec x1 = preglue(mc, beta, wp, wm, 3, lt.grid()).flat();
    auto Tp = solve_tangent_lift(mc, wp, build_tangent_system(1), {v1(0.01)});
    auto Tm = solve_tangent_lift(mc, wm, build_tangent_system(1), {v1(0.01)});
    Vec xi1 = preglue_paths(beta, Tp[1], Tm[1], 3, lt.grid()).flat();
    NPOptions no;
    no.enforce_preconditions = false;
    double base = p.norm_x(np_tangent_solve(p, x1, xi1, no).x - np_solve(p, x1, no).x);
    o.detail << ", tangent base gap " << base;
    o.need(base <= 1e-10, "tangent base equals plain solve");
    for (int m = 0; m <= 2; ++m) {
      std::vector<Vec> sp(static_cast<std::size_t>((1 << m) - 1), v1(0.01));
      TangentSweepTable t = tangent_convergence_sweep(mc, C1.k, beta, v1(0.01), v1(-0.01), sp, sp, {3}, m, s);
      o.detail << ", |dT^" << m << "N(0)| " << t.dN0_norm << "/" << t.dN0_bound;
      o.need(t.dN0_norm <= t.dN0_bound * (1 + 5 * 0.02), "m=" + std::to_string(m) + " differential bound");
    }
  });

  run(10, "determinism of verify", [&](Outcome& o) {
    for (const char* name : {"e1", "c1"}) {
      ExperimentConfig cfg = load_experiment(src / "configs" / (std::string(name) + ".cfg"));
      std::string reports[2];
      int codes[2];
      for (int q = 0; q < 2; ++q) {
        cfg.out = fs::temp_directory_path() / ("mglue_acceptance_" + std::string(name) + std::to_string(q));
        std::ostringstream log;
        codes[q] = cmd_verify(cfg, log);
        reports[q] = read_text(cfg.out / "verify_report.txt");
      }
      o.detail << " " << name << " exit " << codes[0] << "/" << codes[1] << "; ";
      o.need(codes[0] == exit_ok && codes[1] == exit_ok, std::string(name) + " exit 0");
      o.need(reports[0] == reports[1], std::string(name) + " byte-identical reports");
    }
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
