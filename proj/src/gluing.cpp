#include "mglue/gluing.hpp"

#include "mglue/combinatorics.hpp"
#include "mglue/flow_operator.hpp"
#include "mglue/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace mglue {

namespace {

bool aligned(const Grid& a, const Grid& b) {
  return std::abs(a.spacing() - b.spacing()) <= 1e-12 * a.spacing();
}

// Value of a half-trajectory head at node index `idx` when the grids are
// index-aligned, cubic interpolation inside the head otherwise, and `beyond`
// outside it.
using Lookup = std::function<Eigen::VectorXd(int idx, double t)>;

Lookup head_lookup(const DiscretePath& head, const Grid& glue_grid, int offset,
                   const std::function<Eigen::VectorXd(double)>& beyond) {
  const bool same = aligned(head.grid(), glue_grid);
  return [&head, same, offset, beyond](int j, double t) -> Eigen::VectorXd {
    const Grid& g = head.grid();
    int idx = j + offset;
    if (same && idx >= 0 && idx < g.size() && std::abs(g.node(idx) - t) <= 1e-9 * g.spacing() + 1e-12)
      return head.samples().col(idx);
    if (t >= g.t_min() - 1e-12 && t <= g.t_max() + 1e-12) return sample_cubic(head, std::clamp(t, g.t_min(), g.t_max()));
    return beyond(t);
  };
}

DiscretePath preglue_impl(const Cutoff& beta, int dim, double T, const Grid& grid, const Lookup& plus,
                          const Lookup& minus) {
  if (std::abs(grid.t_min() + T) > 1e-9 || std::abs(grid.t_max() - T) > 1e-9)
    throw GridError("pre-gluing grid must be [-T, T]");
  DiscretePath out = DiscretePath::zero(grid, dim);
  for (int j = 0; j < grid.size(); ++j) {
    const double s = grid.node(j);
    const double a = 1.0 - beta(s + 2), b = beta(s - 2);
    // Zero factors are skipped so the ends reproduce w± bit for bit.
    if (a != 0) out.samples().col(j) = a == 1.0 ? plus(j, T + s) : Eigen::VectorXd(a * plus(j, T + s));
    if (b != 0) {
      Eigen::VectorXd v = minus(j, s - T);
      if (b == 1.0) out.samples().col(j) += v;
      else out.samples().col(j) += b * v;
    }
  }
  return out;
}

std::function<Eigen::VectorXd(double)> no_tail(const char* which) {
  return [which](double t) -> Eigen::VectorXd {
    std::ostringstream os;
    os << which << " head does not cover t = " << t << "; increase S";
    throw GridError(os.str());
  };
}

double l2_pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::sqrt(a.squaredNorm() + b.squaredNorm());
}

// Smooth random path on the grid: a few cosine modes and a Gaussian bump.
DiscretePath random_path(const Grid& g, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0, 1);
  const double L = g.t_max() - g.t_min();
  std::vector<Eigen::VectorXd> coef(5, Eigen::VectorXd(n));
  std::vector<double> phase(4);
  for (auto& c : coef)
    for (int i = 0; i < n; ++i) c(i) = gauss(rng);
  for (auto& p : phase) p = 2 * M_PI * unif(rng);
  const double s0 = g.t_min() + L * unif(rng);
  return DiscretePath::sample(g, n, [&](double s) {
    Eigen::VectorXd v = coef[4] * std::exp(-2.0 * (s - s0) * (s - s0));
    for (int q = 0; q < 4; ++q) v += coef[q] * std::cos(q * M_PI * (s - g.t_min()) / L + phase[q]);
    return v;
  });
}

struct Shot {
  HalfTrajectory plus, minus;
};

Shot shoot_pair(const MorseModel& m, const Vec& x0, const Vec& y0, double S, double h, const ShootOptions& opt) {
  return {shoot_stable(m, x0, S, h, opt), shoot_unstable(m, y0, S, h, opt)};
}

GlueReport glue_with(const MorseModel& m, const Cutoff& beta, const Vec& x0, const Vec& y0, const LinearTheory& lt,
                     const GlueSettings& s) {
  const double h = lt.grid().spacing();
  Shot sh = shoot_pair(m, x0, y0, head_length(s, lt.T()), h, s.shoot);
  GlueReport r = glue(m, beta, sh.plus, sh.minus, lt, s);
  r.x0_seed = x0;
  r.y0_seed = y0;
  return r;
}

std::optional<DecayFit> maybe_fit(const std::vector<double>& x, const std::vector<double>& y) {
  int live = 0;
  for (double v : y)
    if (v > 1e-14 && std::isfinite(v)) ++live;
  if (live < 2) return std::nullopt;
  return fit_exponential(x, y);
}

}  // namespace

double head_length(const GlueSettings& s, double T_max) { return s.S > 0 ? s.S : 2 * T_max + 6; }

double snap_T(double T, double h) {
  double k = std::round(T / h);
  if (std::abs(k * h - T) <= 1e-9 * h) return k * h;
  return std::ceil(T / h) * h;
}

CellField apply_F(const MorseModel& m, const DiscretePath& w) {
  return FlowOperator(m, w.grid().spacing()).apply(w);
}

DiscretePath apply_F_nodal(const MorseModel& m, const DiscretePath& w) {
  DiscretePath out = differentiate(w);
  for (int j = 0; j < w.grid().size(); ++j) out.samples().col(j) += m.grad(Eigen::VectorXd(w.samples().col(j)));
  return out;
}

DiscretePath preglue_paths(const Cutoff& beta, const DiscretePath& plus, const DiscretePath& minus, double T,
                           const Grid& grid) {
  // s = −T + jh: w₊ at T + s sits at node j of [0, S]; w₋ at s − T sits
  // at node j − (N − 1) + (M − 1) of [−S, 0].
  const int off_minus = minus.grid().size() - grid.size();
  return preglue_impl(beta, plus.dim(), T, grid, head_lookup(plus, grid, 0, no_tail("stable")),
                      head_lookup(minus, grid, off_minus, no_tail("unstable")));
}

DiscretePath preglue(const MorseModel& m, const Cutoff& beta, const HalfTrajectory& wp, const HalfTrajectory& wm,
                     double T, const Grid& grid) {
  if (wp.side != Side::stable || wm.side != Side::unstable) throw GridError("pre-gluing needs (stable, unstable) halves");
  const int off_minus = wm.head.grid().size() - grid.size();
  return preglue_impl(beta, m.dim(), T, grid,
                      head_lookup(wp.head, grid, 0, [&wp](double t) { return wp.at(t); }),
                      head_lookup(wm.head, grid, off_minus, [&wm](double t) { return wm.at(t); }));
}

ApproxZeroTable certify_approx_zero(const MorseModel& m, const Cutoff& beta, const HalfTrajectory& wp,
                                    const HalfTrajectory& wm, const std::vector<double>& T_list, double h,
                                    Execution ex) {
  ApproxZeroTable tab;
  tab.rows.resize(T_list.size());
  for_each_index(T_list.size(), ex, [&](std::size_t i) {
    const double T = T_list[i];
    Grid g = Grid::symmetric(T, h);
    CellField F = apply_F(m, preglue(m, beta, wp, wm, T, g));
    const double tol = 1e-9;
    double outside = 0;
    for (int c = 0; c < g.cells(); ++c) {
      double a = g.node(c), b = g.node(c + 1);
      bool away = b <= -3 + tol || (a >= -1 - tol && b <= 1 + tol) || a >= 3 - tol;
      if (away) outside = std::max(outside, F.values().col(c).norm());
    }
    tab.rows[i] = {T, F.l2(), outside};
  });
  std::vector<double> x, y;
  for (const auto& r : tab.rows) {
    x.push_back(r.T);
    y.push_back(r.residual);
  }
  tab.fit = maybe_fit(x, y);
  return tab;
}

NPProblem glue_problem(const LinearTheory& lt) {
  const LinearTheory* L = &lt;
  const Grid g = lt.grid();
  const int n = lt.model().dim();
  NPProblem p;
  p.max_order = 3;
  p.y_dim = n * g.cells();
  p.derivative = [L, g, n](const Vec& x, std::span<const Vec> dirs) -> Vec {
    DiscretePath w = DiscretePath::from_flat(g, n, x);
    std::vector<DiscretePath> ds;
    ds.reserve(dirs.size());
    for (const auto& d : dirs) ds.push_back(DiscretePath::from_flat(g, n, d));
    std::vector<const DiscretePath*> ptrs;
    for (const auto& d : ds) ptrs.push_back(&d);
    return L->flow().derivative(w, ptrs).flat();
  };
  p.D = [L, g, n](const Vec& v) -> Vec { return L->flow().linear(DiscretePath::from_flat(g, n, v)).flat(); };
  p.Q = [L, g, n](const Vec& v) -> Vec { return L->flow().right_inverse(CellField::from_flat(g, n, v)).flat(); };
  p.norm_x = [g, n](const Vec& v) { return w12_norm(DiscretePath::from_flat(g, n, v)); };
  p.norm_y = [g, n](const Vec& v) { return CellField::from_flat(g, n, v).l2(); };
  p.sample_x = [g, n](std::mt19937_64& rng) -> Vec { return random_path(g, n, rng).flat(); };
  p.x0 = Vec::Zero(n * g.size());
  p.c = lt.constants().c_rightinv;
  p.delta = lt.constants().delta_4;
  return p;
}

GlueReport glue(const MorseModel& m, const Cutoff& beta, const HalfTrajectory& wp, const HalfTrajectory& wm,
                const LinearTheory& lt, const GlueSettings& s) {
  const ModelConstants& k = lt.constants();
  const double T = lt.T();
  const Grid& g = lt.grid();
  GlueReport r;
  r.T = T;
  r.x0_seed = wp.seed;
  r.y0_seed = wm.seed;
  r.preglued = preglue(m, beta, wp, wm, T, g);
  r.preglue_residual = apply_F(m, r.preglued).l2();
  r.preglue_norm = w12_norm(r.preglued);
  r.bound_residual = k.delta_4 / (4 * k.c_rightinv);
  r.bound_distance = k.delta_4 / 8;
  r.bound_2cF = 2 * k.c_rightinv * r.preglue_residual;
  r.T0 = k.T0;

  std::ostringstream note;
  if (!(r.preglue_residual < r.bound_residual))
    note << "residual " << r.preglue_residual << " >= delta/(4c) = " << r.bound_residual << "; ";
  if (!(r.preglue_norm < r.bound_distance))
    note << "distance " << r.preglue_norm << " >= delta/8 = " << r.bound_distance << "; ";
  if (T < k.T0 * (1 - 1e-12)) note << "T = " << T << " < T0 = " << k.T0 << "; ";
  r.precondition_note = note.str();
  r.preconditions_met = r.precondition_note.empty();
  if (s.strict && !r.preconditions_met) throw PreconditionError("gluing precondition violated: " + r.precondition_note);

  NPProblem p = glue_problem(lt);
  NPOptions o = s.np;
  o.enforce_preconditions = false;  // checked above against the gluing bounds
  r.np = np_solve(p, r.preglued.flat(), o);
  r.glued = DiscretePath::from_flat(g, m.dim(), r.np.x);

  const int N = g.size(), ns = m.stable_dim(), n = m.dim();
  r.ev_error = l2_pair(r.glued.samples().col(0) - wp.start(), r.glued.samples().col(N - 1) - wm.start());
  r.flow_residual_sup = apply_F(m, r.glued).sup();
  DiscretePath diff = r.glued - r.preglued;
  double bd = 0;
  if (ns > 0) bd = std::max(bd, diff.samples().col(0).head(ns).norm());
  if (ns < n) bd = std::max(bd, diff.samples().col(N - 1).tail(n - ns).norm());
  r.boundary_defect = bd;
  return r;
}

GlueReport glue_seeds(const MorseModel& m, const ModelConstants& k, const Cutoff& beta, const Vec& x0,
                      const Vec& y0, double T, const GlueSettings& s) {
  LinearTheory lt(m, T, s.h, k);
  return glue_with(m, beta, x0, y0, lt, s);
}

double reintegration_defect(const MorseModel& m, const DiscretePath& path, double window) {
  const Grid& g = path.grid();
  const double h = g.spacing();
  const int span = std::max(1, static_cast<int>(std::lround(window / h)));
  const int substeps = 4;
  const double dt = span * h / (span * substeps);
  const int stride = std::max(1, span / 4);
  auto rhs = [&m](const Eigen::VectorXd& z) -> Eigen::VectorXd { return -m.grad(z); };
  double worst = 0;
  for (int j = 0; j + span < g.size(); j += stride) {
    Eigen::VectorXd z = path.samples().col(j);
    for (int q = 0; q < span * substeps; ++q) {
      Eigen::VectorXd k1 = rhs(z), k2 = rhs(z + 0.5 * dt * k1), k3 = rhs(z + 0.5 * dt * k2), k4 = rhs(z + dt * k3);
      z += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    worst = std::max(worst, (z - path.samples().col(j + span)).norm());
  }
  return worst;
}

LinearizedGlueReport linearized_glue_check(const MorseModel& m, const ModelConstants& k, const Cutoff& beta,
                                           const LinearTheory& lt,
                                           const std::vector<std::pair<Vec, Vec>>& probes,
                                           const GlueSettings& s, double eps) {
  (void)k;
  LinearizedGlueReport rep;
  rep.per_probe.resize(probes.size());
  for_each_index(probes.size(), s.execution, [&](std::size_t i) {
    const auto& [xi0, eta0] = probes[i];
    GlueReport up = glue_with(m, beta, eps * xi0, eps * eta0, lt, s);
    GlueReport dn = glue_with(m, beta, -eps * xi0, -eps * eta0, lt, s);
    DiscretePath fd = (1.0 / (2 * eps)) * (up.glued - dn.glued);
    DiscretePath ref = lt.gamma_infinitesimal(xi0, eta0);
    rep.per_probe[i] = (fd - ref).samples().cwiseAbs().maxCoeff();
  });
  for (double d : rep.per_probe) rep.max_discrepancy = std::max(rep.max_discrepancy, d);
  return rep;
}

double estimate_decay_constant(const MorseModel& m, const ModelConstants& k, const Cutoff& beta, double box,
                               const std::vector<double>& T_list, const GlueSettings& s) {
  if (T_list.empty()) return 0;
  const double T_max = *std::max_element(T_list.begin(), T_list.end());
  const int ns = m.stable_dim(), nu = m.dim() - ns;
  const int side = 5;
  // Corner-to-corner grid of seeds: the first coordinate of each seed runs
  // over the 5 levels and the remaining ones follow it.
  std::vector<std::pair<Vec, Vec>> seeds;
  for (int a = 0; a < side; ++a)
    for (int b = 0; b < side; ++b) {
      double u = box * (-1 + 2.0 * a / (side - 1)), v = box * (-1 + 2.0 * b / (side - 1));
      seeds.emplace_back(Vec::Constant(ns, u), Vec::Constant(nu, v));
    }
  std::vector<double> best(seeds.size(), 0.0);
  for_each_index(seeds.size(), s.execution, [&](std::size_t i) {
    Shot sh = shoot_pair(m, seeds[i].first, seeds[i].second, head_length(s, T_max), s.h, s.shoot);
    for (double T : T_list) {
      Grid g = Grid::symmetric(T, s.h);
      double r = apply_F(m, preglue(m, beta, sh.plus, sh.minus, T, g)).l2();
      best[i] = std::max(best[i], r * std::exp(k.epsilon * T));
    }
  });
  return 1.2 * *std::max_element(best.begin(), best.end());
}

SweepTable convergence_sweep(const MorseModel& m, const ModelConstants& k, const Cutoff& beta, const Vec& x0,
                             const Vec& y0, const std::vector<double>& T_list, double C, const GlueSettings& s,
                             double slack) {
  SweepTable tab;
  tab.C = C;
  tab.rows.resize(T_list.size());
  for_each_index(T_list.size(), s.execution, [&](std::size_t i) {
    LinearTheory lt(m, T_list[i], s.h, k);
    GlueReport r = glue_with(m, beta, x0, y0, lt, s);
    SweepRow& row = tab.rows[i];
    row.T = r.T;
    row.preglue_resid = r.preglue_residual;
    row.np_iters = r.np.iterations;
    row.corr_norm = r.np.correction_norm;
    row.bound_2cF = r.bound_2cF;
    row.ev_error = r.ev_error;
    row.ev_bound = std::sqrt(2.0) * 4 * k.c_rightinv * C * std::exp(-k.epsilon * r.T);
    row.contraction = r.np.contraction_ratio_max;
    row.within_bound = row.ev_error <= (1 + slack) * row.ev_bound;
  });
  std::vector<double> T, ev, res;
  for (const auto& r : tab.rows) {
    T.push_back(r.T);
    ev.push_back(r.ev_error);
    res.push_back(r.preglue_resid);
  }
  tab.ev_fit = maybe_fit(T, ev);
  tab.residual_fit = maybe_fit(T, res);
  return tab;
}

TangentSweepTable tangent_convergence_sweep(const MorseModel& m, const ModelConstants& k, const Cutoff& beta,
                                            const Vec& x0, const Vec& y0, const std::vector<Vec>& seeds_plus,
                                            const std::vector<Vec>& seeds_minus,
                                            const std::vector<double>& T_list, int order,
                                            const GlueSettings& s) {
  if (order < 0 || order > 3) throw std::invalid_argument("tangent order must be 0..3");
  const int count = 1 << order;
  if (static_cast<int>(seeds_plus.size()) != count - 1 || static_cast<int>(seeds_minus.size()) != count - 1)
    throw std::invalid_argument("tangent sweep needs 2^m - 1 seeds per side");
  const TangentSystemSpec spec = build_tangent_system(order);
  TangentSweepTable tab;
  tab.order = order;
  tab.rows.resize(T_list.size());
  tab.dN0_bound = std::pow(k.d_proj, count);
  std::vector<double> dN0(T_list.size(), 0.0);

  for_each_index(T_list.size(), s.execution, [&](std::size_t i) {
    LinearTheory lt(m, T_list[i], s.h, k);
    const Grid& g = lt.grid();
    const int n = m.dim(), N = g.size();
    Shot sh = shoot_pair(m, x0, y0, head_length(s, lt.T()), g.spacing(), s.shoot);
    std::vector<DiscretePath> Wp = solve_tangent_lift(m, sh.plus, spec, seeds_plus);
    std::vector<DiscretePath> Wm = solve_tangent_lift(m, sh.minus, spec, seeds_minus);

    Vec X1(count * n * N);
    double resid = 0;
    for (int q = 0; q < count; ++q) {
      DiscretePath comp = q == 0 ? preglue(m, beta, sh.plus, sh.minus, lt.T(), g)
                                 : preglue_paths(beta, Wp[q], Wm[q], lt.T(), g);
      X1.segment(static_cast<Eigen::Index>(q) * n * N, n * N) = comp.flat();
      if (q == 0) resid = apply_F(m, comp).l2();
    }

    NPProblem p = glue_problem(lt);
    for (int level = 0; level < order; ++level) {
      double c2 = estimate_second_derivative(p, 4, 4, 17 + level);
      double dhat = c2 > 0 ? std::min(p.delta, 1.0 / (4 * p.c * c2)) : p.delta;
      p = tangent_problem(p, dhat / p.delta);
    }
    NPOptions o = s.np;
    o.enforce_preconditions = false;
    NPResult r = np_solve(p, X1, o);

    double err2 = 0;
    for (int q = 0; q < count; ++q) {
      DiscretePath comp = DiscretePath::from_flat(g, n, r.x.segment(static_cast<Eigen::Index>(q) * n * N, n * N));
      err2 += (comp.samples().col(0) - Wp[q].samples().col(0)).squaredNorm();
      err2 += (comp.samples().col(N - 1) - Wm[q].samples().col(Wm[q].grid().size() - 1)).squaredNorm();
    }
    tab.rows[i] = {lt.T(), std::sqrt(err2), r.iterations, resid};

    if (i == 0) {
      std::mt19937_64 rng = task_rng(29, order);
      dN0[i] = probe_operator_norm([&](const Vec& v) { return np_differential(p, p.x0, v); }, p.sample_x, p.norm_x,
                                   p.norm_x, 6, 6, rng);
    }
  });
  tab.dN0_norm = dN0.empty() ? 0 : dN0[0];
  std::vector<double> T, ev;
  for (const auto& r : tab.rows) {
    T.push_back(r.T);
    ev.push_back(r.ev_error);
  }
  tab.fit = maybe_fit(T, ev);
  return tab;
}

double certificate_radius(const ModelConstants& k, const Cutoff& beta) {
  const double b = beta.sup_derivative();
  return std::min(k.delta_4 / 8, k.delta_big) / (2 * std::sqrt(1 + b * b));
}

namespace {

// Seed whose half trajectory has the given asymptotic coefficient, by chord
// iteration with the identity as the approximate derivative.
HalfTrajectory chart_inverse(const MorseModel& m, Side side, const Vec& coef, double S, double h,
                             const ShootOptions& opt) {
  Vec seed = coef;
  for (int it = 0; it < 60; ++it) {
    HalfTrajectory w = side == Side::stable ? shoot_stable(m, seed, S, h, opt) : shoot_unstable(m, seed, S, h, opt);
    Vec kappa = asymptotic_coefficient(m, side, w.head);
    Vec err = kappa - coef;
    if (err.norm() <= 1e-13 * std::max(1.0, coef.norm())) return w;
    seed -= err;
  }
  throw SolverError("chart inversion did not converge");
}

// θ⁻¹: tangent lift along `base` whose asymptotic coefficient is v.
DiscretePath theta_inverse(const MorseModel& m, const HalfTrajectory& base, const Vec& v) {
  const TangentSystemSpec spec = build_tangent_system(1);
  const int r = static_cast<int>(v.size());
  Eigen::MatrixXd M(r, r);
  std::vector<DiscretePath> unit;
  for (int j = 0; j < r; ++j) {
    Vec e = Vec::Unit(r, j);
    auto W = solve_tangent_lift(m, base, spec, {e});
    M.col(j) = asymptotic_coefficient(m, base.side, W[1]);
    unit.push_back(W[1]);
  }
  Vec seed = M.partialPivLu().solve(v);
  DiscretePath out = DiscretePath::zero(base.head.grid(), m.dim());
  for (int j = 0; j < r; ++j) out += seed(j) * unit[j];
  return out;
}

DiscretePath linear_half(const MorseModel& m, const Grid& g, Side side, const Vec& v) {
  const auto& a = m.eigenvalues();
  const int ns = m.stable_dim(), n = m.dim();
  return DiscretePath::sample(g, n, [&](double t) {
    Vec z = Vec::Zero(n);
    if (side == Side::stable)
      for (int i = 0; i < ns; ++i) z(i) = std::exp(-a(i) * t) * v(i);
    else
      for (int i = ns; i < n; ++i) z(i) = std::exp(-a(i) * t) * v(i - ns);
    return z;
  });
}

}  // namespace

DiffeoCertificate diffeo_criterion(const MorseModel& m, const ModelConstants& k, const Cutoff& beta,
                                   const LinearTheory& lt, int sample_count, const GlueSettings& s,
                                   std::uint64_t seed) {
  DiffeoCertificate cert;
  cert.T = lt.T();
  cert.delta_prime = certificate_radius(k, beta);
  cert.k = k.k_gamma_inv;
  cert.theta_bound = 1.0 / (8 * k.k_gamma_inv * k.d_proj);
  const int n = m.dim(), ns = m.stable_dim();
  const auto& a = m.eigenvalues();
  const double T = lt.T(), h = lt.grid().spacing(), S = head_length(s, T);
  const int N = lt.grid().size();

  // Whitening: chart coordinates carry the half-line weights, the target the
  // finite-interval weights of the kernel.
  Vec wE(n), wT(n);
  for (int i = 0; i < n; ++i) {
    wE(i) = std::sqrt(half_line_weight(a(i)));
    wT(i) = std::sqrt(finite_weight(a(i), T));
  }
  GlueSettings strict = s;
  strict.strict = true;

  auto halves = [&](const Vec& u) {
    Vec c = u.cwiseQuotient(wE);
    HalfTrajectory wp = chart_inverse(m, Side::stable, c.head(ns), S, h, s.shoot);
    HalfTrajectory wm = chart_inverse(m, Side::unstable, c.tail(n - ns), S, h, s.shoot);
    return std::make_pair(std::move(wp), std::move(wm));
  };
  auto G = [&](const Vec& u) -> Vec {
    auto [wp, wm] = halves(u);
    GlueReport r = glue(m, beta, wp, wm, lt, strict);
    Vec out(n);
    out.head(ns) = r.glued.samples().col(0).head(ns);
    out.tail(n - ns) = r.glued.samples().col(N - 1).tail(n - ns);
    return out.cwiseProduct(wT);
  };

  try {
    cert.ift = ift_certificate(G, n, cert.delta_prime, cert.k, sample_count, seed);
  } catch (const std::exception& e) {
    cert.failure = e.what();
    return cert;
  }

  // Θ_T on the whitened basis at a few base points of the seed neighbourhood.
  std::mt19937_64 rng = task_rng(seed, 1);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0, 1);
  const Eigen::MatrixXd gram = w12_gram(lt.grid());
  try {
    for (int b = 0; b < 4; ++b) {
      Vec u = Vec::Zero(n);
      if (b > 0) {
        for (int i = 0; i < n; ++i) u(i) = gauss(rng);
        u *= cert.delta_prime * std::pow(unif(rng), 1.0 / n) / u.norm();
      }
      auto [wp, wm] = halves(u);
      Eigen::MatrixXd cols(N * n, n);
      for (int j = 0; j < n; ++j) {
        Vec c = Vec::Unit(n, j).cwiseQuotient(wE);
        DiscretePath dp = linear_half(m, wp.head.grid(), Side::stable, c.head(ns));
        DiscretePath dm = linear_half(m, wm.head.grid(), Side::unstable, c.tail(n - ns));
        if (ns > 0) dp -= theta_inverse(m, wp, c.head(ns));
        if (ns < n) dm -= theta_inverse(m, wm, c.tail(n - ns));
        cols.col(j) = preglue_paths(beta, dp, dm, T, lt.grid()).flat();
      }
      // ‖Θ‖² = λ_max(Zᵀ G Z) with G the W^{1,2} Gram acting per component.
      Eigen::MatrixXd gz(N * n, n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          Vec comp(N);
          for (int q = 0; q < N; ++q) comp(q) = cols(q * n + i, j);
          Vec gc = gram * comp;
          for (int q = 0; q < N; ++q) gz(q * n + i, j) = gc(q);
        }
      Eigen::MatrixXd H = cols.transpose() * gz;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
      cert.theta_norm = std::max(cert.theta_norm, std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff())));
    }
  } catch (const std::exception& e) {
    cert.failure = e.what();
    return cert;
  }

  std::ostringstream why;
  if (!cert.ift.passed) why << "inverse function bounds not met; ";
  if (!(cert.theta_norm <= cert.theta_bound)) why << "theta norm " << cert.theta_norm << " > " << cert.theta_bound << "; ";
  cert.failure = why.str();
  cert.passed = cert.failure.empty();
  return cert;
}

double certified_seed_radius(const MorseModel& m, const ModelConstants& k, const Cutoff& beta,
                             const std::vector<double>& T_list, const GlueSettings& s, double r_max) {
  const int ns = m.stable_dim(), nu = m.dim() - ns;
  std::vector<double> Ts;
  for (double T : T_list) Ts.push_back(snap_T(T, s.h));
  auto ok = [&](double r) {
    for (int sx : {-1, 1})
      for (int sy : {-1, 1})
        for (double T : Ts) {
          try {
            LinearTheory lt(m, T, s.h, k);
            Shot sh = shoot_pair(m, Vec::Constant(ns, sx * r), Vec::Constant(nu, sy * r), head_length(s, T), lt.grid().spacing(), s.shoot);
            DiscretePath w = preglue(m, beta, sh.plus, sh.minus, T, lt.grid());
            if (!(apply_F(m, w).l2() < k.delta_4 / (4 * k.c_rightinv))) return false;
            if (!(w12_norm(w) < k.delta_4 / 8)) return false;
            if (T < k.T0 * (1 - 1e-12)) return false;
          } catch (const std::exception&) {
            return false;
          }
        }
    return true;
  };
  if (ok(r_max)) return r_max;
  double lo = 0, hi = r_max;
  for (int it = 0; it < 30; ++it) {
    double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace mglue
