#include "mglue/invariant_manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mglue {

const char* to_string(Side s) { return s == Side::stable ? "stable" : "unstable"; }

namespace {

// Rows: stable components at the left node, then n rows per cell, then
// unstable components at the right node.  Unknowns are node-major.
Eigen::SparseMatrix<double> assemble(const FlowOperator& op, const Grid& g,
                                     const std::vector<Eigen::MatrixXd>& J) {
  const MorseModel& m = op.model();
  const int n = m.dim(), ns = m.stable_dim(), N = g.size();
  const auto& e = op.decay();
  const auto& gain = op.gain();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<size_t>(N) * n * (2 * n + 2));
  int row = 0;
  for (int i = 0; i < ns; ++i) t.emplace_back(row++, i, 1.0);
  for (int c = 0; c < N - 1; ++c) {
    for (int i = 0; i < n; ++i, ++row) {
      t.emplace_back(row, c * n + i, -e(i) / gain(i));
      t.emplace_back(row, (c + 1) * n + i, 1.0 / gain(i));
      if (J.empty()) continue;
      for (int k = 0; k < n; ++k) {
        if (J[c](i, k) != 0) t.emplace_back(row, c * n + k, 0.5 * J[c](i, k));
        if (J[c + 1](i, k) != 0) t.emplace_back(row, (c + 1) * n + k, 0.5 * J[c + 1](i, k));
      }
    }
  }
  for (int i = ns; i < n; ++i) t.emplace_back(row++, (N - 1) * n + i, 1.0);
  Eigen::SparseMatrix<double> A(N * n, N * n);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

// Boundary values for the given side and seed.
void boundary_values(const MorseModel& m, Side side, const Eigen::VectorXd& seed, Eigen::VectorXd& left,
                     Eigen::VectorXd& right) {
  const int ns = m.stable_dim(), nu = m.index();
  left = Eigen::VectorXd::Zero(ns);
  right = Eigen::VectorXd::Zero(nu);
  if (side == Side::stable) {
    if (seed.size() != ns) throw SolverError("stable seed must have dim - index entries");
    left = seed;
  } else {
    if (seed.size() != nu) throw SolverError("unstable seed must have index entries");
    right = seed;
  }
}

Eigen::VectorXd rhs_vector(const MorseModel& m, const Grid& g, const Eigen::VectorXd& left,
                           const Eigen::VectorXd& right, const Eigen::MatrixXd* cells) {
  const int n = m.dim(), N = g.size();
  Eigen::VectorXd r(N * n);
  int row = 0;
  for (int i = 0; i < left.size(); ++i) r(row++) = left(i);
  for (int c = 0; c < N - 1; ++c)
    for (int i = 0; i < n; ++i) r(row++) = cells ? (*cells)(i, c) : 0.0;
  for (int i = 0; i < right.size(); ++i) r(row++) = right(i);
  return r;
}

Eigen::VectorXd far_coefficient(const MorseModel& m, Side side, const DiscretePath& p) {
  const auto& a = m.eigenvalues();
  const int ns = m.stable_dim(), n = m.dim();
  const Grid& g = p.grid();
  if (side == Side::stable) {
    Eigen::VectorXd v(ns);
    for (int i = 0; i < ns; ++i) v(i) = std::exp(a(i) * g.t_max()) * p.samples()(i, g.size() - 1);
    return v;
  }
  Eigen::VectorXd v(n - ns);
  for (int i = ns; i < n; ++i) v(i - ns) = std::exp(a(i) * g.t_min()) * p.samples()(i, 0);
  return v;
}

}  // namespace

Eigen::VectorXd HalfTrajectory::at(double t) const {
  const Grid& g = head.grid();
  if (t >= g.t_min() - 1e-12 && t <= g.t_max() + 1e-12) return sample_cubic(head, std::clamp(t, g.t_min(), g.t_max()));
  if ((side == Side::stable && t < 0) || (side == Side::unstable && t > 0))
    throw GridError("half-trajectory evaluated on the wrong half-line");
  // Only the decaying block of tail_coeff is non-zero, so e^{−tA} stays bounded.
  Eigen::VectorXd out = tail_coeff;
  for (int i = 0; i < out.size(); ++i)
    if (out(i) != 0) out(i) *= std::exp(-t * eigenvalues(i));
  return out;
}

Eigen::VectorXd HalfTrajectory::start() const {
  return side == Side::stable ? head.samples().col(0) : head.samples().col(head.grid().size() - 1);
}

LinearBvp::LinearBvp(const FlowOperator& op, const Grid& grid, Side side, const std::vector<Eigen::MatrixXd>& J)
    : op_(&op), grid_(grid), side_(side) {
  if (!J.empty() && static_cast<int>(J.size()) != grid.size()) throw SolverError("nodal Jacobians do not match the grid");
  lu_.compute(assemble(op, grid, J));
  if (lu_.info() != Eigen::Success) throw SolverError("linearized boundary-value problem is singular");
}

DiscretePath LinearBvp::solve(const Eigen::MatrixXd& forcing, const Eigen::VectorXd& seed) const {
  const MorseModel& m = op_->model();
  Eigen::VectorXd left, right;
  boundary_values(m, side_, seed, left, right);
  Eigen::MatrixXd cells;
  const Eigen::MatrixXd* cp = nullptr;
  if (forcing.size()) {
    if (forcing.cols() != grid_.size()) throw SolverError("forcing does not match the grid");
    cells.resize(m.dim(), grid_.cells());
    for (int c = 0; c < grid_.cells(); ++c) cells.col(c) = -0.5 * (forcing.col(c) + forcing.col(c + 1));
    cp = &cells;
  }
  Eigen::VectorXd u = lu_.solve(rhs_vector(m, grid_, left, right, cp));
  return DiscretePath::from_flat(grid_, m.dim(), u);
}

DiscretePath LinearBvp::solve(const Eigen::VectorXd& seed) const { return solve(Eigen::MatrixXd(), seed); }

HalfTrajectory shoot(const MorseModel& m, Side side, const Eigen::VectorXd& seed, const Grid& grid,
                     const ShootOptions& opt) {
  const int n = m.dim(), ns = m.stable_dim(), N = grid.size();
  FlowOperator op(m, grid.spacing());
  Eigen::VectorXd left, right;
  boundary_values(m, side, seed, left, right);
  if (!seed.allFinite()) throw SolverError("seed is not finite");

  // Linear flow as the initial guess.
  const auto& a = m.eigenvalues();
  Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(n, N);
  for (int j = 0; j < N; ++j) {
    double s = grid.node(j);
    if (side == Side::stable)
      for (int i = 0; i < ns; ++i) w0(i, j) = std::exp(-a(i) * s) * left(i);
    else
      for (int i = ns; i < n; ++i) w0(i, j) = std::exp(-a(i) * s) * right(i - ns);
  }
  DiscretePath w(grid, std::move(w0));

  auto residual = [&](const DiscretePath& p) {
    CellField F = op.apply(p);
    Eigen::VectorXd r(N * n);
    int row = 0;
    for (int i = 0; i < ns; ++i) r(row++) = p.samples()(i, 0) - left(i);
    for (int c = 0; c < N - 1; ++c)
      for (int i = 0; i < n; ++i) r(row++) = F.values()(i, c);
    for (int i = ns; i < n; ++i) r(row++) = p.samples()(i, N - 1) - right(i - ns);
    return std::make_pair(r, F.sup());
  };

  auto [r, flow_res] = residual(w);
  double rnorm = r.lpNorm<Eigen::Infinity>();
  int it = 0;
  const double target = std::max(1e-4 * opt.tol_flow, 1e-14);
  std::vector<Eigen::MatrixXd> J(N, Eigen::MatrixXd(n, n));
  for (; it < opt.max_iter && rnorm > target; ++it) {
    for (int j = 0; j < N; ++j) m.nonlinear_jacobian(w.samples().col(j).data(), J[j].data());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(assemble(op, grid, m.is_euclidean() ? std::vector<Eigen::MatrixXd>{} : J));
    if (lu.info() != Eigen::Success) throw SolverError("collocation Jacobian is singular");
    Eigen::VectorXd step = lu.solve(-r);
    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k <= opt.max_halvings; ++k, lambda *= 0.5) {
      DiscretePath trial = DiscretePath::from_flat(grid, n, w.flat() + lambda * step);
      auto [rt, ft] = residual(trial);
      double tn = rt.lpNorm<Eigen::Infinity>();
      if (std::isfinite(tn) && tn < rnorm) {
        w = std::move(trial);
        r = std::move(rt);
        flow_res = ft;
        rnorm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // at the rounding floor, or stuck
  }
  if (!(flow_res <= opt.tol_flow) || !(rnorm <= opt.tol_flow))
    throw SolverError("boundary-value Newton did not converge (residual " + std::to_string(rnorm) +
                      "); seed outside the computable neighbourhood?");

  HalfTrajectory out{side, w, Eigen::VectorXd::Zero(n), seed, grid.t_max() - grid.t_min(), flow_res, it, m.eigenvalues()};
  Eigen::VectorXd coef = far_coefficient(m, side, w);
  if (side == Side::stable) {
    out.tail_coeff.head(ns) = coef;
    if (ns < n && w.samples().col(N - 1).tail(n - ns).norm() > opt.tol_tail + 1e-15)
      throw SolverError("unstable component at the far end does not vanish");
  } else {
    out.tail_coeff.tail(n - ns) = coef;
  }
  return out;
}

HalfTrajectory shoot_stable(const MorseModel& m, const Eigen::VectorXd& x0, double S, double h,
                            const ShootOptions& opt) {
  return shoot(m, Side::stable, x0, Grid::from_spacing(0.0, h, S), opt);
}

HalfTrajectory shoot_unstable(const MorseModel& m, const Eigen::VectorXd& y0, double S, double h,
                              const ShootOptions& opt) {
  Grid g = Grid::from_spacing(0.0, h, S);
  return shoot(m, Side::unstable, y0, Grid(-g.t_max(), 0.0, g.size()), opt);
}

Eigen::MatrixXd tangent_forcing(const MorseModel& m, const TangentComponent& comp, const std::vector<DiscretePath>& W) {
  const Grid& g = W.at(0).grid();
  const int n = m.dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, g.size());
  if (m.is_euclidean()) return out;
  Eigen::VectorXd tmp(n);
  std::vector<const double*> args;
  for (const auto& term : comp.terms) {
    if (term.order < 2) continue;
    args.resize(term.order);
    for (int j = 0; j < g.size(); ++j) {
      for (int q = 0; q < term.order; ++q) args[q] = W.at(term.args[q]).samples().col(j).data();
      m.dnonlin_apply(W[0].samples().col(j).data(), args, tmp.data());
      out.col(j) += tmp;
    }
  }
  return out;
}

std::vector<DiscretePath> solve_tangent_lift(const MorseModel& m, const HalfTrajectory& base,
                                             const TangentSystemSpec& spec,
                                             const std::vector<Eigen::VectorXd>& seeds) {
  const int count = 1 << spec.m;
  if (static_cast<int>(seeds.size()) != count - 1) throw SolverError("tangent lift needs one seed per component k >= 1");
  const Grid& g = base.head.grid();
  const int n = m.dim(), N = g.size();
  FlowOperator op(m, g.spacing());
  std::vector<Eigen::MatrixXd> J;
  if (!m.is_euclidean()) {
    J.assign(N, Eigen::MatrixXd(n, n));
    for (int j = 0; j < N; ++j) m.nonlinear_jacobian(base.head.samples().col(j).data(), J[j].data());
  }
  LinearBvp bvp(op, g, base.side, J);
  std::vector<DiscretePath> W;
  W.reserve(count);
  W.push_back(base.head);
  for (int k = 1; k < count; ++k) {
    const auto& comp = spec.components.at(k);
    Eigen::MatrixXd forcing = tangent_forcing(m, comp, W);
    W.push_back(bvp.solve(forcing, seeds[k - 1]));
  }
  return W;
}

Eigen::VectorXd asymptotic_coefficient(const MorseModel& m, Side side, const DiscretePath& xi) {
  return far_coefficient(m, side, xi);
}

Eigen::VectorXd theta_identification(const MorseModel& m, const HalfTrajectory& base, const DiscretePath& xi,
                                     double tol_lin) {
  if (!(xi.grid() == base.head.grid())) throw SolverError("tangent vector lives on a different grid");
  FlowOperator op(m, xi.grid().spacing());
  CellField r = op.jvp(base.head, xi);
  // Boundary rows of the linearized problem are free data; only the flow
  // equation is checked.
  double scale = std::max(1.0, norms(xi).sup);
  if (r.sup() > tol_lin * scale)
    throw SolverError("vector does not solve the linearized flow equation (residual " + std::to_string(r.sup()) + ")");
  return far_coefficient(m, base.side, xi);
}

DecayFit fit_exponential(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw SolverError("fit data sizes differ");
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size(); ++i)
    if (y[i] > 1e-14 && std::isfinite(y[i])) {
      lx.push_back(x[i]);
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) throw SolverError("decay fit window is empty after flooring");
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0) throw SolverError("decay fit window has a single abscissa");
  double slope = sxy / sxx;
  double icpt = my - slope * mx;
  double ssres = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    double d = ly[i] - (icpt + slope * lx[i]);
    ssres += d * d;
  }
  DecayFit f;
  f.rate = -slope;
  f.prefactor = std::exp(icpt);
  f.r2 = syy > 0 ? std::clamp(1.0 - ssres / syy, 0.0, 1.0) : 1.0;
  f.s_lo = lx.front();
  f.s_hi = lx.back();
  f.samples = static_cast<int>(lx.size());
  return f;
}

DecayFit decay_fit(const DiscretePath& p, double s_lo, double s_hi, bool backward) {
  DiscretePath dp = differentiate(p);
  const Grid& g = p.grid();
  std::vector<double> xs, ys;
  for (int j = 0; j < g.size(); ++j) {
    double x = backward ? -g.node(j) : g.node(j);
    if (x < s_lo - 1e-12 || x > s_hi + 1e-12) continue;
    xs.push_back(x);
    ys.push_back(p.samples().col(j).norm() + dp.samples().col(j).norm());
  }
  if (backward) {
    std::reverse(xs.begin(), xs.end());
    std::reverse(ys.begin(), ys.end());
  }
  DecayFit f = fit_exponential(xs, ys);
  f.s_lo = s_lo;
  f.s_hi = s_hi;
  return f;
}

DecayFit decay_fit(const HalfTrajectory& w, double s_lo, double s_hi) {
  return decay_fit(w.head, s_lo, s_hi, w.side == Side::unstable);
}

}  // namespace mglue
