#include "mglue/linear_theory.hpp"

#include <cmath>
#include <stdexcept>

namespace mglue {

LinearTheory::LinearTheory(const MorseModel& m, double T, double h_target, ModelConstants constants)
    : m_(&m), T_(T), grid_(Grid::symmetric(T, h_target)), k_(constants), flow_(m, grid_.spacing()) {
  if (T < 1) throw GridError("linear theory needs T >= 1");
  for (double s : {-T, -1.0, 1.0, T})
    if (!grid_.resolves(s)) throw GridError("grid does not resolve the cutoff breakpoints");
  if (T >= 3 && !(grid_.resolves(-3.0) && grid_.resolves(3.0)))
    throw GridError("grid does not resolve +-3");
}

CellField LinearTheory::apply_D(const DiscretePath& zeta) const {
  if (!(zeta.grid() == grid_)) throw GridError("path is not on the linear-theory grid");
  return flow_.linear(zeta);
}

DiscretePath LinearTheory::apply_D_nodal(const DiscretePath& zeta) const {
  if (!(zeta.grid() == grid_)) throw GridError("path is not on the linear-theory grid");
  DiscretePath d = differentiate(zeta);
  d.samples() += m_->eigenvalues().asDiagonal() * zeta.samples();
  return d;
}

std::pair<KernelElement, DiscretePath> LinearTheory::project_E(const DiscretePath& zeta) const {
  if (!(zeta.grid() == grid_)) throw GridError("path is not on the linear-theory grid");
  const int ns = m_->stable_dim(), n = m_->dim();
  KernelElement e{zeta.samples().col(0).head(ns), zeta.samples().col(grid_.size() - 1).tail(n - ns)};
  DiscretePath rest = zeta - kernel_path(e);
  // Exact zeros at the boundary, independent of rounding in the exponentials.
  rest.samples().col(0).head(ns).setZero();
  rest.samples().col(grid_.size() - 1).tail(n - ns).setZero();
  return {e, rest};
}

DiscretePath LinearTheory::kernel_path(const KernelElement& e) const {
  const int ns = m_->stable_dim(), n = m_->dim();
  if (e.v_plus.size() != ns || e.v_minus.size() != n - ns) throw std::invalid_argument("kernel coefficients have wrong sizes");
  const auto& a = m_->eigenvalues();
  Eigen::MatrixXd s(n, grid_.size());
  for (int j = 0; j < grid_.size(); ++j) {
    double t = grid_.node(j);
    for (int i = 0; i < ns; ++i) s(i, j) = std::exp(-(t + T_) * a(i)) * e.v_plus(i);
    for (int i = ns; i < n; ++i) s(i, j) = std::exp(-(t - T_) * a(i)) * e.v_minus(i - ns);
  }
  return DiscretePath(grid_, std::move(s));
}

DiscretePath LinearTheory::apply_Q(const CellField& eta) const {
  if (!(eta.grid() == grid_)) throw GridError("cell field is not on the linear-theory grid");
  return flow_.right_inverse(eta);
}

DiscretePath LinearTheory::apply_Q(const DiscretePath& eta) const {
  if (!(eta.grid() == grid_)) throw GridError("path is not on the linear-theory grid");
  Eigen::MatrixXd c(eta.dim(), grid_.cells());
  for (int j = 0; j < grid_.cells(); ++j) c.col(j) = 0.5 * (eta.samples().col(j) + eta.samples().col(j + 1));
  return apply_Q(CellField(grid_, std::move(c)));
}

CellField LinearTheory::cells_from(const std::function<Eigen::VectorXd(double)>& f) const {
  Eigen::MatrixXd c(m_->dim(), grid_.cells());
  for (int j = 0; j < grid_.cells(); ++j) c.col(j) = f(grid_.cell_mid(j));
  return CellField(grid_, std::move(c));
}

bool LinearTheory::in_complement(const DiscretePath& zeta, double tol) const {
  const int ns = m_->stable_dim(), n = m_->dim();
  return zeta.samples().col(0).head(ns).lpNorm<Eigen::Infinity>() <= tol &&
         zeta.samples().col(grid_.size() - 1).tail(n - ns).lpNorm<Eigen::Infinity>() <= tol;
}

DiscretePath LinearTheory::gamma_infinitesimal(const Eigen::VectorXd& xi0, const Eigen::VectorXd& eta0) const {
  if (T_ < 3) throw std::domain_error("infinitesimal gluing needs T >= 3");
  return kernel_path({xi0, eta0});
}

double half_line_weight(double a) { return (1 + a * a) / (2 * std::abs(a)); }

double finite_weight(double a, double T) {
  return (1 + a * a) * (-std::expm1(-4 * T * std::abs(a))) / (2 * std::abs(a));
}

SingularRange LinearTheory::gamma_svd_bounds() const {
  if (T_ < 3) throw std::domain_error("infinitesimal gluing needs T >= 3");
  SingularRange r{1e300, 0};
  for (double a : m_->eigenvalues()) {
    double s = std::sqrt(finite_weight(a, T_) / half_line_weight(a));
    r.min = std::min(r.min, s);
    r.max = std::max(r.max, s);
  }
  return r;
}

LinearNorms LinearTheory::measured_norms() const {
  const int n = m_->dim(), ns = m_->stable_dim(), N = grid_.size(), C = grid_.cells();
  const double h = grid_.spacing();
  const auto& a = m_->eigenvalues();
  Eigen::MatrixXd MW = w12_gram(grid_);
  Eigen::LLT<Eigen::MatrixXd> MWchol(MW);
  Eigen::MatrixXd hI = h * Eigen::MatrixXd::Identity(C, C);

  LinearNorms out;
  out.T = T_;
  out.min_sv_D_on_K = 1e300;
  out.gamma_minsv = 1e300;
  for (int i = 0; i < n; ++i) {
    const bool stable = i < ns;
    const int b = stable ? 0 : N - 1;
    const double e = flow_.decay()(i), g = flow_.gain()(i);

    // Π_i = k eᵦᵀ, so ‖Π_i‖ = ‖k‖_W · sup |ζ(b)| / ‖ζ‖_W = ‖k‖_W √(eᵦᵀ M⁻¹ eᵦ).
    Eigen::VectorXd k(N);
    for (int j = 0; j < N; ++j) k(j) = std::exp(-(grid_.node(j) - grid_.node(b)) * a(i));
    Eigen::VectorXd eb = Eigen::VectorXd::Unit(N, b);
    double knorm = std::sqrt(k.dot(MW * k));
    out.norm_Pi = std::max(out.norm_Pi, knorm * std::sqrt(eb.dot(MWchol.solve(eb))));

    // Same discrete norm on a half-line grid long enough for e^{−|a|t} to
    // underflow the sum, so the ratio is a restriction of one quadrature.
    Grid half = Grid::from_spacing(0.0, h, grid_.t_max() - grid_.t_min() + 40.0 / std::abs(a(i)));
    DiscretePath tail = DiscretePath::sample(half, 1, [&](double t) {
      return Eigen::VectorXd::Constant(1, std::exp(-std::abs(a(i)) * t));
    });
    double ratio = knorm / w12_norm(tail);
    out.gamma_opnorm = std::max(out.gamma_opnorm, ratio);
    out.gamma_minsv = std::min(out.gamma_minsv, ratio);

    // Dense Q_i: columns are responses to unit cell data.
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, C);
    for (int c = 0; c < C; ++c) {
      if (stable) {
        Q(c + 1, c) = g;
        for (int j = c + 2; j < N; ++j) Q(j, c) = e * Q(j - 1, c);
      } else {
        Q(c, c) = -g / e;
        for (int j = c - 1; j >= 0; --j) Q(j, c) = Q(j + 1, c) / e;
      }
    }
    out.norm_Q = std::max(out.norm_Q, weighted_singular_range(Q, hI, MW).max);

    // D_i restricted to K (boundary node removed).
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(C, N - 1);
    Eigen::MatrixXd MK(N - 1, N - 1);
    std::vector<int> keep;
    for (int j = 0; j < N; ++j)
      if (j != b) keep.push_back(j);
    for (int c = 0; c < C; ++c)
      for (int q = 0; q < N - 1; ++q) {
        int j = keep[q];
        if (j == c) D(c, q) = -e / g;
        if (j == c + 1) D(c, q) = 1 / g;
      }
    for (int p = 0; p < N - 1; ++p)
      for (int q = 0; q < N - 1; ++q) MK(p, q) = MW(keep[p], keep[q]);
    out.min_sv_D_on_K = std::min(out.min_sv_D_on_K, weighted_singular_range(D, MK, hI).min);
  }
  return out;
}

DiscretePath euclidean_gluing_reference(const MorseModel& m, const Eigen::VectorXd& w_plus_0,
                                        const Eigen::VectorXd& w_minus_0, double T, const Grid& grid) {
  if (!m.is_euclidean()) throw std::domain_error("the closed-form glued flow line needs a Euclidean model");
  const auto& a = m.eigenvalues();
  return DiscretePath::sample(grid, m.dim(), [&](double s) {
    Eigen::VectorXd v(m.dim());
    for (int i = 0; i < m.dim(); ++i)
      v(i) = std::exp(-(s + T) * a(i)) * w_plus_0(i) + std::exp((T - s) * a(i)) * w_minus_0(i);
    return v;
  });
}

}  // namespace mglue
