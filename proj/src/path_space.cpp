#include "mglue/path_space.hpp"

#include <algorithm>
#include <cmath>

namespace mglue {

Grid::Grid(double t_min, double t_max, int n_nodes) : t_min_(t_min), t_max_(t_max), n_(n_nodes) {
  if (!(t_min < t_max)) throw GridError("grid needs t_min < t_max");
  if (n_nodes < 9) throw GridError("grid needs at least 9 nodes");
  if (n_nodes % 2 == 0) throw GridError("grid node count must be odd");
  h_ = (t_max - t_min) / (n_nodes - 1);
}

Grid Grid::symmetric(double T, double h_target) {
  if (!(T > 0) || !(h_target > 0)) throw GridError("symmetric grid needs T > 0 and h > 0");
  int half = std::max(4, static_cast<int>(std::lround(T / h_target)));
  return Grid(-T, T, 2 * half + 1);
}

Grid Grid::from_spacing(double t_min, double h, double length) {
  if (!(h > 0) || !(length > 0)) throw GridError("grid needs h > 0 and length > 0");
  int cells = static_cast<int>(std::ceil(length / h - 1e-9));
  cells = std::max(cells, 8);
  if (cells % 2) ++cells;
  return Grid(t_min, t_min + cells * h, cells + 1);
}

double Grid::node(int j) const {
  if (j == n_ - 1) return t_max_;
  return t_min_ + j * h_;
}

std::optional<int> Grid::node_index(double t, double rel_tol) const {
  double x = (t - t_min_) / h_;
  long j = std::lround(x);
  if (j < 0 || j >= n_) return std::nullopt;
  if (std::abs(x - j) > rel_tol) return std::nullopt;
  return static_cast<int>(j);
}

bool Grid::resolves(double t) const {
  if (t < t_min_ - 0.5 * h_ || t > t_max_ + 0.5 * h_) return false;
  double x = (t - t_min_) / h_;
  return std::abs(x - std::round(x)) <= 0.5 + 1e-12;
}

DiscretePath::DiscretePath(Grid grid, Eigen::MatrixXd samples)
    : grid_(std::move(grid)), samples_(std::move(samples)) {
  if (samples_.cols() != grid_.size())
    throw GridError("path samples do not match the grid size");
  if (samples_.rows() < 1) throw GridError("path dimension must be positive");
}

DiscretePath DiscretePath::zero(const Grid& grid, int dim) {
  return DiscretePath(grid, Eigen::MatrixXd::Zero(dim, grid.size()));
}

DiscretePath DiscretePath::sample(const Grid& grid, int dim,
                                  const std::function<Eigen::VectorXd(double)>& f) {
  Eigen::MatrixXd s(dim, grid.size());
  for (int j = 0; j < grid.size(); ++j) s.col(j) = f(grid.node(j));
  return DiscretePath(grid, std::move(s));
}

Eigen::VectorXd DiscretePath::flat() const {
  return Eigen::Map<const Eigen::VectorXd>(samples_.data(), samples_.size());
}

DiscretePath DiscretePath::from_flat(const Grid& grid, int dim, const Eigen::VectorXd& v) {
  if (v.size() != static_cast<Eigen::Index>(dim) * grid.size())
    throw GridError("flat vector has the wrong length for this grid");
  return DiscretePath(grid, Eigen::Map<const Eigen::MatrixXd>(v.data(), dim, grid.size()));
}

DiscretePath& DiscretePath::operator+=(const DiscretePath& o) {
  if (!(grid_ == o.grid_) || dim() != o.dim()) throw GridError("path grids differ");
  samples_ += o.samples_;
  return *this;
}
DiscretePath& DiscretePath::operator-=(const DiscretePath& o) {
  if (!(grid_ == o.grid_) || dim() != o.dim()) throw GridError("path grids differ");
  samples_ -= o.samples_;
  return *this;
}
DiscretePath& DiscretePath::operator*=(double a) {
  samples_ *= a;
  return *this;
}
DiscretePath operator+(DiscretePath a, const DiscretePath& b) { return a += b; }
DiscretePath operator-(DiscretePath a, const DiscretePath& b) { return a -= b; }
DiscretePath operator*(double a, DiscretePath p) { return p *= a; }

CellField::CellField(Grid grid, Eigen::MatrixXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.cols() != grid_.cells()) throw GridError("cell values do not match the grid");
}

CellField CellField::zero(const Grid& grid, int dim) {
  return CellField(grid, Eigen::MatrixXd::Zero(dim, grid.cells()));
}

Eigen::VectorXd CellField::flat() const {
  return Eigen::Map<const Eigen::VectorXd>(values_.data(), values_.size());
}

CellField CellField::from_flat(const Grid& grid, int dim, const Eigen::VectorXd& v) {
  if (v.size() != static_cast<Eigen::Index>(dim) * grid.cells())
    throw GridError("flat vector has the wrong length for these cells");
  return CellField(grid, Eigen::Map<const Eigen::MatrixXd>(v.data(), dim, grid.cells()));
}

double CellField::l2() const { return std::sqrt(grid_.spacing() * values_.squaredNorm()); }

double CellField::sup() const {
  double s = 0;
  for (int c = 0; c < values_.cols(); ++c) s = std::max(s, values_.col(c).norm());
  return s;
}

CellField& CellField::operator+=(const CellField& o) {
  if (!(grid_ == o.grid_)) throw GridError("cell grids differ");
  values_ += o.values_;
  return *this;
}
CellField& CellField::operator-=(const CellField& o) {
  if (!(grid_ == o.grid_)) throw GridError("cell grids differ");
  values_ -= o.values_;
  return *this;
}
CellField& CellField::operator*=(double a) {
  values_ *= a;
  return *this;
}
CellField operator+(CellField a, const CellField& b) { return a += b; }
CellField operator-(CellField a, const CellField& b) { return a -= b; }
CellField operator*(double a, CellField p) { return p *= a; }

DiscretePath differentiate(const DiscretePath& p) {
  const auto& s = p.samples();
  const int n = p.grid().size();
  const double inv2h = 0.5 / p.grid().spacing();
  Eigen::MatrixXd d(s.rows(), n);
  d.col(0) = (-3.0 * s.col(0) + 4.0 * s.col(1) - s.col(2)) * inv2h;
  for (int j = 1; j < n - 1; ++j) d.col(j) = (s.col(j + 1) - s.col(j - 1)) * inv2h;
  d.col(n - 1) = (s.col(n - 3) - 4.0 * s.col(n - 2) + 3.0 * s.col(n - 1)) * inv2h;
  return DiscretePath(p.grid(), std::move(d));
}

namespace {
double trapezoid_sq(const Eigen::MatrixXd& s, double h) {
  double acc = 0;
  const int n = static_cast<int>(s.cols());
  for (int j = 0; j < n; ++j) {
    double w = (j == 0 || j == n - 1) ? 0.5 : 1.0;
    acc += w * s.col(j).squaredNorm();
  }
  return acc * h;
}
}  // namespace

PathNorms norms(const DiscretePath& p) {
  PathNorms r;
  const double h = p.grid().spacing();
  double l2sq = trapezoid_sq(p.samples(), h);
  double dsq = trapezoid_sq(differentiate(p).samples(), h);
  r.l2 = std::sqrt(l2sq);
  r.w12 = std::sqrt(l2sq + dsq);
  for (int j = 0; j < p.grid().size(); ++j) r.sup = std::max(r.sup, p.samples().col(j).norm());
  return r;
}

double w12_norm(const DiscretePath& p) { return norms(p).w12; }

std::pair<Eigen::VectorXd, Eigen::VectorXd> evaluate_ends(const DiscretePath& p) {
  return {p.samples().col(0), p.samples().col(p.grid().size() - 1)};
}

Eigen::VectorXd sample_cubic(const DiscretePath& p, double t) {
  const Grid& g = p.grid();
  const double tol = 1e-9 * g.spacing();
  if (t < g.t_min() - tol || t > g.t_max() + tol)
    throw GridError("cubic interpolation would extrapolate outside the grid");
  if (auto j = g.node_index(t, 1e-12)) return p.samples().col(*j);
  double x = (t - g.t_min()) / g.spacing();
  int j0 = static_cast<int>(std::floor(x)) - 1;
  j0 = std::clamp(j0, 0, g.size() - 4);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p.dim());
  for (int a = 0; a < 4; ++a) {
    double w = 1;
    for (int b = 0; b < 4; ++b)
      if (b != a) w *= (x - (j0 + b)) / static_cast<double>(a - b);
    out += w * p.samples().col(j0 + a);
  }
  return out;
}

DiscretePath resample(const DiscretePath& p, const Grid& target) {
  if (target == p.grid()) return p;
  Eigen::MatrixXd s(p.dim(), target.size());
  for (int j = 0; j < target.size(); ++j) s.col(j) = sample_cubic(p, target.node(j));
  return DiscretePath(target, std::move(s));
}

Eigen::SparseMatrix<double> derivative_matrix(const Grid& g) {
  const int n = g.size();
  const double c = 0.5 / g.spacing();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(3 * n);
  t.emplace_back(0, 0, -3 * c);
  t.emplace_back(0, 1, 4 * c);
  t.emplace_back(0, 2, -c);
  for (int j = 1; j < n - 1; ++j) {
    t.emplace_back(j, j - 1, -c);
    t.emplace_back(j, j + 1, c);
  }
  t.emplace_back(n - 1, n - 3, c);
  t.emplace_back(n - 1, n - 2, -4 * c);
  t.emplace_back(n - 1, n - 1, 3 * c);
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::VectorXd trapezoid_weights(const Grid& g) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(g.size(), g.spacing());
  w(0) *= 0.5;
  w(g.size() - 1) *= 0.5;
  return w;
}

Eigen::MatrixXd w12_gram(const Grid& g) {
  Eigen::VectorXd w = trapezoid_weights(g);
  Eigen::MatrixXd G = Eigen::MatrixXd(derivative_matrix(g));
  Eigen::MatrixXd m = G.transpose() * w.asDiagonal() * G;
  m.diagonal() += w;
  return m;
}

}  // namespace mglue
