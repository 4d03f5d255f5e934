#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace mglue {

class GridError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Uniform grid on [t_min, t_max] with an odd node count, so the midpoint is
// always a node.
class Grid {
public:
  Grid(double t_min, double t_max, int n_nodes);

  // [-T, T] with spacing T / round(T / h_target).
  static Grid symmetric(double T, double h_target);
  // Starts at t_min, spacing exactly h, at least `length` long (cell count
  // rounded up to even).
  static Grid from_spacing(double t_min, double h, double length);

  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  int size() const { return n_; }
  int cells() const { return n_ - 1; }
  double spacing() const { return h_; }
  double node(int j) const;
  double cell_mid(int c) const { return 0.5 * (node(c) + node(c + 1)); }

  // Index of the node within rel_tol * h of t, if any.
  std::optional<int> node_index(double t, double rel_tol = 1e-6) const;
  // True if some node lies within h/2 of t (and t is inside the grid).
  bool resolves(double t) const;

  bool operator==(const Grid& o) const {
    return n_ == o.n_ && t_min_ == o.t_min_ && t_max_ == o.t_max_;
  }

private:
  double t_min_, t_max_, h_;
  int n_;
};

// Samples of a path R -> R^n at the grid nodes; column j is the value at node j.
class DiscretePath {
public:
  DiscretePath(Grid grid, Eigen::MatrixXd samples);
  static DiscretePath zero(const Grid& grid, int dim);
  static DiscretePath sample(const Grid& grid, int dim,
                             const std::function<Eigen::VectorXd(double)>& f);

  const Grid& grid() const { return grid_; }
  int dim() const { return static_cast<int>(samples_.rows()); }
  const Eigen::MatrixXd& samples() const { return samples_; }
  Eigen::MatrixXd& samples() { return samples_; }
  Eigen::VectorXd at_node(int j) const { return samples_.col(j); }

  // Node-major flattening: entry j*dim + i is component i at node j.
  Eigen::VectorXd flat() const;
  static DiscretePath from_flat(const Grid& grid, int dim, const Eigen::VectorXd& v);

  DiscretePath& operator+=(const DiscretePath& o);
  DiscretePath& operator-=(const DiscretePath& o);
  DiscretePath& operator*=(double a);

private:
  Grid grid_;
  Eigen::MatrixXd samples_;
};

DiscretePath operator+(DiscretePath a, const DiscretePath& b);
DiscretePath operator-(DiscretePath a, const DiscretePath& b);
DiscretePath operator*(double a, DiscretePath p);

// Values on the cells of a grid (one column per cell), the discrete target
// space of the flow operator.  Its L2 norm is the midpoint rule.
class CellField {
public:
  CellField(Grid grid, Eigen::MatrixXd values);
  static CellField zero(const Grid& grid, int dim);

  const Grid& grid() const { return grid_; }
  int dim() const { return static_cast<int>(values_.rows()); }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  Eigen::VectorXd flat() const;
  static CellField from_flat(const Grid& grid, int dim, const Eigen::VectorXd& v);

  double l2() const;
  double sup() const;

  CellField& operator+=(const CellField& o);
  CellField& operator-=(const CellField& o);
  CellField& operator*=(double a);

private:
  Grid grid_;
  Eigen::MatrixXd values_;
};

CellField operator+(CellField a, const CellField& b);
CellField operator-(CellField a, const CellField& b);
CellField operator*(double a, CellField p);

struct PathNorms {
  double l2 = 0;
  double w12 = 0;
  double sup = 0;
};

// Second-order finite differences: central inside, one-sided at the ends.
DiscretePath differentiate(const DiscretePath& p);
PathNorms norms(const DiscretePath& p);
double w12_norm(const DiscretePath& p);
std::pair<Eigen::VectorXd, Eigen::VectorXd> evaluate_ends(const DiscretePath& p);

// Cubic Lagrange interpolation through the four nearest nodes.
Eigen::VectorXd sample_cubic(const DiscretePath& p, double t);
DiscretePath resample(const DiscretePath& p, const Grid& target);

// Scalar-component matrices used to assemble dense operators.
Eigen::SparseMatrix<double> derivative_matrix(const Grid& g);
Eigen::VectorXd trapezoid_weights(const Grid& g);
// Gram matrix of the W^{1,2} inner product for one scalar component.
Eigen::MatrixXd w12_gram(const Grid& g);

}  // namespace mglue
