#pragma once

#include "mglue/morse_model.hpp"
#include "mglue/parallel.hpp"
#include "mglue/path_space.hpp"

#include <span>

namespace mglue {

// Discretization of w ↦ ∂_s w + ∇f(w) on cells of a uniform grid.
//
// The linear part is exponentially fitted per component,
//   (Lw)_c = (w_{c+1} − e^{−ha} w_c) / (h φ(ha)),   φ(z) = (1 − e^{−z}) / z,
// so L annihilates exactly the samples of e^{−sA}v, and the nonlinear part
// N = ∇f − A is averaged over the two cell nodes.
class FlowOperator {
public:
  FlowOperator(const MorseModel& m, double h);

  const MorseModel& model() const { return *m_; }
  double spacing() const { return h_; }
  const Eigen::VectorXd& decay() const { return decay_; }
  const Eigen::VectorXd& gain() const { return gain_; }

  CellField linear(const DiscretePath& w) const;
  CellField apply(const DiscretePath& w, Execution ex = Execution::serial) const;
  CellField jvp(const DiscretePath& w, const DiscretePath& u) const;
  // d^ℓ F(w)[dirs...] with ℓ = dirs.size() ≤ 3; ℓ = 0 is F(w).
  CellField derivative(const DiscretePath& w, std::span<const DiscretePath* const> dirs) const;

  // Inverse of L on paths with stable components 0 at the left end and
  // unstable components 0 at the right end.
  DiscretePath right_inverse(const CellField& eta) const;

  // N(w_j) at every node.
  Eigen::MatrixXd nodal_nonlinearity(const DiscretePath& w, Execution ex = Execution::serial) const;

private:
  void check_grid(const Grid& g) const;
  CellField averaged(const Grid& g, const Eigen::MatrixXd& nodal) const;

  const MorseModel* m_;
  double h_;
  Eigen::VectorXd decay_, gain_;
};

double phi(double z);

}  // namespace mglue
