#pragma once

#include "mglue/flow_operator.hpp"
#include "mglue/linalg.hpp"
#include "mglue/morse_model.hpp"
#include "mglue/path_space.hpp"

#include <functional>

namespace mglue {

// Coefficients of the kernel element (e^{−(s+T)A₊}v₊, e^{(s−T)A₋}v₋).
struct KernelElement {
  Eigen::VectorXd v_plus;
  Eigen::VectorXd v_minus;
};

struct LinearNorms {
  double T = 0;
  double norm_Pi = 0;
  double norm_Q = 0;
  double min_sv_D_on_K = 0;
  double gamma_opnorm = 0;   // discrete W-norm on [−T, T] over the same norm on a long half-line grid
  double gamma_minsv = 0;
};

// Linear analysis at the constant path 0 on [−T, T].  D is the cell
// discretization of ∂_s + A (see FlowOperator); Q is its exact inverse on the
// complement K (stable part 0 at −T, unstable part 0 at T).
class LinearTheory {
public:
  LinearTheory(const MorseModel& m, double T, double h_target, ModelConstants constants);

  const MorseModel& model() const { return *m_; }
  double T() const { return T_; }
  const Grid& grid() const { return grid_; }
  const ModelConstants& constants() const { return k_; }
  const FlowOperator& flow() const { return flow_; }

  CellField apply_D(const DiscretePath& zeta) const;
  // ∂_sζ + Aζ at the nodes with second-order differences; diagnostic only.
  DiscretePath apply_D_nodal(const DiscretePath& zeta) const;
  std::pair<KernelElement, DiscretePath> project_E(const DiscretePath& zeta) const;
  DiscretePath kernel_path(const KernelElement& e) const;
  DiscretePath apply_Q(const CellField& eta) const;
  // Nodal η is first averaged onto the cells (trapezoidal local integral).
  DiscretePath apply_Q(const DiscretePath& eta) const;
  CellField cells_from(const std::function<Eigen::VectorXd(double)>& f) const;
  bool in_complement(const DiscretePath& zeta, double tol = 0.0) const;

  DiscretePath gamma_infinitesimal(const Eigen::VectorXd& xi0, const Eigen::VectorXd& eta0) const;
  // Singular values of Γ_T in the exact weighted coefficient inner products.
  SingularRange gamma_svd_bounds() const;

  // Measured (discrete) operator norms, exact per component.
  LinearNorms measured_norms() const;

private:
  const MorseModel* m_;
  double T_;
  Grid grid_;
  ModelConstants k_;
  FlowOperator flow_;
};

// Half-line weights: ‖e^{−s|a|}‖²_{W^{1,2}} over [0, ∞) and over [0, 2T].
double half_line_weight(double a);
double finite_weight(double a, double T);

DiscretePath euclidean_gluing_reference(const MorseModel& m, const Eigen::VectorXd& w_plus_0,
                                        const Eigen::VectorXd& w_minus_0, double T, const Grid& grid);

}  // namespace mglue
