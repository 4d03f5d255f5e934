#pragma once

#include "mglue/combinatorics.hpp"
#include "mglue/flow_operator.hpp"
#include "mglue/morse_model.hpp"
#include "mglue/path_space.hpp"

#include <Eigen/SparseLU>

#include <stdexcept>
#include <vector>

namespace mglue {

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Side { stable, unstable };
const char* to_string(Side s);

struct ShootOptions {
  double tol_flow = 1e-9;
  double tol_tail = 1e-12;
  int max_iter = 50;
  int max_halvings = 20;
};

// A flow line on [0, S] converging to 0 (stable side) or on [−S, 0] emanating
// from 0 (unstable side).  Beyond the head the path is continued by the
// linear flow, w(t) = e^{−tA} tail_coeff.
struct HalfTrajectory {
  Side side;
  DiscretePath head;
  Eigen::VectorXd tail_coeff;
  Eigen::VectorXd seed;
  double S;
  double residual;
  int newton_iterations;
  Eigen::VectorXd eigenvalues;  // of the model, for the tail

  Eigen::VectorXd at(double t) const;
  // w(0): the first node on the stable side, the last on the unstable side.
  Eigen::VectorXd start() const;
};

// Boundary-value problem L ξ + avg(J ξ + η) = 0 on a fixed grid with the
// split boundary conditions of the given side:
//   stable:   p₊ξ(left) = seed, p₋ξ(right) = 0
//   unstable: p₊ξ(left) = 0,    p₋ξ(right) = seed
// J is given at every node (empty means J ≡ 0).  Factorized once, solved
// for any number of forcings.
class LinearBvp {
public:
  LinearBvp(const FlowOperator& op, const Grid& grid, Side side, const std::vector<Eigen::MatrixXd>& nodal_J);
  DiscretePath solve(const Eigen::MatrixXd& nodal_forcing, const Eigen::VectorXd& seed) const;
  DiscretePath solve(const Eigen::VectorXd& seed) const;

private:
  const FlowOperator* op_;
  Grid grid_;
  Side side_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

HalfTrajectory shoot(const MorseModel& m, Side side, const Eigen::VectorXd& seed, const Grid& grid,
                     const ShootOptions& opt = {});
// Grid with spacing h on [0, S] (stable) or [−S, 0] (unstable); S is rounded up
// to an even number of cells.
HalfTrajectory shoot_stable(const MorseModel& m, const Eigen::VectorXd& x0, double S, double h = 0.02,
                            const ShootOptions& opt = {});
HalfTrajectory shoot_unstable(const MorseModel& m, const Eigen::VectorXd& y0, double S, double h = 0.02,
                              const ShootOptions& opt = {});

// W_1..W_{2^m−1} along `base`; seeds[k−1] fixes the free boundary data of W_k.
// Returns all 2^m components with W_0 = base.head.
std::vector<DiscretePath> solve_tangent_lift(const MorseModel& m, const HalfTrajectory& base,
                                             const TangentSystemSpec& spec,
                                             const std::vector<Eigen::VectorXd>& seeds);

// Nodal value of Σ_{ℓ≥2} Σ_{Part_ℓ} D^ℓ∇f(W_0)[W_{e(A_1)}, ...] for component k.
Eigen::MatrixXd tangent_forcing(const MorseModel& m, const TangentComponent& comp,
                                const std::vector<DiscretePath>& W);

// e^{tA} p ξ(t) at the far end t of the path (p = p₊ on the stable side, p₋ on the unstable side).
Eigen::VectorXd asymptotic_coefficient(const MorseModel& m, Side side, const DiscretePath& xi);
Eigen::VectorXd theta_identification(const MorseModel& m, const HalfTrajectory& base, const DiscretePath& xi,
                                     double tol_lin = 1e-8);

struct DecayFit {
  double rate = 0;
  double prefactor = 0;
  double r2 = 0;
  double s_lo = 0, s_hi = 0;
  int samples = 0;
};

// Least-squares fit of log y = log C − rate·x.
DecayFit fit_exponential(const std::vector<double>& x, const std::vector<double>& y);
// Fit of |W| + |∂_s W| over nodes with x in [s_lo, s_hi], where x = s, or −s
// when `backward` (decay as s → −∞).  Values below 1e-14 are skipped.
DecayFit decay_fit(const DiscretePath& p, double s_lo, double s_hi, bool backward = false);
// Window in distance from 0 along the head.
DecayFit decay_fit(const HalfTrajectory& w, double s_lo, double s_hi);

}  // namespace mglue
