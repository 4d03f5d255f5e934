#pragma once

#include "mglue/cutoff.hpp"
#include "mglue/invariant_manifolds.hpp"
#include "mglue/linear_theory.hpp"
#include "mglue/newton_picard.hpp"
#include "mglue/parallel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mglue {

struct GlueSettings {
  double h = 0.02;
  double S = 0;  // head length of the half trajectories; 0 means 2 T_max + 6
  ShootOptions shoot;
  NPOptions np;
  // Strict: a violated smallness precondition is an error.  Measured: it is
  // recorded and the iteration proceeds while it still contracts.
  bool strict = true;
  Execution execution = Execution::parallel;
};

double head_length(const GlueSettings& s, double T_max);
// T rounded up to a multiple of h, so ±T and the breakpoints are nodes.
double snap_T(double T, double h);

// ℱ_T(w) in the cell discretization, and the nodewise ∂_s w + ∇f(w)
// (second-order differences) used as a diagnostic.
CellField apply_F(const MorseModel& m, const DiscretePath& w);
DiscretePath apply_F_nodal(const MorseModel& m, const DiscretePath& w);

// w_T(s) = (1 − β(s+2)) w₊(T+s) + β(s−2) w₋(−T+s) from heads on [0, S] and [−S, 0].
DiscretePath preglue_paths(const Cutoff& beta, const DiscretePath& plus, const DiscretePath& minus, double T,
                           const Grid& grid);
DiscretePath preglue(const MorseModel& m, const Cutoff& beta, const HalfTrajectory& wp, const HalfTrajectory& wm,
                     double T, const Grid& grid);

struct ApproxZeroRow {
  double T;
  double residual;         // l2 of ℱ_T(w_T)
  double outside_support;  // sup over cells away from the transition bands
};

struct ApproxZeroTable {
  std::vector<ApproxZeroRow> rows;
  std::optional<DecayFit> fit;  // absent when every residual vanishes
};

ApproxZeroTable certify_approx_zero(const MorseModel& m, const Cutoff& beta, const HalfTrajectory& wp,
                                    const HalfTrajectory& wm, const std::vector<double>& T_list, double h,
                                    Execution ex = Execution::parallel);

// The Newton-Picard problem at 0_T for ℱ_T with D, Q from the linear theory.
NPProblem glue_problem(const LinearTheory& lt);

struct GlueReport {
  double T = 0;
  Vec x0_seed, y0_seed;
  double preglue_residual = 0;
  double preglue_norm = 0;
  NPResult np;
  DiscretePath preglued = DiscretePath::zero(Grid(-1, 1, 9), 1);
  DiscretePath glued = DiscretePath::zero(Grid(-1, 1, 9), 1);
  double ev_error = 0;
  double flow_residual_sup = 0;
  double boundary_defect = 0;  // of γ_T − w_T against the complement
  double bound_2cF = 0;
  double bound_residual = 0;   // δ/(4c)
  double bound_distance = 0;   // δ/8
  double T0 = 0;
  bool preconditions_met = true;
  std::string precondition_note;
};

GlueReport glue(const MorseModel& m, const Cutoff& beta, const HalfTrajectory& wp, const HalfTrajectory& wm,
                const LinearTheory& lt, const GlueSettings& s);

// Shoots both half trajectories and glues at T.
GlueReport glue_seeds(const MorseModel& m, const ModelConstants& k, const Cutoff& beta, const Vec& x0,
                      const Vec& y0, double T, const GlueSettings& s);

// Max over unit windows of |Φ_1(γ(s)) − γ(s+1)| with Φ the RK4 flow of −∇f.
double reintegration_defect(const MorseModel& m, const DiscretePath& path, double window = 1.0);

struct LinearizedGlueReport {
  double max_discrepancy = 0;
  std::vector<double> per_probe;
};

LinearizedGlueReport linearized_glue_check(const MorseModel& m, const ModelConstants& k, const Cutoff& beta,
                                           const LinearTheory& lt,
                                           const std::vector<std::pair<Vec, Vec>>& probes,
                                           const GlueSettings& s, double eps = 1e-4);

struct SweepRow {
  double T = 0;
  double preglue_resid = 0;
  int np_iters = 0;
  double corr_norm = 0;
  double bound_2cF = 0;
  double ev_error = 0;
  double ev_bound = 0;
  double contraction = 0;
  bool within_bound = true;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::optional<DecayFit> ev_fit;
  std::optional<DecayFit> residual_fit;
  double C = 0;
};

// C(K₊, K₋): 1.2 × max over a 5×5 seed grid in the box of ‖ℱ_T(w_T)‖ e^{εT}.
double estimate_decay_constant(const MorseModel& m, const ModelConstants& k, const Cutoff& beta, double box,
                               const std::vector<double>& T_list, const GlueSettings& s);

SweepTable convergence_sweep(const MorseModel& m, const ModelConstants& k, const Cutoff& beta, const Vec& x0,
                             const Vec& y0, const std::vector<double>& T_list, double C, const GlueSettings& s,
                             double slack = 0.2);

struct TangentSweepRow {
  double T = 0;
  double ev_error = 0;
  int np_iters = 0;
  double preglue_resid = 0;
};

struct TangentSweepTable {
  int order = 0;
  std::vector<TangentSweepRow> rows;
  std::optional<DecayFit> fit;
  double dN0_norm = 0;   // measured ‖d T^m 𝒩_T(0_T)‖ at the first T
  double dN0_bound = 0;  // d^{2^m}
};

// seeds_plus / seeds_minus hold the 2^m − 1 tangent seeds of each side.
TangentSweepTable tangent_convergence_sweep(const MorseModel& m, const ModelConstants& k, const Cutoff& beta,
                                            const Vec& x0, const Vec& y0, const std::vector<Vec>& seeds_plus,
                                            const std::vector<Vec>& seeds_minus,
                                            const std::vector<double>& T_list, int order,
                                            const GlueSettings& s);

struct DiffeoCertificate {
  double T = 0;
  double delta_prime = 0;
  double k = 0;
  double theta_norm = 0;
  double theta_bound = 0;
  IftCertificate ift;
  bool passed = false;
  std::string failure;
};

// Radius of the seed neighbourhoods used by the certificate:
// min{δ_4/8, δ_{4k+1}} / (2 √(1 + sup|β′|²)).
double certificate_radius(const ModelConstants& k, const Cutoff& beta);

DiffeoCertificate diffeo_criterion(const MorseModel& m, const ModelConstants& k, const Cutoff& beta,
                                   const LinearTheory& lt, int sample_count, const GlueSettings& s,
                                   std::uint64_t seed = 5);

// Largest r (by bisection) such that every corner seed of the box |x0|, |y0| ≤ r
// passes the strict glue preconditions at every T in the list.
double certified_seed_radius(const MorseModel& m, const ModelConstants& k, const Cutoff& beta,
                             const std::vector<double>& T_list, const GlueSettings& s, double r_max = 1.0);

}  // namespace mglue
