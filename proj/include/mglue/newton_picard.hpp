#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mglue {

using Vec = Eigen::VectorXd;

class PreconditionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class CertificateError : public std::runtime_error {
public:
  CertificateError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

// d^ℓF(x)[dirs...] with ℓ = dirs.size(); ℓ = 0 evaluates F(x).
using DerivativeFn = std::function<Vec(const Vec& x, std::span<const Vec> dirs)>;
using LinearOp = std::function<Vec(const Vec&)>;
using NormFn = std::function<double(const Vec&)>;
using Sampler = std::function<Vec(std::mt19937_64&)>;

// A map F : X → Y near x0 with D = dF(x0) and a right inverse Q of D.
struct NPProblem {
  DerivativeFn derivative;
  int max_order = 1;  // highest ℓ `derivative` supports
  int y_dim = 0;
  LinearOp D;
  LinearOp Q;
  NormFn norm_x;
  NormFn norm_y;
  Sampler sample_x;  // random directions in X used by norm estimates
  Vec x0;
  double c = 1;
  double delta = 1;

  Vec F(const Vec& x) const { return derivative(x, {}); }
  Vec dF(const Vec& x, const Vec& v) const;
};

struct NPOptions {
  double tol_zero = 1e-12;
  int max_iter = 200;
  double ratio_limit = 0.95;
  double damping = 1.0;
  bool enforce_preconditions = true;
};

struct NPResult {
  Vec x;
  int iterations = 0;
  double residual_initial = 0;
  double residual_final = 0;
  double correction_norm = 0;
  double bound_2c_f = 0;
  double in_image_Q_defect = 0;
  double contraction_ratio_max = 0;
  bool preconditions_met = true;
  std::string precondition_note;
  std::vector<double> steps;
};

// Zero of F near x1 by the contraction x ↦ x1 − Q(F(x) − D(x − x1)).
NPResult np_solve(const NPProblem& p, const Vec& x1, const NPOptions& opt = {});

// dN(x1)v = (Id + Q dF(x1) − P)⁻¹ (Id − P) v with P = QD, by Neumann series.
Vec np_differential(const NPProblem& p, const Vec& x1, const Vec& v);

// Measured ‖(Id + Q dF(x1) − P)⁻¹ − Id‖ by random probes.  Throws if the
// measured ‖dF(x1) − D‖ exceeds 1/(μc).
double np_neumann_defect(const NPProblem& p, const Vec& x1, double mu, std::uint64_t seed = 7,
                         int probes = 20, int refinements = 50);

// Measured sup of ‖dF(x) − D‖ over random x in the δ-ball (and x0 itself).
double np_linearization_defect(const NPProblem& p, int points, int probes, std::uint64_t seed);

// sup ‖d²F‖ on the δ-ball by sampling, times 1.1.
double estimate_second_derivative(const NPProblem& p, int points, int probes, std::uint64_t seed);

// The doubled problem TF(x, ξ) = (F(x), dF(x)ξ) at (x0, 0) with Q ⊕ Q and the
// norm max{‖x‖, w‖ξ‖}.
NPProblem tangent_problem(const NPProblem& p, double fiber_weight);

struct TangentResult {
  Vec x, xi;
  NPResult doubled;
  double c2 = 0;
  double delta_hat = 0;
  double fiber_weight = 1;
  bool xi_small = true;  // the fiber smallness hypothesis on (x1, ξ1)
  double tf_norm = 0;    // max{‖F(x1)‖, ‖dF(x1)ξ1‖}
  double deviation = 0;  // max{‖x − x1‖, ‖ξ − ξ1‖}
  double bound_C = 0;    // 2c δ/δ̂
};

TangentResult np_tangent_solve(const NPProblem& p, const Vec& x1, const Vec& xi1, const NPOptions& opt = {},
                               std::uint64_t seed = 11);

struct IftCertificate {
  double inverse_norm = 0;
  double max_variation = 0;
  Vec worst_point;
  double min_injectivity_ratio = 0;
  int preimages_found = 0;
  int preimages_tried = 0;
  bool passed = false;
};

// Quantitative inverse function theorem check for F: Rⁿ → Rⁿ (Euclidean
// norms) on the ball of radius δ about 0.
IftCertificate ift_certificate(const std::function<Vec(const Vec&)>& F, int dim, double delta, double k,
                               int sample_count, std::uint64_t seed = 3);

Eigen::MatrixXd fd_jacobian(const std::function<Vec(const Vec&)>& F, const Vec& x, double step);

}  // namespace mglue
