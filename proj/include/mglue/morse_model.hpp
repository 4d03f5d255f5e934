#pragma once

#include "mglue/kv_config.hpp"
#include "mglue/polynomial.hpp"

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mglue {

class ModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Dense symmetric-in-trailing-arguments tensor D^order ∇f(z), stored with the
// output index fastest: entry (i, j1..j_order) at i + n*(j1 + n*(j2 + ...)).
class DerivativeTensor {
public:
  DerivativeTensor(int dim, int order, std::vector<double> data)
      : dim_(dim), order_(order), data_(std::move(data)) {}
  int dim() const { return dim_; }
  int order() const { return order_; }
  double at(int i, std::span<const int> js) const;
  Eigen::VectorXd apply(std::span<const Eigen::VectorXd> args) const;
  // Order-1 tensor as the Jacobian matrix.
  Eigen::MatrixXd matrix() const;

private:
  int dim_, order_;
  std::vector<double> data_;
};

// f(z) = ½⟨z, Az⟩ + N(z) with A = diag(eig) and N a polynomial vanishing to
// third order at 0.  Coordinates are ordered stable (a > 0) first.
class MorseModel {
public:
  static constexpr int tensor_order = 3;

  MorseModel(std::vector<double> eig, int index, Polynomial nonlinearity, std::string name = "");

  const std::string& name() const { return name_; }
  int dim() const { return n_; }
  int index() const { return k_; }
  int stable_dim() const { return n_ - k_; }
  const Eigen::VectorXd& eigenvalues() const { return a_; }
  double spectral_gap() const;
  bool is_euclidean() const { return euclidean_; }
  const Polynomial& nonlinearity() const { return nonlin_; }

  double value(const Eigen::VectorXd& z) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& z) const;
  // ∇f(z) − Az, computed from N directly so it is exactly 0 in the Euclidean case.
  void nonlinear_grad(const double* z, double* out) const;
  Eigen::VectorXd nonlinear_grad(const Eigen::VectorXd& z) const;
  // d∇f(z) − A.
  void nonlinear_jacobian(const double* z, double* out_colmajor) const;
  Eigen::MatrixXd nonlinear_jacobian(const Eigen::VectorXd& z) const;

  DerivativeTensor dgrad_tensor(const Eigen::VectorXd& z, int order) const;
  // D^ℓ ∇f(z)[v1..vℓ] for ℓ = args.size() in 1..3, without forming the tensor.
  Eigen::VectorXd dgrad_apply(const Eigen::VectorXd& z, std::span<const Eigen::VectorXd> args) const;
  // Same for N: D^ℓ N(z)[...] (ℓ = 0 gives N(z)); agrees with dgrad_apply for ℓ ≥ 2.
  void dnonlin_apply(const double* z, std::span<const double* const> args, double* out) const;

private:
  std::string name_;
  int n_, k_;
  Eigen::VectorXd a_;
  Polynomial nonlin_;
  bool euclidean_;
  // Derivatives of N: gradient (n), jacobian (n*n), order 2 (n^3), order 3 (n^4).
  std::vector<CompiledPolynomial> g1_, g2_, g3_, g4_;
};

struct ModelConstants {
  double sigma = 0;
  double c_rightinv = 0;
  double d_proj = 0;
  double k_gamma_inv = 0;
  double epsilon = 0;
  double C_decay = 0;
  double delta_max = 0;
  double mu_big = 0;  // 4k + 1
  double delta_2 = 0, delta_4 = 0, delta_big = 0;
  double rho_2 = 0, rho_4 = 0, rho_big = 0;  // before halving and capping
  double T0 = 3;

  double delta_for(double mu) const;
};

struct ConstantOptions {
  double delta_max = 1.0;
  double safety = 1.05;
  double resolution = 1e-6;
  int sphere_points_per_dim = 1000;
};

double right_inverse_constant(const Eigen::VectorXd& eig);
double projection_constant(const Eigen::VectorXd& eig);
double gamma_inverse_constant(double sigma);

// sup over the ball of radius rho of ‖d∇f(z) − A‖, by sphere and shell sampling.
double sampled_nonlinear_sup(const MorseModel& m, double rho, int points_per_dim);
// Largest ρ with safety·sup_{|z|≤ρ} ‖d∇f − A‖ ≤ bound; +inf if N ≡ 0.
double largest_linear_radius(const MorseModel& m, double bound, const ConstantOptions& opt);

ModelConstants compute_constants(const MorseModel& m, double epsilon, double C_decay,
                                 const ConstantOptions& opt = {});

struct ModelFile {
  MorseModel model;
  double epsilon;
  double delta_max;
};

ModelFile model_from_config(const KvConfig& cfg);
ModelFile load_model_file(const std::string& path);

}  // namespace mglue
