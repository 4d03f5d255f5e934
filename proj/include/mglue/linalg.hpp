#pragma once

#include <Eigen/Dense>

#include <functional>
#include <random>

namespace mglue {

struct SingularRange {
  double min = 0;
  double max = 0;
};

// Extreme singular values of `op` viewed as a map between spaces with inner
// products given by the Gram matrices (both symmetric positive definite).
SingularRange weighted_singular_range(const Eigen::MatrixXd& op, const Eigen::MatrixXd& gram_in,
                                      const Eigen::MatrixXd& gram_out);

// Largest singular value of a small dense matrix in the Euclidean norm.
double spectral_norm(const Eigen::MatrixXd& m);

// Lower estimate of sup ‖op(v)‖_out / ‖v‖_in over random probes refined by a
// few steps of gradient-free hill climbing.
double probe_operator_norm(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
                           const std::function<Eigen::VectorXd(std::mt19937_64&)>& sampler,
                           const std::function<double(const Eigen::VectorXd&)>& norm_in,
                           const std::function<double(const Eigen::VectorXd&)>& norm_out,
                           int probes, int refinements, std::mt19937_64& rng);

}  // namespace mglue
