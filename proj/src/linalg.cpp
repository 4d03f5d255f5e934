#include "mglue/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mglue {

SingularRange weighted_singular_range(const Eigen::MatrixXd& op, const Eigen::MatrixXd& gram_in,
                                      const Eigen::MatrixXd& gram_out) {
  if (op.cols() != gram_in.rows() || op.rows() != gram_out.rows())
    throw std::invalid_argument("operator and Gram matrices have inconsistent sizes");
  Eigen::MatrixXd a = op.transpose() * gram_out * op;
  a = 0.5 * (a + a.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, gram_in, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("generalized eigenproblem failed");
  const auto& ev = es.eigenvalues();
  return {std::sqrt(std::max(0.0, ev.minCoeff())), std::sqrt(std::max(0.0, ev.maxCoeff()))};
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double probe_operator_norm(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
                           const std::function<Eigen::VectorXd(std::mt19937_64&)>& sampler,
                           const std::function<double(const Eigen::VectorXd&)>& norm_in,
                           const std::function<double(const Eigen::VectorXd&)>& norm_out, int probes,
                           int refinements, std::mt19937_64& rng) {
  auto ratio = [&](const Eigen::VectorXd& v) {
    double d = norm_in(v);
    return d > 0 ? norm_out(op(v)) / d : 0.0;
  };
  double best = 0;
  Eigen::VectorXd best_v;
  for (int p = 0; p < probes; ++p) {
    Eigen::VectorXd v = sampler(rng);
    double r = ratio(v);
    if (r > best) {
      best = r;
      best_v = v;
    }
  }
  if (best_v.size() == 0) return best;
  double step = 0.5;
  for (int it = 0; it < refinements; ++it) {
    Eigen::VectorXd dir = sampler(rng);
    double scale = norm_in(best_v) / std::max(norm_in(dir), 1e-300);
    bool improved = false;
    for (double sgn : {1.0, -1.0}) {
      Eigen::VectorXd v = best_v + sgn * step * scale * dir;
      double r = ratio(v);
      if (r > best) {
        best = r;
        best_v = v;
        improved = true;
        break;
      }
    }
    if (!improved) step *= 0.7;
  }
  return best;
}

}  // namespace mglue
