#include "mglue/flow_operator.hpp"

#include <cmath>

namespace mglue {

double phi(double z) {
  if (std::abs(z) < 1e-8) return 1 - 0.5 * z;
  return -std::expm1(-z) / z;
}

FlowOperator::FlowOperator(const MorseModel& m, double h) : m_(&m), h_(h) {
  if (!(h > 0)) throw GridError("flow operator needs a positive spacing");
  const auto& a = m.eigenvalues();
  decay_.resize(a.size());
  gain_.resize(a.size());
  for (int i = 0; i < a.size(); ++i) {
    decay_(i) = std::exp(-h * a(i));
    gain_(i) = h * phi(h * a(i));
  }
}

void FlowOperator::check_grid(const Grid& g) const {
  if (std::abs(g.spacing() - h_) > 1e-12 * h_)
    throw GridError("path grid spacing does not match the flow operator");
}

CellField FlowOperator::linear(const DiscretePath& w) const {
  check_grid(w.grid());
  const auto& s = w.samples();
  const int cells = w.grid().cells();
  Eigen::MatrixXd out(s.rows(), cells);
  for (int c = 0; c < cells; ++c)
    out.col(c) = (s.col(c + 1) - decay_.cwiseProduct(s.col(c))).cwiseQuotient(gain_);
  return CellField(w.grid(), std::move(out));
}

Eigen::MatrixXd FlowOperator::nodal_nonlinearity(const DiscretePath& w, Execution ex) const {
  const auto& s = w.samples();
  const int n = static_cast<int>(s.rows());
  const int nodes = static_cast<int>(s.cols());
  Eigen::MatrixXd out(n, nodes);
  if (m_->is_euclidean()) {
    out.setZero();
    return out;
  }
  if (ex == Execution::serial) {
    for (int j = 0; j < nodes; ++j) m_->nonlinear_grad(s.col(j).data(), out.col(j).data());
  } else {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < nodes; ++j) m_->nonlinear_grad(s.col(j).data(), out.col(j).data());
  }
  return out;
}

CellField FlowOperator::averaged(const Grid& g, const Eigen::MatrixXd& nodal) const {
  const int cells = g.cells();
  Eigen::MatrixXd out(nodal.rows(), cells);
  for (int c = 0; c < cells; ++c) out.col(c) = 0.5 * (nodal.col(c) + nodal.col(c + 1));
  return CellField(g, std::move(out));
}

CellField FlowOperator::apply(const DiscretePath& w, Execution ex) const {
  CellField out = linear(w);
  if (!m_->is_euclidean()) out += averaged(w.grid(), nodal_nonlinearity(w, ex));
  return out;
}

CellField FlowOperator::jvp(const DiscretePath& w, const DiscretePath& u) const {
  const DiscretePath* dirs[] = {&u};
  return derivative(w, dirs);
}

CellField FlowOperator::derivative(const DiscretePath& w, std::span<const DiscretePath* const> dirs) const {
  const int order = static_cast<int>(dirs.size());
  if (order == 0) return apply(w);
  if (order > MorseModel::tensor_order) throw ModelError("flow derivative order above 3 is not available");
  for (const auto* d : dirs)
    if (!(d->grid() == w.grid()) || d->dim() != w.dim()) throw GridError("direction grid differs from base path");
  const Grid& g = w.grid();
  CellField out = order == 1 ? linear(*dirs[0]) : CellField::zero(g, w.dim());
  if (m_->is_euclidean()) return out;
  const int n = w.dim();
  Eigen::MatrixXd nodal(n, g.size());
  std::vector<const double*> args(order);
  for (int j = 0; j < g.size(); ++j) {
    for (int k = 0; k < order; ++k) args[k] = dirs[k]->samples().col(j).data();
    m_->dnonlin_apply(w.samples().col(j).data(), args, nodal.col(j).data());
  }
  out += averaged(g, nodal);
  return out;
}

DiscretePath FlowOperator::right_inverse(const CellField& eta) const {
  const Grid& g = eta.grid();
  check_grid(g);
  const int n = eta.dim();
  const int stable = m_->stable_dim();
  const int cells = g.cells();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, g.size());
  const auto& e = eta.values();
  for (int i = 0; i < stable; ++i)
    for (int c = 0; c < cells; ++c) z(i, c + 1) = decay_(i) * z(i, c) + gain_(i) * e(i, c);
  for (int i = stable; i < n; ++i)
    for (int c = cells - 1; c >= 0; --c) z(i, c) = (z(i, c + 1) - gain_(i) * e(i, c)) / decay_(i);
  return DiscretePath(g, std::move(z));
}

}  // namespace mglue
