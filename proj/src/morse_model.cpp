#include "mglue/morse_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mglue {

double DerivativeTensor::at(int i, std::span<const int> js) const {
  if (static_cast<int>(js.size()) != order_) throw ModelError("tensor index has wrong arity");
  size_t idx = 0, stride = dim_;
  idx = i;
  for (int j : js) {
    idx += stride * j;
    stride *= dim_;
  }
  return data_[idx];
}

Eigen::VectorXd DerivativeTensor::apply(std::span<const Eigen::VectorXd> args) const {
  if (static_cast<int>(args.size()) != order_) throw ModelError("tensor applied to wrong number of arguments");
  const int n = dim_;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  size_t total = 1;
  for (int k = 0; k < order_; ++k) total *= n;
  std::vector<int> js(order_, 0);
  for (size_t flat = 0; flat < total; ++flat) {
    double w = 1;
    size_t r = flat;
    for (int k = 0; k < order_; ++k) {
      js[k] = static_cast<int>(r % n);
      r /= n;
      w *= args[k](js[k]);
    }
    if (w == 0) continue;
    for (int i = 0; i < n; ++i) out(i) += data_[i + n * flat] * w;
  }
  return out;
}

Eigen::MatrixXd DerivativeTensor::matrix() const {
  if (order_ != 1) throw ModelError("only order-1 tensors are matrices");
  return Eigen::Map<const Eigen::MatrixXd>(data_.data(), dim_, dim_);
}

MorseModel::MorseModel(std::vector<double> eig, int index, Polynomial nonlinearity, std::string name)
    : name_(std::move(name)), n_(static_cast<int>(eig.size())), k_(index), nonlin_(std::move(nonlinearity)) {
  if (n_ < 1) throw ModelError("model needs at least one eigenvalue");
  if (k_ < 0 || k_ > n_) throw ModelError("index must lie in [0, dim]");
  if (nonlin_.nvars() != n_) throw ModelError("nonlinearity has the wrong number of variables");
  for (int i = 0; i + 1 < n_; ++i)
    if (eig[i] < eig[i + 1]) throw ModelError("eigenvalues must be listed in decreasing order");
  for (int i = 0; i < n_; ++i) {
    bool stable = i < n_ - k_;
    if (stable && !(eig[i] > 0)) throw ModelError("the first dim-index eigenvalues must be positive");
    if (!stable && !(eig[i] < 0)) throw ModelError("the last index eigenvalues must be negative");
  }
  if (!nonlin_.is_zero() && nonlin_.min_degree() < 3)
    throw ModelError("nonlinearity must vanish to second order at 0 (Hessian would not match eig)");
  a_ = Eigen::Map<const Eigen::VectorXd>(eig.data(), n_);
  euclidean_ = nonlin_.is_zero();

  std::vector<Polynomial> d1(n_);
  for (int i = 0; i < n_; ++i) d1[i] = nonlin_.derivative(i);
  std::vector<Polynomial> d2(n_ * n_), d3(n_ * n_ * n_), d4(n_ * n_ * n_ * n_);
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i < n_; ++i) d2[i + n_ * j] = d1[i].derivative(j);
  for (int l = 0; l < n_; ++l)
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < n_; ++i) d3[i + n_ * (j + n_ * l)] = d2[i + n_ * j].derivative(l);
  for (int m = 0; m < n_; ++m)
    for (int l = 0; l < n_; ++l)
      for (int j = 0; j < n_; ++j)
        for (int i = 0; i < n_; ++i)
          d4[i + n_ * (j + n_ * (l + n_ * m))] = d3[i + n_ * (j + n_ * l)].derivative(m);
  auto compile = [](const std::vector<Polynomial>& ps) {
    std::vector<CompiledPolynomial> out;
    out.reserve(ps.size());
    for (const auto& p : ps) out.emplace_back(p);
    return out;
  };
  g1_ = compile(d1);
  g2_ = compile(d2);
  g3_ = compile(d3);
  g4_ = compile(d4);

  // Finite-difference check of the Jacobian at the critical point.
  const double step = 1e-6;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
  for (int j = 0; j < n_; ++j) {
    e.setZero();
    e(j) = step;
    Eigen::VectorXd col = (grad(e) - grad(-e)) / (2 * step);
    for (int i = 0; i < n_; ++i) {
      double expect = i == j ? a_(i) : 0.0;
      if (std::abs(col(i) - expect) > 1e-10 * std::max(1.0, std::abs(a_(i))))
        throw ModelError("Jacobian of grad f at 0 does not match the eigenvalue list");
    }
  }
}

double MorseModel::spectral_gap() const { return a_.cwiseAbs().minCoeff(); }

double MorseModel::value(const Eigen::VectorXd& z) const {
  return 0.5 * z.dot(a_.cwiseProduct(z)) + nonlin_.evaluate(z);
}

void MorseModel::nonlinear_grad(const double* z, double* out) const {
  for (int i = 0; i < n_; ++i) out[i] = euclidean_ ? 0.0 : g1_[i](z);
}

Eigen::VectorXd MorseModel::nonlinear_grad(const Eigen::VectorXd& z) const {
  Eigen::VectorXd out(n_);
  nonlinear_grad(z.data(), out.data());
  return out;
}

Eigen::VectorXd MorseModel::grad(const Eigen::VectorXd& z) const {
  return a_.cwiseProduct(z) + nonlinear_grad(z);
}

void MorseModel::nonlinear_jacobian(const double* z, double* out) const {
  const int nn = n_ * n_;
  for (int i = 0; i < nn; ++i) out[i] = euclidean_ ? 0.0 : g2_[i](z);
}

Eigen::MatrixXd MorseModel::nonlinear_jacobian(const Eigen::VectorXd& z) const {
  Eigen::MatrixXd out(n_, n_);
  nonlinear_jacobian(z.data(), out.data());
  return out;
}

DerivativeTensor MorseModel::dgrad_tensor(const Eigen::VectorXd& z, int order) const {
  if (order < 1 || order > tensor_order) throw ModelError("unsupported derivative order");
  const std::vector<CompiledPolynomial>& g = order == 1 ? g2_ : order == 2 ? g3_ : g4_;
  std::vector<double> data(g.size());
  for (size_t i = 0; i < g.size(); ++i) data[i] = euclidean_ ? 0.0 : g[i](z.data());
  if (order == 1)
    for (int i = 0; i < n_; ++i) data[i + n_ * i] += a_(i);
  return DerivativeTensor(n_, order, std::move(data));
}

void MorseModel::dnonlin_apply(const double* z, std::span<const double* const> args, double* out) const {
  const int order = static_cast<int>(args.size());
  if (order > tensor_order) throw ModelError("unsupported derivative order");
  for (int i = 0; i < n_; ++i) out[i] = 0;
  if (euclidean_) return;
  if (order == 0) {
    nonlinear_grad(z, out);
    return;
  }
  const std::vector<CompiledPolynomial>& g = order == 1 ? g2_ : order == 2 ? g3_ : g4_;
  size_t total = 1;
  for (int k = 0; k < order; ++k) total *= n_;
  for (size_t flat = 0; flat < total; ++flat) {
    double w = 1;
    size_t r = flat;
    for (int k = 0; k < order && w != 0; ++k) {
      w *= args[k][r % n_];
      r /= n_;
    }
    if (w == 0) continue;
    for (int i = 0; i < n_; ++i) {
      const auto& p = g[i + n_ * flat];
      if (!p.is_zero()) out[i] += p(z) * w;
    }
  }
}

Eigen::VectorXd MorseModel::dgrad_apply(const Eigen::VectorXd& z, std::span<const Eigen::VectorXd> args) const {
  const int order = static_cast<int>(args.size());
  if (order < 1 || order > tensor_order) throw ModelError("unsupported derivative order");
  std::vector<const double*> ptrs;
  for (const auto& a : args) ptrs.push_back(a.data());
  Eigen::VectorXd out(n_);
  dnonlin_apply(z.data(), ptrs, out.data());
  if (order == 1) out += a_.cwiseProduct(args[0]);
  return out;
}

double ModelConstants::delta_for(double mu) const {
  if (mu == 2) return delta_2;
  if (mu == 4) return delta_4;
  if (mu == mu_big) return delta_big;
  throw ModelError("delta requested for an uncomputed mu");
}

double right_inverse_constant(const Eigen::VectorXd& eig) {
  double c = 0;
  auto block = [&](bool positive) {
    double amax = 0, amin = std::numeric_limits<double>::infinity();
    bool any = false;
    for (double a : eig)
      if ((a > 0) == positive) {
        any = true;
        amax = std::max(amax, std::abs(a));
        amin = std::min(amin, std::abs(a));
      }
    if (any) c = std::max(c, std::sqrt(((amax + amin) * (amax + amin) + 1) / (amin * amin)));
  };
  block(true);
  block(false);
  return c;
}

double projection_constant(const Eigen::VectorXd& eig) {
  double sigma = eig.cwiseAbs().minCoeff();
  double a1 = eig(0), an = eig(eig.size() - 1);
  return std::sqrt(8 * std::max(1 + a1 * a1, 1 + an * an) / (2 * sigma));
}

double gamma_inverse_constant(double sigma) { return 1.0 / (1.0 - std::exp(-12 * sigma)); }

double sampled_nonlinear_sup(const MorseModel& m, double rho, int points_per_dim) {
  const int n = m.dim();
  if (m.is_euclidean()) return 0;
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> g;
  const int count = points_per_dim * n;
  const double shells[] = {1.0, 0.75, 0.5, 0.25};
  double worst = 0;
  Eigen::VectorXd z(n);
  Eigen::MatrixXd J(n, n);
  for (int p = 0; p < count; ++p) {
    if (n == 2) {
      double th = 2 * M_PI * p / count;
      z << std::cos(th), std::sin(th);
    } else {
      for (int i = 0; i < n; ++i) z(i) = g(rng);
      z.normalize();
    }
    for (double s : shells) {
      Eigen::VectorXd y = rho * s * z;
      m.nonlinear_jacobian(y.data(), J.data());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (J + J.transpose()), Eigen::EigenvaluesOnly);
      worst = std::max(worst, es.eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

double largest_linear_radius(const MorseModel& m, double bound, const ConstantOptions& opt) {
  if (m.is_euclidean()) return std::numeric_limits<double>::infinity();
  auto ok = [&](double rho) {
    return opt.safety * sampled_nonlinear_sup(m, rho, opt.sphere_points_per_dim) <= bound;
  };
  double lo = 0, hi = 1e-3;
  while (ok(hi)) {
    lo = hi;
    hi *= 2;
    if (hi > 1e8) return std::numeric_limits<double>::infinity();
  }
  while (hi - lo > opt.resolution) {
    double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  if (!(lo > 0)) throw ModelError("no positive radius satisfies the linearization bound");
  return lo;
}

ModelConstants compute_constants(const MorseModel& m, double epsilon, double C_decay,
                                 const ConstantOptions& opt) {
  ModelConstants k;
  k.sigma = m.spectral_gap();
  if (!(epsilon > 0 && epsilon < k.sigma)) throw ModelError("epsilon must lie in (0, sigma)");
  k.epsilon = epsilon;
  k.C_decay = C_decay;
  k.delta_max = opt.delta_max;
  k.c_rightinv = right_inverse_constant(m.eigenvalues());
  k.d_proj = projection_constant(m.eigenvalues());
  k.k_gamma_inv = gamma_inverse_constant(k.sigma);
  k.mu_big = 4 * k.k_gamma_inv + 1;
  auto radius = [&](double mu) { return largest_linear_radius(m, 1.0 / (mu * k.c_rightinv), opt); };
  k.rho_2 = radius(2);
  k.rho_4 = radius(4);
  k.rho_big = radius(k.mu_big);
  auto delta = [&](double rho) { return std::min(0.5 * rho, opt.delta_max); };
  k.delta_2 = delta(k.rho_2);
  k.delta_4 = delta(k.rho_4);
  k.delta_big = delta(k.rho_big);
  double bound = k.delta_4 / (4 * k.c_rightinv);
  k.T0 = 3;
  if (C_decay > 0 && C_decay * std::exp(-epsilon * 3) >= bound) {
    double t = std::log(C_decay / bound) / epsilon;
    k.T0 = std::nextafter(t, std::numeric_limits<double>::infinity()) * (1 + 1e-12);
  }
  return k;
}

ModelFile model_from_config(const KvConfig& cfg) {
  int n = cfg.integer("dim");
  int index = cfg.integer("index");
  std::vector<double> eig = cfg.numbers("eig");
  if (static_cast<int>(eig.size()) != n) throw ConfigError("eig must list exactly dim values");
  Polynomial nl = parse_polynomial(cfg.get_or("nonlinearity", "0"), n);
  MorseModel model(std::move(eig), index, std::move(nl), cfg.get_or("name", ""));
  double sigma = model.spectral_gap();
  double epsilon = cfg.number_or("epsilon", 0.9 * sigma);
  double delta_max = cfg.number_or("delta_max", 1.0);
  return ModelFile{std::move(model), epsilon, delta_max};
}

ModelFile load_model_file(const std::string& path) { return model_from_config(KvConfig::load(path)); }

}  // namespace mglue
