#include "mglue/newton_picard.hpp"

#include "mglue/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mglue {

Vec NPProblem::dF(const Vec& x, const Vec& v) const {
  const Vec dirs[] = {v};
  return derivative(x, dirs);
}

namespace {
std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}
}  // namespace

NPResult np_solve(const NPProblem& p, const Vec& x1, const NPOptions& opt) {
  NPResult r;
  const Vec F1 = p.F(x1);
  r.residual_initial = p.norm_y(F1);
  r.bound_2c_f = 2 * p.c * r.residual_initial;

  const double dist = p.norm_x(x1 - p.x0);
  std::string note;
  if (!(dist < p.delta / 8))
    note += "initial point too far: |x1 - x0| = " + fmt(dist) + " >= delta/8 = " + fmt(p.delta / 8) + "; ";
  if (!(r.residual_initial < p.delta / (4 * p.c)))
    note += "initial residual too large: |F(x1)| = " + fmt(r.residual_initial) +
            " >= delta/(4c) = " + fmt(p.delta / (4 * p.c)) + "; ";
  r.preconditions_met = note.empty();
  r.precondition_note = note;
  if (!note.empty() && opt.enforce_preconditions) throw PreconditionError(note);

  const double scale = std::max(1.0, p.norm_x(x1));
  const double tol = opt.tol_zero * scale;
  Vec x = x1;
  double prev = -1;
  for (;;) {
    Vec Fx = p.F(x);
    Vec phi = x1 - p.Q(Fx - p.D(x - x1));
    Vec next = x + opt.damping * (phi - x);
    double step = p.norm_x(next - x);
    if (!std::isfinite(step)) throw ConvergenceError("Newton-Picard iterate is not finite");
    r.steps.push_back(step);
    if (step <= tol) {
      if (step > 0) x = std::move(next);
      break;
    }
    if (prev > 0 && step > 100 * tol) {
      double ratio = step / prev;
      r.contraction_ratio_max = std::max(r.contraction_ratio_max, ratio);
      if (ratio > opt.ratio_limit)
        throw ConvergenceError("contraction ratio " + fmt(ratio) + " above " + fmt(opt.ratio_limit) +
                               ": the linearization hypothesis fails here");
    }
    prev = step;
    x = std::move(next);
    if (++r.iterations >= opt.max_iter) throw ConvergenceError("Newton-Picard did not converge within max_iter");
  }
  r.x = x;
  r.residual_final = p.norm_y(p.F(x));
  Vec d = x - x1;
  r.correction_norm = p.norm_x(d);
  r.in_image_Q_defect = p.norm_x(d - p.Q(p.D(d))) / std::max(1.0, p.norm_x(x));
  return r;
}

Vec np_differential(const NPProblem& p, const Vec& x1, const Vec& v) {
  const Vec w = v - p.Q(p.D(v));
  Vec u = w;
  const double scale = std::max(1e-300, p.norm_x(w));
  for (int n = 0; n < 100; ++n) {
    Vec next = w + p.Q(p.D(u) - p.dF(x1, u));
    double change = p.norm_x(next - u);
    u = std::move(next);
    if (change <= 1e-15 * std::max(scale, p.norm_x(u))) return u;
  }
  throw ConvergenceError("Neumann series for dN did not converge in 100 terms");
}

namespace {
Vec ball_point(const NPProblem& p, std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> U(0, 1);
  Vec v = p.sample_x(rng);
  double nv = p.norm_x(v);
  if (nv == 0) return p.x0;
  return p.x0 + (radius * std::pow(U(rng), 1.0 / 3.0) / nv) * v;
}
}  // namespace

double np_linearization_defect(const NPProblem& p, int points, int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (int k = 0; k <= points; ++k) {
    Vec x = k == 0 ? p.x0 : ball_point(p, rng, p.delta);
    auto op = [&](const Vec& v) { return Vec(p.dF(x, v) - p.D(v)); };
    worst = std::max(worst, probe_operator_norm(op, p.sample_x, p.norm_x, p.norm_y, probes, 10, rng));
  }
  return worst;
}

double np_neumann_defect(const NPProblem& p, const Vec& x1, double mu, std::uint64_t seed, int probes,
                         int refinements) {
  if (mu < 2) throw std::invalid_argument("mu must be at least 2");
  std::mt19937_64 rng(seed);
  auto lin_defect = [&](const Vec& v) { return Vec(p.dF(x1, v) - p.D(v)); };
  double h = probe_operator_norm(lin_defect, p.sample_x, p.norm_x, p.norm_y, probes, refinements, rng);
  if (h > (1 + 1e-9) / (mu * p.c))
    throw PreconditionError("measured |dF(x1) - D| = " + fmt(h) + " exceeds 1/(mu c) = " + fmt(1 / (mu * p.c)));
  // (Id − B)⁻¹ − Id with B = P − Q dF(x1).
  auto M = [&](const Vec& v) {
    Vec u = v;
    for (int n = 0; n < 200; ++n) {
      Vec next = v + p.Q(p.D(u) - p.dF(x1, u));
      double change = p.norm_x(next - u);
      u = std::move(next);
      if (change <= 1e-15 * std::max(1e-300, p.norm_x(u))) break;
    }
    return Vec(u - v);
  };
  return probe_operator_norm(M, p.sample_x, p.norm_x, p.norm_x, probes, refinements, rng);
}

double estimate_second_derivative(const NPProblem& p, int points, int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (int k = 0; k <= points; ++k) {
    Vec x = k == 0 ? p.x0 : ball_point(p, rng, p.delta);
    for (int q = 0; q < probes; ++q) {
      Vec u = p.sample_x(rng), v = p.sample_x(rng);
      double nu = p.norm_x(u), nv = p.norm_x(v);
      if (nu == 0 || nv == 0) continue;
      u /= nu;
      v /= nv;
      Vec d2;
      if (p.max_order >= 2) {
        const Vec dirs[] = {u, v};
        d2 = p.derivative(x, dirs);
      } else {
        const double eps = 1e-5 * std::max(1.0, p.norm_x(x));
        d2 = (p.dF(x + eps * u, v) - p.dF(x - eps * u, v)) / (2 * eps);
      }
      worst = std::max(worst, p.norm_y(d2));
    }
  }
  return 1.1 * worst;
}

NPProblem tangent_problem(const NPProblem& p, double w) {
  const Eigen::Index nx = p.x0.size(), ny = p.y_dim;
  NPProblem t;
  t.max_order = p.max_order - 1;
  t.y_dim = static_cast<int>(2 * ny);
  t.derivative = [p, nx](const Vec& X, std::span<const Vec> dirs) {
    const Vec x = X.head(nx), xi = X.tail(nx);
    const size_t l = dirs.size();
    std::vector<Vec> us(l), vs(l);
    for (size_t i = 0; i < l; ++i) {
      us[i] = dirs[i].head(nx);
      vs[i] = dirs[i].tail(nx);
    }
    Vec first = p.derivative(x, us);
    std::vector<Vec> a;
    a.reserve(l + 1);
    a.push_back(xi);
    a.insert(a.end(), us.begin(), us.end());
    Vec second = p.derivative(x, a);
    for (size_t i = 0; i < l; ++i) {
      std::vector<Vec> b = us;
      b[i] = vs[i];
      second += p.derivative(x, b);
    }
    Vec out(first.size() + second.size());
    out << first, second;
    return out;
  };
  auto split = [](const LinearOp& op, Eigen::Index half) {
    return [op, half](const Vec& v) {
      Vec a = op(v.head(half)), b = op(v.tail(v.size() - half));
      Vec out(a.size() + b.size());
      out << a, b;
      return out;
    };
  };
  t.D = split(p.D, nx);
  t.Q = split(p.Q, ny);
  t.norm_x = [nx, w, nx_norm = p.norm_x](const Vec& v) {
    return std::max(nx_norm(v.head(nx)), w * nx_norm(v.tail(nx)));
  };
  t.norm_y = [ny, w, ny_norm = p.norm_y](const Vec& v) {
    return std::max(ny_norm(v.head(ny)), w * ny_norm(v.tail(ny)));
  };
  t.sample_x = [s = p.sample_x](std::mt19937_64& rng) {
    Vec a = s(rng), b = s(rng);
    Vec out(a.size() + b.size());
    out << a, b;
    return out;
  };
  t.x0 = Vec::Zero(2 * nx);
  t.x0.head(nx) = p.x0;
  t.c = p.c;
  t.delta = p.delta;
  return t;
}

TangentResult np_tangent_solve(const NPProblem& p, const Vec& x1, const Vec& xi1, const NPOptions& opt,
                               std::uint64_t seed) {
  TangentResult r;
  r.c2 = estimate_second_derivative(p, 8, 8, seed);
  r.delta_hat = r.c2 > 0 ? std::min(p.delta, 1.0 / (4 * p.c * r.c2)) : p.delta;
  r.fiber_weight = r.delta_hat / p.delta;
  NPProblem t = tangent_problem(p, r.fiber_weight);

  const Vec F1 = p.F(x1), dF1 = p.dF(x1, xi1);
  r.tf_norm = std::max(p.norm_y(F1), p.norm_y(dF1));
  // ‖dN(x0)‖ = ‖Id − P‖, measured by probes.
  std::mt19937_64 rng(seed + 1);
  double dN0 = probe_operator_norm([&](const Vec& v) { return Vec(v - p.Q(p.D(v))); }, p.sample_x, p.norm_x,
                                   p.norm_x, 10, 10, rng);
  r.xi_small = p.norm_x(xi1) < p.delta / (8 * (1 + dN0)) && p.norm_y(dF1) < p.delta / (4 * p.c);

  Vec X1(2 * x1.size());
  X1 << x1, xi1;
  r.doubled = np_solve(t, X1, opt);
  r.x = r.doubled.x.head(x1.size());
  r.xi = r.doubled.x.tail(x1.size());
  r.deviation = std::max(p.norm_x(r.x - x1), p.norm_x(r.xi - xi1));
  r.bound_C = 2 * p.c / r.fiber_weight;

  NPOptions base_opt = opt;
  base_opt.enforce_preconditions = false;
  NPResult base = np_solve(p, x1, base_opt);
  double gap = p.norm_x(base.x - r.x) / std::max(1.0, p.norm_x(base.x));
  if (gap > 1e-10) throw ConvergenceError("tangent solve base point differs from the plain solve by " + fmt(gap));
  return r;
}

Eigen::MatrixXd fd_jacobian(const std::function<Vec(const Vec&)>& F, const Vec& x, double step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd J(F(x).size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec e = Vec::Zero(n);
    e(j) = step;
    J.col(j) = (F(x + e) - F(x - e)) / (2 * step);
  }
  return J;
}

IftCertificate ift_certificate(const std::function<Vec(const Vec&)>& F, int dim, double delta, double k,
                               int sample_count, std::uint64_t seed) {
  IftCertificate cert;
  const double step = 1e-6 * std::max(1.0, delta);
  const Vec zero = Vec::Zero(dim);
  const Eigen::MatrixXd J0 = fd_jacobian(F, zero, step);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J0, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(dim - 1) > 1e-13 * std::max(1.0, sv(0))))
    throw CertificateError("inverse-bound", "dF(0) is singular");
  cert.inverse_norm = 1.0 / sv(dim - 1);
  if (cert.inverse_norm > k * (1 + 1e-9))
    throw CertificateError("inverse-bound", "|dF(0)^-1| = " + fmt(cert.inverse_norm) + " exceeds k = " + fmt(k));
  const Eigen::MatrixXd J0inv = svd.solve(Eigen::MatrixXd::Identity(dim, dim));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> U(0, 1);
  auto in_ball = [&](double radius, bool surface) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = g(rng);
    double r = surface ? radius * (1 - 1e-9) : radius * std::pow(U(rng), 1.0 / dim);
    return Vec(v.normalized() * r);
  };

  cert.worst_point = zero;
  for (int s = 0; s < sample_count; ++s) {
    Vec x = in_ball(delta, s % 4 == 0);
    double var = spectral_norm(fd_jacobian(F, x, step) - J0);
    if (var > cert.max_variation) {
      cert.max_variation = var;
      cert.worst_point = x;
    }
  }
  if (cert.max_variation > (1 + 1e-6) / (2 * k))
    throw CertificateError("variation-bound", "|dF(x) - dF(0)| = " + fmt(cert.max_variation) +
                                                  " exceeds 1/(2k) = " + fmt(1 / (2 * k)));

  cert.min_injectivity_ratio = 1e300;
  const int pairs = std::max(200, sample_count);
  for (int s = 0; s < pairs; ++s) {
    Vec a = in_ball(delta, false), b = in_ball(delta, false);
    double d = (a - b).norm();
    if (d == 0) continue;
    cert.min_injectivity_ratio = std::min(cert.min_injectivity_ratio, (F(a) - F(b)).norm() / d);
  }
  if (cert.min_injectivity_ratio < (1 - 1e-6) / (2 * k))
    throw CertificateError("conclusion", "injectivity spot check failed although the hypotheses held");

  const Vec F0 = F(zero);
  cert.preimages_tried = 20;
  for (int s = 0; s < cert.preimages_tried; ++s) {
    Vec y = F0 + in_ball(delta / (2 * k), s % 4 == 0);
    Vec x = zero;
    bool ok = false;
    for (int it = 0; it < 200; ++it) {
      Vec r = F(x) - y;
      if (r.norm() <= 1e-12 * std::max(1.0, y.norm())) {
        ok = true;
        break;
      }
      x -= J0inv * r;
      if (!x.allFinite()) break;
    }
    if (ok && x.norm() <= delta * (1 + 1e-9)) ++cert.preimages_found;
  }
  if (cert.preimages_found != cert.preimages_tried)
    throw CertificateError("conclusion", "a point of the small ball has no preimage in the delta-ball");
  cert.passed = true;
  return cert;
}

}  // namespace mglue
