#include "mglue/cutoff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mglue {

namespace {
double psi(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }
double dpsi(double t) { return t > 0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }
}  // namespace

Cutoff::Cutoff(Kind k) : kind_(k), sup_dbeta_(0) {
  // Dense sampling, then golden-section refinement around the best sample.
  const int n = 4001;
  double best_s = 0;
  for (int i = 0; i < n; ++i) {
    double s = -1 + 2.0 * i / (n - 1);
    double d = std::abs(derivative(s));
    if (d > sup_dbeta_) {
      sup_dbeta_ = d;
      best_s = s;
    }
  }
  double a = std::max(-1.0, best_s - 1e-3), b = std::min(1.0, best_s + 1e-3);
  const double gr = 0.5 * (std::sqrt(5.0) - 1);
  for (int it = 0; it < 60; ++it) {
    double c = b - gr * (b - a), d = a + gr * (b - a);
    if (std::abs(derivative(c)) > std::abs(derivative(d))) b = d;
    else a = c;
  }
  sup_dbeta_ = std::max(sup_dbeta_, std::abs(derivative(0.5 * (a + b))));
}

Cutoff Cutoff::from_name(const std::string& name) {
  if (name == "quintic") return quintic();
  if (name == "septic") return septic();
  if (name == "smooth") return smooth();
  throw std::invalid_argument("unknown cutoff '" + name + "' (quintic, septic, smooth)");
}

std::string Cutoff::name() const {
  switch (kind_) {
    case Kind::quintic: return "quintic";
    case Kind::septic: return "septic";
    case Kind::smooth: return "smooth";
  }
  return "?";
}

double Cutoff::operator()(double s) const {
  if (s <= -1) return 0;
  if (s >= 1) return 1;
  const double t = 0.5 * (s + 1);
  switch (kind_) {
    case Kind::quintic: return t * t * t * (10 + t * (-15 + 6 * t));
    case Kind::septic: return t * t * t * t * (35 + t * (-84 + t * (70 - 20 * t)));
    case Kind::smooth: return psi(t) / (psi(t) + psi(1 - t));
  }
  return 0;
}

double Cutoff::derivative(double s) const {
  if (s <= -1 || s >= 1) return 0;
  const double t = 0.5 * (s + 1);
  switch (kind_) {
    case Kind::quintic: return 0.5 * 30 * t * t * (1 - t) * (1 - t);
    case Kind::septic: return 0.5 * 140 * t * t * t * (1 - t) * (1 - t) * (1 - t);
    case Kind::smooth: {
      double p = psi(t), q = psi(1 - t);
      double den = p + q;
      return 0.5 * (dpsi(t) * q + p * dpsi(1 - t)) / (den * den);
    }
  }
  return 0;
}

}  // namespace mglue
