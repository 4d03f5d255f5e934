#pragma once

#include <string>

namespace mglue {

// Monotone β with β = 0 on (−∞, −1] and β = 1 on [1, ∞).
class Cutoff {
public:
  enum class Kind { quintic, septic, smooth };

  static Cutoff quintic() { return Cutoff(Kind::quintic); }
  static Cutoff septic() { return Cutoff(Kind::septic); }
  // C^∞ transition built from e^{−1/t}.
  static Cutoff smooth() { return Cutoff(Kind::smooth); }
  static Cutoff from_name(const std::string& name);

  double operator()(double s) const;
  double derivative(double s) const;
  double sup_derivative() const { return sup_dbeta_; }
  Kind kind() const { return kind_; }
  std::string name() const;

private:
  explicit Cutoff(Kind k);
  Kind kind_;
  double sup_dbeta_;
};

}  // namespace mglue
