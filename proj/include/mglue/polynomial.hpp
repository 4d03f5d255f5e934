#pragma once

#include <Eigen/Dense>

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mglue {

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Sparse multivariate polynomial with real coefficients.
class Polynomial {
public:
  using Monomial = std::vector<int>;

  explicit Polynomial(int nvars = 0) : nvars_(nvars) {}
  static Polynomial constant(int nvars, double c);
  static Polynomial variable(int nvars, int i);

  int nvars() const { return nvars_; }
  const std::map<Monomial, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int min_degree() const;
  int max_degree() const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator-() const;
  Polynomial scaled(double a) const;
  Polynomial pow(int e) const;
  Polynomial derivative(int var) const;

  double evaluate(const double* z) const;
  double evaluate(const Eigen::VectorXd& z) const { return evaluate(z.data()); }

  std::string to_string() const;

private:
  void add_term(const Monomial& m, double c);
  int nvars_;
  std::map<Monomial, double> terms_;
};

// Flat evaluation form of a polynomial, used in the inner loops.
class CompiledPolynomial {
public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);
  double operator()(const double* z) const;
  bool is_zero() const { return coefs_.empty(); }

private:
  int nvars_ = 0;
  int max_exp_ = 0;
  std::vector<double> coefs_;
  std::vector<int> exps_;
};

// Grammar: sums and differences of products of powers of numbers, parenthesised
// expressions and variables x1..xn.  Exponents are non-negative integers.
Polynomial parse_polynomial(std::string_view text, int nvars);

}  // namespace mglue
