#include "mglue/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mglue {

Polynomial Polynomial::constant(int nvars, double c) {
  Polynomial p(nvars);
  p.add_term(Monomial(nvars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int nvars, int i) {
  Polynomial p(nvars);
  Monomial m(nvars, 0);
  m.at(i) = 1;
  p.add_term(m, 1.0);
  return p;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (c == 0) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
    return;
  }
  it->second += c;
  if (it->second == 0) terms_.erase(it);
}

int Polynomial::min_degree() const {
  int d = -1;
  for (const auto& [m, c] : terms_) {
    int deg = std::accumulate(m.begin(), m.end(), 0);
    d = d < 0 ? deg : std::min(d, deg);
  }
  return d;
}

int Polynomial::max_degree() const {
  int d = -1;
  for (const auto& [m, c] : terms_) d = std::max(d, std::accumulate(m.begin(), m.end(), 0));
  return d;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + (-o); }

Polynomial Polynomial::operator-() const { return scaled(-1.0); }

Polynomial Polynomial::scaled(double a) const {
  Polynomial r(nvars_);
  for (const auto& [m, c] : terms_) r.add_term(m, a * c);
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r(nvars_);
  for (const auto& [m1, c1] : terms_)
    for (const auto& [m2, c2] : o.terms_) {
      Monomial m(nvars_);
      for (int i = 0; i < nvars_; ++i) m[i] = m1[i] + m2[i];
      r.add_term(m, c1 * c2);
    }
  return r;
}

Polynomial Polynomial::pow(int e) const {
  if (e < 0) throw ParseError("negative exponent");
  Polynomial r = constant(nvars_, 1.0);
  for (int i = 0; i < e; ++i) r = r * *this;
  return r;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial r(nvars_);
  for (const auto& [m, c] : terms_) {
    if (m[var] == 0) continue;
    Monomial d = m;
    d[var] -= 1;
    r.add_term(d, c * m[var]);
  }
  return r;
}

double Polynomial::evaluate(const double* z) const {
  double acc = 0;
  for (const auto& [m, c] : terms_) {
    double t = c;
    for (int i = 0; i < nvars_; ++i)
      for (int k = 0; k < m[i]; ++k) t *= z[i];
    acc += t;
  }
  return acc;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << "(" << c << ")";
    for (int i = 0; i < nvars_; ++i)
      if (m[i]) os << "*x" << (i + 1) << "^" << m[i];
  }
  return os.str();
}

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) : nvars_(p.nvars()) {
  for (const auto& [m, c] : p.terms()) {
    coefs_.push_back(c);
    for (int e : m) {
      exps_.push_back(e);
      max_exp_ = std::max(max_exp_, e);
    }
  }
}

double CompiledPolynomial::operator()(const double* z) const {
  double acc = 0;
  const int* e = exps_.data();
  for (double c : coefs_) {
    double t = c;
    for (int i = 0; i < nvars_; ++i, ++e)
      for (int k = 0; k < *e; ++k) t *= z[i];
    acc += t;
  }
  return acc;
}

namespace {

class Parser {
public:
  Parser(std::string_view s, int nvars) : s_(s), n_(nvars) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return p;
  }

private:
  [[noreturn]] void fail(const std::string& what) {
    throw ParseError(what + " at position " + std::to_string(pos_) + " in '" + std::string(s_) + "'");
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial p = term();
    for (;;) {
      if (eat('+')) p = p + term();
      else if (eat('-')) p = p - term();
      else return p;
    }
  }
  Polynomial term() {
    Polynomial p = unary();
    while (eat('*')) p = p * unary();
    return p;
  }
  Polynomial unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }
  Polynomial power() {
    Polynomial base = primary();
    if (eat('^')) {
      skip();
      size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected integer exponent");
      int e = 0;
      std::from_chars(s_.data() + start, s_.data() + pos_, e);
      return base.pow(e);
    }
    return base;
  }
  Polynomial primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expr();
      if (!eat(')')) fail("expected ')'");
      return p;
    }
    if (c == 'x') {
      ++pos_;
      size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected variable index after 'x'");
      int i = 0;
      std::from_chars(s_.data() + start, s_.data() + pos_, i);
      if (i < 1 || i > n_) fail("variable x" + std::to_string(i) + " out of range");
      return Polynomial::variable(n_, i - 1);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
        ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
      std::string num(s_.substr(start, pos_ - start));
      try {
        size_t used = 0;
        double v = std::stod(num, &used);
        if (used != num.size()) fail("malformed number");
        return Polynomial::constant(n_, v);
      } catch (const std::logic_error&) {
        fail("malformed number");
      }
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view s_;
  int n_;
  size_t pos_ = 0;
};

}  // namespace

Polynomial parse_polynomial(std::string_view text, int nvars) {
  if (nvars < 1) throw ParseError("polynomial needs at least one variable");
  return Parser(text, nvars).parse();
}

}  // namespace mglue
