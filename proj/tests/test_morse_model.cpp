#include "mglue/kv_config.hpp"
#include "mglue/morse_model.hpp"
#include "mglue/polynomial.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace mglue;
using Catch::Approx;

namespace {

MorseModel e1() { return MorseModel({1, -1}, 1, parse_polynomial("0", 2), "E1"); }
MorseModel c1(double lambda = 0.1) {
  return MorseModel({1, -1}, 1, parse_polynomial(std::to_string(lambda) + "*x1^2*x2", 2), "C1");
}

}  // namespace

TEST_CASE("polynomial parser") {
  Polynomial p = parse_polynomial("0.1*x1^2*x2 - (x1 + 2*x2)^3 + 3", 2);
  Eigen::Vector2d z(0.7, -0.4);
  double x = z(0), y = z(1);
  CHECK(p.evaluate(z.data()) == Approx(0.1 * x * x * y - std::pow(x + 2 * y, 3) + 3).epsilon(1e-14));
  CHECK(p.min_degree() == 0);
  CHECK(p.max_degree() == 3);
  Polynomial d = p.derivative(0);
  CHECK(d.evaluate(z.data()) == Approx(0.2 * x * y - 3 * std::pow(x + 2 * y, 2)).epsilon(1e-14));
  CHECK_THROWS_AS(parse_polynomial("x3", 2), ParseError);
  CHECK_THROWS_AS(parse_polynomial("x1^", 2), ParseError);
  CHECK_THROWS_AS(parse_polynomial("(x1", 2), ParseError);
  CHECK_THROWS_AS(parse_polynomial("x1^-1", 2), ParseError);
  CHECK_THROWS_AS(parse_polynomial("x1 / 2", 2), ParseError);
}

TEST_CASE("key = value config") {
  KvConfig c = KvConfig::parse("# comment\n dim = 2\neig = 1, -1 # trailing\nname=C1\n");
  CHECK(c.integer("dim") == 2);
  CHECK(c.numbers("eig") == std::vector<double>{1, -1});
  CHECK(c.get("name") == "C1");
  CHECK(c.number_or("missing", 4.5) == 4.5);
  CHECK_THROWS_AS(c.get("missing"), ConfigError);
  CHECK_THROWS_AS(KvConfig::parse("no equals sign"), ConfigError);
  CHECK_THROWS_AS(KvConfig::load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("gradient examples") {
  CHECK(e1().grad(Eigen::Vector2d(1, 1)) == Eigen::Vector2d(1, -1));
  MorseModel m = c1();
  Eigen::VectorXd g = m.grad(Eigen::Vector2d(1, 1));
  CHECK(g(0) == Approx(1.2).epsilon(1e-15));
  CHECK(g(1) == Approx(-0.9).epsilon(1e-15));
  CHECK(m.grad(Eigen::Vector2d::Zero()).norm() == 0.0);
  CHECK(m.value(Eigen::Vector2d(1, 1)) == Approx(0.1));
}

TEST_CASE("derivative tensors") {
  MorseModel m = c1();
  const double l = 0.1;
  CHECK(m.dgrad_tensor(Eigen::Vector2d::Zero(), 1).matrix() == Eigen::Matrix2d(Eigen::Vector2d(1, -1).asDiagonal()));
  Eigen::Vector2d z(0.3, -0.8);
  Eigen::Matrix2d hand;
  hand << 1 + 2 * l * z(1), 2 * l * z(0), 2 * l * z(0), -1;
  CHECK((m.dgrad_tensor(z, 1).matrix() - hand).norm() < 1e-15);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int q = 0; q < 10; ++q) {
    Eigen::Vector2d p(u(rng), u(rng));
    Eigen::Matrix2d J = m.dgrad_tensor(p, 1).matrix(), fd;
    const double e = 1e-6;
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d d = Eigen::Vector2d::Unit(j) * e;
      fd.col(j) = (m.grad(p + d) - m.grad(p - d)) / (2 * e);
    }
    worst = std::max(worst, (J - fd).norm() / J.norm());
  }
  CHECK(worst <= 1e-6);

  for (int q = 0; q < 20; ++q) {
    Eigen::Vector2d p(u(rng), u(rng));
    DerivativeTensor t = m.dgrad_tensor(p, 2);
    for (int i = 0; i < 2; ++i)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          int ab[] = {a, b}, ba[] = {b, a};
          CHECK(std::abs(t.at(i, ab) - t.at(i, ba)) <= 1e-12);
        }
    Eigen::VectorXd v1 = Eigen::Vector2d(u(rng), u(rng)), v2 = Eigen::Vector2d(u(rng), u(rng)), v3 = Eigen::Vector2d(u(rng), u(rng));
    std::vector<Eigen::VectorXd> args{v1, v2, v3};
    CHECK((m.dgrad_apply(p, args) - m.dgrad_tensor(p, 3).apply(args)).norm() < 1e-14);
    // The only third derivative of λx²y is ∂x∂x∂y = 2λ, and D³∇f vanishes.
    CHECK(m.dgrad_apply(p, args).norm() == 0.0);
    Eigen::VectorXd d2 = m.dgrad_apply(p, std::vector<Eigen::VectorXd>{v1, v2});
    CHECK(d2(0) == Approx(2 * l * (v1(0) * v2(1) + v1(1) * v2(0))).margin(1e-15));
    CHECK(d2(1) == Approx(2 * l * v1(0) * v2(0)).margin(1e-15));
  }
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(MorseModel({-1, 1}, 1, parse_polynomial("0", 2)), ModelError);
  CHECK_THROWS_AS(MorseModel({1, -1}, 0, parse_polynomial("0", 2)), ModelError);
  CHECK_THROWS_AS(MorseModel({1, -1}, 1, parse_polynomial("x1^2", 2)), ModelError);
  CHECK_THROWS_AS(MorseModel({1, 0}, 1, parse_polynomial("0", 2)), ModelError);
  KvConfig bad = KvConfig::parse("dim = 2\nindex = 1\neig = 1, -1\nnonlinearity = 0.5*x1*x2\n");
  CHECK_THROWS_AS(model_from_config(bad), ModelError);
}

TEST_CASE("constants of the Euclidean model") {
  MorseModel m = e1();
  ModelConstants k = compute_constants(m, 0.9, 0);
  CHECK(k.sigma == 1.0);
  CHECK(k.c_rightinv == Approx(std::sqrt(5.0)).epsilon(1e-15));
  CHECK(k.d_proj == Approx(2 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(k.k_gamma_inv == Approx(1 / (1 - std::exp(-12.0))).epsilon(1e-14));
  CHECK(std::isinf(k.rho_4));
  CHECK(k.delta_2 == 1.0);
  CHECK(k.delta_4 == 1.0);
  CHECK(k.delta_big == 1.0);
  CHECK(k.T0 == 3.0);
}

TEST_CASE("constants of the curved model") {
  MorseModel m = c1();
  ModelConstants k = compute_constants(m, 0.9, 0);
  CHECK(k.delta_2 >= k.delta_4);
  CHECK(k.delta_4 >= k.delta_big);
  // Hand radius from ‖d∇f − A‖ = 2λ‖[[y,x],[x,0]]‖.
  const double hand = 1 / (4 * k.c_rightinv * 0.1 * (1 + std::sqrt(2.0)));
  CHECK(std::abs(k.rho_4 - hand) <= 0.2 * hand);

  // Paths inside twice the radius keep the linearization within 1/(4c).
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  double worst = 0;
  for (int q = 0; q < 100 * 50; ++q) {
    Eigen::Vector2d z(g(rng), g(rng));
    z *= 2 * k.delta_4 * (1 - 5 * 0.02) * std::pow(std::uniform_real_distribution<double>(0, 1)(rng), 0.5) / z.norm();
    worst = std::max(worst, m.nonlinear_jacobian(z).jacobiSvd().singularValues()(0));
  }
  CHECK(worst <= 1 / (4 * k.c_rightinv));

  ModelConstants kc = compute_constants(m, 0.9, 50.0);
  CHECK(kc.T0 > 3);
  CHECK(kc.C_decay * std::exp(-0.9 * kc.T0) <= kc.delta_4 / (4 * kc.c_rightinv) * (1 + 1e-9));
}
