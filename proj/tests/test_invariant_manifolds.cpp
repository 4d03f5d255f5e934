#include "mglue/combinatorics.hpp"
#include "mglue/invariant_manifolds.hpp"
#include "mglue/polynomial.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

using namespace mglue;
using Catch::Approx;

namespace {

MorseModel e1() { return MorseModel({1, -1}, 1, parse_polynomial("0", 2), "E1"); }
MorseModel c1() { return MorseModel({1, -1}, 1, parse_polynomial("0.1*x1^2*x2", 2), "C1"); }
Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }

double sup_diff(const DiscretePath& a, const DiscretePath& b) { return (a - b).samples().cwiseAbs().maxCoeff(); }

// Brute-force set partitions of {0..n-1} by enumerating every block
// assignment and keeping the canonical (restricted growth) ones.
std::vector<std::vector<int>> brute_rgs(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(n, 0);
  for (;;) {
    bool canonical = true;
    int mx = -1;
    for (int i = 0; i < n; ++i) {
      if (a[i] > mx + 1) canonical = false;
      mx = std::max(mx, a[i]);
    }
    if (canonical) out.push_back(a);
    int i = n - 1;
    while (i >= 0 && ++a[i] == n) a[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

}  // namespace

TEST_CASE("digit map") {
  CHECK(digit_map(9) == IndexSet{1, 4});
  CHECK(digit_map(1) == IndexSet{1});
  CHECK(digit_map(6) == IndexSet{2, 3});
  for (std::uint64_t k = 1; k <= 4096; ++k) CHECK(digit_code(digit_map(k)) == k);
}

TEST_CASE("set partitions") {
  auto p1 = partitions({1, 4}, 1);
  REQUIRE(p1.size() == 1);
  CHECK(p1[0] == SetPartition{{1, 4}});
  auto p2 = partitions({1, 2}, 2);
  REQUIRE(p2.size() == 1);
  CHECK(p2[0] == SetPartition{{1}, {2}});
  CHECK(partitions({1, 2, 3}, 2).size() == 3);
  for (int n = 1; n <= 6; ++n) {
    IndexSet d;
    for (int j = 1; j <= n; ++j) d.push_back(j);
    auto all = brute_rgs(n);
    for (int b = 1; b <= n; ++b) {
      auto expect = std::count_if(all.begin(), all.end(),
                                  [b](const auto& a) { return *std::max_element(a.begin(), a.end()) + 1 == b; });
      CHECK(partitions(d, b).size() == static_cast<size_t>(expect));
      CHECK(stirling2(n, b) == static_cast<std::uint64_t>(expect));
    }
  }
}

TEST_CASE("tangent system terms") {
  TangentSystemSpec s1 = build_tangent_system(1);
  REQUIRE(s1.components.size() == 2);
  REQUIRE(s1.components[1].terms.size() == 1);
  CHECK(s1.components[1].terms[0] == TangentTerm{1, {1}});

  TangentSystemSpec s2 = build_tangent_system(2);
  const auto& t3 = s2.components[3].terms;
  CHECK(std::count(t3.begin(), t3.end(), TangentTerm{2, {1, 2}}) == 1);
  CHECK(std::count(t3.begin(), t3.end(), TangentTerm{1, {3}}) == 1);
  CHECK(t3.size() == 2);

  TangentSystemSpec s3 = build_tangent_system(3);
  std::map<int, int> by_order;
  for (const auto& t : s3.components[7].terms) ++by_order[t.order];
  CHECK(by_order == std::map<int, int>{{1, 1}, {2, 3}, {3, 1}});

  // Every component's term multiset against brute-force partitions of its digit set.
  for (int m = 1; m <= 3; ++m) {
    TangentSystemSpec s = build_tangent_system(m);
    for (int k = 1; k < (1 << m); ++k) {
      IndexSet d = digit_map(k);
      std::vector<std::vector<int>> expect;
      for (const auto& a : brute_rgs(static_cast<int>(d.size()))) {
        int blocks = *std::max_element(a.begin(), a.end()) + 1;
        std::vector<IndexSet> parts(blocks);
        for (size_t i = 0; i < a.size(); ++i) parts[a[i]].push_back(d[i]);
        std::vector<int> args;
        for (const auto& b : parts) args.push_back(static_cast<int>(digit_code(b)));
        std::sort(args.begin(), args.end());
        expect.push_back(args);
      }
      std::vector<std::vector<int>> got;
      for (const auto& t : s.components[k].terms) {
        auto a = t.args;
        std::sort(a.begin(), a.end());
        CHECK(static_cast<int>(a.size()) == t.order);
        got.push_back(a);
      }
      std::sort(expect.begin(), expect.end());
      std::sort(got.begin(), got.end());
      CHECK(got == expect);
    }
  }
}

TEST_CASE("Euclidean half trajectories") {
  MorseModel m = e1();
  HalfTrajectory w = shoot_stable(m, v1(0.5), 10);
  CHECK(w.residual <= 1e-10);
  double err = 0;
  for (int j = 0; j < w.head.grid().size(); ++j) {
    double s = w.head.grid().node(j);
    err = std::max(err, std::abs(w.head.samples()(0, j) - 0.5 * std::exp(-s)) + std::abs(w.head.samples()(1, j)));
  }
  CHECK(err <= 1e-12);
  CHECK(w.at(15.0)(0) == Approx(0.5 * std::exp(-15.0)).epsilon(1e-10));

  HalfTrajectory u = shoot_unstable(m, v1(0.5), 10);
  CHECK(u.residual <= 1e-10);
  CHECK(u.head.samples()(1, 0) == Approx(0.5 * std::exp(-u.S)).epsilon(1e-12));

  HalfTrajectory z = shoot_stable(m, v1(0), 10);
  CHECK(z.head.samples().cwiseAbs().maxCoeff() == 0.0);
  CHECK(decay_fit(w, 2, 8).rate >= 0.999);
}

TEST_CASE("curved half trajectories") {
  MorseModel m = c1();
  HalfTrajectory w = shoot_stable(m, v1(0.3), 26);
  CHECK(w.residual <= 1e-9);
  DecayFit f = decay_fit(w, 2, w.S - 2);
  CHECK(f.rate >= 0.9);
  CHECK(f.r2 >= 0.99);
  // The stable manifold is y ≈ λx²/3 near 0.
  double x = w.head.samples()(0, 100), y = w.head.samples()(1, 100);
  CHECK(y == Approx(0.1 * x * x / 3).epsilon(0.05));

  HalfTrajectory u = shoot_unstable(m, v1(0.3), 26);
  CHECK(u.residual <= 1e-9);
  CHECK(u.head.samples().col(0).norm() <= 2 * 0.3 * std::exp(-0.9 * u.S));
  CHECK(u.head.samples().row(0).cwiseAbs().maxCoeff() <= 1e-14);  // x ≡ 0 on the unstable manifold
}

TEST_CASE("tangent lifts") {
  SECTION("Euclidean first lift") {
    MorseModel m = e1();
    HalfTrajectory w = shoot_stable(m, v1(0.2), 10);
    auto W = solve_tangent_lift(m, w, build_tangent_system(1), {v1(1)});
    auto expect = DiscretePath::sample(w.head.grid(), 2, [](double s) { return Eigen::Vector2d(std::exp(-s), 0); });
    CHECK(sup_diff(W[1], expect) <= 1e-12);
    auto Z = solve_tangent_lift(m, w, build_tangent_system(2), {v1(0), v1(0), v1(0)});
    for (int k = 1; k < 4; ++k) CHECK(Z[k].samples().cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("curved lifts against finite differences") {
    MorseModel m = c1();
    const double S = 16, e = 1e-4, x0 = 0.3;
    HalfTrajectory w = shoot_stable(m, v1(x0), S);
    auto W = solve_tangent_lift(m, w, build_tangent_system(2), {v1(1), v1(1), v1(0)});
    auto at = [&](double x) { return shoot_stable(m, v1(x), S).head; };
    DiscretePath fd1 = (1 / (2 * e)) * (at(x0 + e) - at(x0 - e));
    CHECK(sup_diff(W[1], fd1) <= 1e-5);
    // With W1 = W2 and W3 seeded 0, W3 is the second variation in the seed direction.
    DiscretePath fd2 = (1 / (e * e)) * (at(x0 + e) - 2.0 * w.head + at(x0 - e));
    CHECK(sup_diff(W[3], fd2) <= 1e-3);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (Side side : {Side::stable, Side::unstable}) {
      HalfTrajectory b = side == Side::stable ? shoot_stable(m, v1(0.2), 20) : shoot_unstable(m, v1(0.2), 20);
      auto L = solve_tangent_lift(m, b, build_tangent_system(2), {v1(u(rng)), v1(u(rng)), v1(u(rng))});
      for (int k = 1; k < 4; ++k) {
        if (L[k].samples().cwiseAbs().maxCoeff() < 1e-13) continue;
        DecayFit f = decay_fit(L[k], 2, 18, side == Side::unstable);
        CHECK(f.rate >= 0.9);
        CHECK(f.r2 >= 0.99);
      }
    }
  }
}

TEST_CASE("theta identification") {
  MorseModel m = c1();
  HalfTrajectory zero = shoot_stable(m, v1(0), 12);
  auto lin = DiscretePath::sample(zero.head.grid(), 2, [](double s) { return Eigen::Vector2d(0.7 * std::exp(-s), 0); });
  CHECK(theta_identification(m, zero, lin)(0) == Approx(0.7).epsilon(1e-12));
  CHECK(theta_identification(m, zero, DiscretePath::zero(zero.head.grid(), 2))(0) == 0.0);

  HalfTrajectory w = shoot_stable(m, v1(0.3), 12);
  auto W1 = solve_tangent_lift(m, w, build_tangent_system(1), {v1(1)})[1];
  auto W2 = solve_tangent_lift(m, w, build_tangent_system(1), {v1(-0.4)})[1];
  double t1 = theta_identification(m, w, W1)(0), t2 = theta_identification(m, w, W2)(0);
  CHECK(theta_identification(m, w, 2.0 * W1 + 3.0 * W2)(0) == Approx(2 * t1 + 3 * t2).margin(1e-8));
  // θ⁻¹(v) from the seed (θ(W1))⁻¹ v, then round trip.
  const double v = 0.25;
  auto back = solve_tangent_lift(m, w, build_tangent_system(1), {v1(v / t1)})[1];
  CHECK(theta_identification(m, w, back)(0) == Approx(v).margin(1e-6));
  // Small perturbation of the base changes θ on the basis only a little.
  HalfTrajectory w2 = shoot_stable(m, v1(0.3001), 12);
  auto W1b = solve_tangent_lift(m, w2, build_tangent_system(1), {v1(1)})[1];
  CHECK(std::abs(theta_identification(m, w2, W1b)(0) - t1) <= 1e-3);
  CHECK_THROWS_AS(theta_identification(m, w, 2.0 * w.head), SolverError);
}

TEST_CASE("decay fits") {
  Grid g(0, 10, 1001);
  auto e = DiscretePath::sample(g, 1, [](double s) { return Eigen::VectorXd::Constant(1, std::exp(-s)); });
  DecayFit f = decay_fit(e, 1, 9);
  CHECK(f.rate == Approx(1.0).margin(1e-3));
  CHECK(f.r2 >= 0.9999);
  CHECK_THROWS_AS(decay_fit(DiscretePath::zero(g, 1), 1, 9), SolverError);

  // ξ' + 𝔸(s)ξ = η with 𝔸 → 1 and η ~ e^{−s/2}: the forcing rate is inherited.
  Grid h(0, 30, 6001);
  const double dt = h.spacing();
  Eigen::MatrixXd xi(1, h.size());
  xi(0, 0) = 1;
  auto A = [](double s) { return 1 + 0.5 * std::exp(-s); };
  auto eta = [](double s) { return std::exp(-0.5 * s); };
  for (int j = 0; j + 1 < h.size(); ++j) {
    double s = h.node(j), x = xi(0, j);
    auto rhs = [&](double t, double y) { return -A(t) * y + eta(t); };
    double k1 = rhs(s, x), k2 = rhs(s + dt / 2, x + dt / 2 * k1), k3 = rhs(s + dt / 2, x + dt / 2 * k2),
           k4 = rhs(s + dt, x + dt * k3);
    xi(0, j + 1) = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  CHECK(decay_fit(DiscretePath(h, xi), 5, 28).rate >= 0.5 * 0.98);
}
