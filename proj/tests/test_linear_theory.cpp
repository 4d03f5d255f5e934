#include "mglue/linear_theory.hpp"
#include "mglue/polynomial.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace mglue;
using Catch::Approx;

namespace {

MorseModel e1() { return MorseModel({1, -1}, 1, parse_polynomial("0", 2), "E1"); }
MorseModel c1() { return MorseModel({1, -1}, 1, parse_polynomial("0.1*x1^2*x2", 2), "C1"); }
Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }

DiscretePath smooth_random(const Grid& g, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd a(n, 6);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 6; ++k) a(i, k) = gauss(rng);
  return DiscretePath::sample(g, n, [&](double s) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < 6; ++k) v += a.col(k) * std::cos(0.7 * k * s + k);
    return v;
  });
}

}  // namespace

TEST_CASE("D on sample paths") {
  MorseModel m = e1();
  LinearTheory lt(m, 3, 0.01, compute_constants(m, 0.9, 0));
  const Grid& g = lt.grid();
  auto zeta = DiscretePath::sample(g, 2, [](double s) { return Eigen::Vector2d(s, 0); });
  DiscretePath nodal = lt.apply_D_nodal(zeta);
  for (int j = 0; j < g.size(); ++j) CHECK(nodal.samples()(0, j) == Approx(1 + g.node(j)).margin(1e-12));
  // The cell scheme is exact on affine data up to O(h²) at the midpoints.
  CellField cells = lt.apply_D(zeta);
  for (int c = 0; c < g.cells(); ++c) CHECK(cells.values()(0, c) == Approx(1 + g.cell_mid(c)).margin(1e-4));

  std::mt19937_64 rng(1);
  DiscretePath a = smooth_random(g, 2, rng), b = smooth_random(g, 2, rng);
  CHECK((lt.apply_D(2.0 * a + (-3.0) * b) - (2.0 * lt.apply_D(a) + (-3.0) * lt.apply_D(b))).sup() < 1e-10);
  CHECK(lt.apply_D(lt.kernel_path({v1(0.3), v1(-2)})).sup() <= 1e-8);
}

TEST_CASE("projection onto the kernel") {
  MorseModel m = c1();
  LinearTheory lt(m, 5, 0.02, compute_constants(m, 0.9, 0));
  const Grid& g = lt.grid();
  auto [e, rest] = lt.project_E(lt.kernel_path({v1(0.4), v1(0.9)}));
  CHECK(rest.samples().cwiseAbs().maxCoeff() <= 1e-10);

  std::mt19937_64 rng(2);
  DiscretePath z = smooth_random(g, 2, rng);
  auto [ez, rz] = lt.project_E(z);
  CHECK(rz.samples()(0, 0) == 0.0);
  CHECK(rz.samples()(1, g.size() - 1) == 0.0);
  CHECK(lt.in_complement(rz));
  auto [e0, r0] = lt.project_E(rz);
  CHECK(e0.v_plus.norm() == 0.0);
  CHECK(e0.v_minus.norm() == 0.0);
  auto [e2, r2] = lt.project_E(lt.kernel_path(ez));
  CHECK((e2.v_plus - ez.v_plus).norm() <= 1e-12);
  CHECK((e2.v_minus - ez.v_minus).norm() <= 1e-12);
  CHECK(lt.apply_D(lt.kernel_path(ez)).sup() <= 1e-6);

  MorseModel me = e1();
  ModelConstants ke = compute_constants(me, 0.9, 0);
  LinearTheory le(me, 3, 0.02, ke);
  for (int q = 0; q < 50; ++q) {
    DiscretePath p = smooth_random(le.grid(), 2, rng);
    CHECK(w12_norm(le.kernel_path(le.project_E(p).first)) <= ke.d_proj * w12_norm(p) * (1 + 5 * 0.02));
  }
}

TEST_CASE("right inverse") {
  MorseModel m = e1();
  ModelConstants k = compute_constants(m, 0.9, 0);
  LinearTheory lt(m, 3, 0.01, k);
  const Grid& g = lt.grid();
  CHECK(lt.apply_Q(CellField::zero(g, 2)).samples().cwiseAbs().maxCoeff() == 0.0);

  auto one = DiscretePath::sample(g, 2, [](double) { return Eigen::Vector2d(1, 0); });
  DiscretePath z = lt.apply_Q(one);
  for (int j = 0; j < g.size(); ++j) CHECK(z.samples()(0, j) == Approx(1 - std::exp(-(g.node(j) + 3))).margin(1e-12));

  std::mt19937_64 rng(3);
  for (int q = 0; q < 30; ++q) {
    DiscretePath eta = smooth_random(g, 2, rng);
    DiscretePath zq = lt.apply_Q(eta);
    CHECK(lt.in_complement(zq));
    CellField cells = lt.cells_from([&](double s) { return sample_cubic(eta, s); });
    CHECK((lt.apply_D(lt.apply_Q(cells)) - cells).sup() <= 1e-6);
    CHECK(w12_norm(lt.apply_Q(cells)) <= k.c_rightinv * cells.l2() * (1 + 5 * g.spacing()));
  }
}

TEST_CASE("infinitesimal gluing") {
  MorseModel m = e1();
  ModelConstants k = compute_constants(m, 0.9, 0);
  LinearTheory lt(m, 3, 0.02, k);
  const Grid& g = lt.grid();
  DiscretePath G = lt.gamma_infinitesimal(v1(1), v1(1));
  int mid = *g.node_index(0.0);
  CHECK(G.samples()(0, mid) == Approx(std::exp(-3.0)).epsilon(1e-13));
  CHECK(G.samples()(1, mid) == Approx(std::exp(-3.0)).epsilon(1e-13));
  CHECK(G.samples()(0, mid) == Approx(0.0497871).epsilon(1e-6));
  CHECK(lt.gamma_infinitesimal(v1(0), v1(0)).samples().cwiseAbs().maxCoeff() == 0.0);
  DiscretePath H = lt.gamma_infinitesimal(v1(0.37), v1(-1.3));
  CHECK(H.samples()(0, 0) == 0.37);
  CHECK(H.samples()(1, g.size() - 1) == -1.3);

  SingularRange r = lt.gamma_svd_bounds();
  CHECK(r.max == Approx(std::sqrt(1 - std::exp(-12.0))).epsilon(1e-14));
  CHECK(r.min == Approx(std::sqrt(1 - std::exp(-12.0))).epsilon(1e-14));
  CHECK(r.min >= std::sqrt(1 / k.k_gamma_inv) - 1e-15);
  CHECK_THROWS(LinearTheory(m, 2, 0.02, k).gamma_infinitesimal(v1(1), v1(1)));
}

TEST_CASE("Euclidean closed-form gluing") {
  MorseModel m = e1();
  Grid g = Grid::symmetric(3, 0.02);
  DiscretePath r = euclidean_gluing_reference(m, Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), 3, g);
  int mid = *g.node_index(0.0);
  CHECK(r.samples()(0, mid) == Approx(std::exp(-3.0)).epsilon(1e-14));
  CHECK(r.samples()(1, mid) == Approx(std::exp(-3.0)).epsilon(1e-14));
  auto [l, rr] = evaluate_ends(r);
  CHECK(l(0) == Approx(1.0));
  CHECK(l(1) == Approx(std::exp(-6.0)));
  CHECK(rr(0) == Approx(std::exp(-6.0)));
  CHECK(rr(1) == Approx(1.0));
  double ev = std::sqrt(l(1) * l(1) + rr(0) * rr(0));
  CHECK(ev == Approx(std::sqrt(2.0) * std::exp(-6.0)).epsilon(1e-12));
}

TEST_CASE("uniform bounds across T") {
  for (const MorseModel& m : {e1(), c1()}) {
    ModelConstants k = compute_constants(m, 0.9, 0);
    std::vector<LinearNorms> rows;
    for (double T : {3.0, 5.0, 8.0, 12.0}) {
      LinearTheory lt(m, T, 0.02, k);
      LinearNorms n = lt.measured_norms();
      const double sl = 1 + 5 * lt.grid().spacing();
      CHECK(n.norm_Pi <= k.d_proj * sl);
      CHECK(n.norm_Q <= k.c_rightinv * sl);
      CHECK(n.gamma_opnorm <= 1 + 1e-9);
      CHECK(n.gamma_minsv >= std::sqrt(1 - std::exp(-12 * k.sigma)) - 1e-9);
      CHECK(n.min_sv_D_on_K > 0.1);
      rows.push_back(n);
    }
    auto spread = [&](auto get) {
      double lo = 1e300, hi = 0;
      for (const auto& r : rows) {
        lo = std::min(lo, get(r));
        hi = std::max(hi, get(r));
      }
      return (hi - lo) / hi;
    };
    CHECK(spread([](const LinearNorms& r) { return r.norm_Pi; }) < 0.05);
    CHECK(spread([](const LinearNorms& r) { return r.norm_Q; }) < 0.05);
    CHECK(spread([](const LinearNorms& r) { return 1 / r.gamma_minsv; }) < 0.05);
    CHECK(spread([](const LinearNorms& r) { return r.min_sv_D_on_K; }) < 0.05);
  }
}

TEST_CASE("grid checks") {
  MorseModel m = e1();
  ModelConstants k = compute_constants(m, 0.9, 0);
  CHECK_THROWS_AS(LinearTheory(m, 0.5, 0.02, k), GridError);
  LinearTheory lt(m, 3, 0.02, k);
  CHECK_THROWS_AS(lt.apply_D(DiscretePath::zero(Grid::symmetric(4, 0.02), 2)), GridError);
}
