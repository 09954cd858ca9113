#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "chns/fem.hpp"

using namespace chns;

namespace {

ScalarFieldP1 linear_field(const Mesh& m, double a, double b, double c) {
  ScalarFieldP1 f(m);
  for (int i = 0; i < m.num_vertices(); ++i)
    f.values[i] = a * m.vertices()[i].x + b * m.vertices()[i].y + c;
  return f;
}

double l2_norm(const ScalarFieldP1& f) {
  const auto& rule = triangle_rule(4);
  double s = 0.0;
  for (int t = 0; t < f.mesh->num_triangles(); ++t)
    for (const auto& q : rule.points) {
      const double v = f.eval_bary(t, {q.l0, q.l1, q.l2});
      s += f.mesh->area(t) * q.w * v * v;
    }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("mass matrix total equals the domain area") {
  const Mesh m = Mesh::rectangle(3.0, 1.0, 5, 2);
  const SpMat mm = assemble_mass_p1(m);
  CHECK(mm.sum() == doctest::Approx(3.0).epsilon(1e-12));
  const SpMat d = SpMat(mm.transpose()) - mm;
  CHECK(d.coeffs().cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("stiffness annihilates constants and measures linear energy") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 1, 1);
  const SpMat k = assemble_stiffness_p1(m);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.num_vertices());
  CHECK((k * ones).cwiseAbs().maxCoeff() < 1e-12);

  // energy of phi = x over the unit square is 1
  Eigen::VectorXd x(m.num_vertices());
  for (int i = 0; i < m.num_vertices(); ++i) x[i] = m.vertices()[i].x;
  CHECK(x.dot(k * x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluation and gradients") {
  const Mesh m = Mesh::rectangle(2.0, 1.0, 4, 2);
  const ScalarFieldP1 f = linear_field(m, 2.0, 3.0, 0.5);
  for (int i = 0; i < m.num_vertices(); ++i) {
    CHECK(f.eval(m.vertices()[i]) ==
          doctest::Approx(2.0 * m.vertices()[i].x + 3.0 * m.vertices()[i].y + 0.5)
              .epsilon(1e-13));
  }
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Vec2 g = f.gradient(t);
    CHECK(g.x == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(g.y == doctest::Approx(3.0).epsilon(1e-13));
  }
}

TEST_CASE("P2 reproduces quadratics at edge midpoints and beyond") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 2, 2);
  VectorFieldP2 v(m);
  for (int n = 0; n < v.num_nodes(); ++n) {
    const Vec2 p = v.node_position(n);
    v.values[2 * n] = p.x * p.x;
    v.values[2 * n + 1] = 0.0;
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Vec2 p{uni(rng), uni(rng)};
    CHECK(v.eval(p).x == doctest::Approx(p.x * p.x).epsilon(1e-12));
  }
}

TEST_CASE("transfer: identity, constants, nested refinement") {
  auto m = std::make_shared<Mesh>(Mesh::rectangle(1.0, 1.0, 2, 2));

  ScalarFieldP1 f = linear_field(*m, 1.0, -2.0, 0.3);
  SUBCASE("identity map returns the coefficients unchanged") {
    const auto [same, idmap] = m->refine({});
    const ScalarFieldP1 g = transfer_p1(f, *m, idmap);
    CHECK(g.values == f.values);
  }

  SUBCASE("constants are reproduced and linears are exact across refinement") {
    auto [fine, map] = m->refine({0, 1, 2});
    ScalarFieldP1 c(*m, 0.75);
    const ScalarFieldP1 cf = transfer_p1(c, fine, map);
    for (double v : cf.values) CHECK(v == doctest::Approx(0.75).epsilon(1e-13));

    const ScalarFieldP1 g = transfer_p1(f, fine, map);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      const Vec2 p{uni(rng), uni(rng)};
      CHECK(g.eval(p) == doctest::Approx(f.eval(p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("transfer conserves mass and is L2 stable") {
  auto m = std::make_shared<Mesh>(Mesh::rectangle(1.0, 1.0, 3, 3));
  auto [fine_raw, rmap] = m->refine({0, 5, 7, 11});
  auto fine = std::make_shared<Mesh>(std::move(fine_raw));

  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int trial = 0; trial < 50; ++trial) {
    ScalarFieldP1 f(*m);
    for (double& v : f.values) v = gauss(rng);
    const ScalarFieldP1 g = transfer_p1(f, *fine, rmap);
    CHECK(integrate_p1(g) == doctest::Approx(integrate_p1(f)).epsilon(1e-12).scale(1.0));
    CHECK(l2_norm(g) <= l2_norm(f) * (1.0 + 1e-10));
  }

  const auto stars = fine->find_node_stars();
  REQUIRE(!stars.empty());
  const auto [coarse_raw, cmap] = fine->coarsen(stars);
  for (int trial = 0; trial < 50; ++trial) {
    ScalarFieldP1 f(*fine);
    for (double& v : f.values) v = gauss(rng);
    const ScalarFieldP1 g = transfer_p1(f, coarse_raw, cmap);
    CHECK(integrate_p1(g) == doctest::Approx(integrate_p1(f)).epsilon(1e-11).scale(1.0));
    CHECK(l2_norm(g) <= l2_norm(f) * (1.0 + 1e-10));
  }
}

TEST_CASE("transfer is a projection: idempotent on the target space") {
  auto m = std::make_shared<Mesh>(Mesh::rectangle(1.0, 1.0, 2, 2));
  auto [fine_raw, rmap] = m->refine({0, 1});
  auto fine = std::make_shared<Mesh>(std::move(fine_raw));
  const auto stars = fine->find_node_stars();
  REQUIRE(!stars.empty());
  const auto [coarse_raw, cmap] = fine->coarsen(stars);

  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ScalarFieldP1 f(*fine);
  for (double& v : f.values) v = gauss(rng);
  const ScalarFieldP1 once = transfer_p1(f, coarse_raw, cmap);
  // lift the projection back to the fine mesh (nested) and project again
  ScalarFieldP1 lifted(*fine);
  for (int i = 0; i < fine->num_vertices(); ++i)
    lifted.values[i] = once.eval(fine->vertices()[i]);
  const ScalarFieldP1 twice = transfer_p1(lifted, coarse_raw, cmap);
  for (int i = 0; i < coarse_raw.num_vertices(); ++i)
    CHECK(twice.values[i] == doctest::Approx(once.values[i]).epsilon(1e-12));
}

TEST_CASE("P2 transfer is exact across refinement") {
  auto m = std::make_shared<Mesh>(Mesh::rectangle(1.0, 1.0, 2, 2));
  VectorFieldP2 v(*m);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& x : v.values) x = gauss(rng);

  auto [fine_raw, rmap] = m->refine({0, 3, 4});
  auto fine = std::make_shared<Mesh>(std::move(fine_raw));
  const VectorFieldP2 w = transfer_p2(v, *fine, rmap);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Vec2 p{uni(rng), uni(rng)};
    const Vec2 a = v.eval(p), b = w.eval(p);
    CHECK(a.x == doctest::Approx(b.x).epsilon(1e-11));
    CHECK(a.y == doctest::Approx(b.y).epsilon(1e-11));
  }
}

TEST_CASE("lumped mass equals consistent row sums") {
  const Mesh m = Mesh::rectangle(1.5, 1.0, 3, 2);
  const SpMat mm = assemble_mass_p1(m);
  const auto lump = lumped_mass_p1(m);
  const Eigen::VectorXd rows = mm * Eigen::VectorXd::Ones(m.num_vertices());
  for (int i = 0; i < m.num_vertices(); ++i)
    CHECK(lump[i] == doctest::Approx(rows[i]).epsilon(1e-13));
}
