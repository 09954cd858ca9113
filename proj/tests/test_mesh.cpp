#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "chns/mesh.hpp"

using namespace chns;

namespace {

void check_conforming(const Mesh& m) {
  for (const Edge& e : m.edges()) {
    CHECK(e.t0 >= 0);
    if (e.t1 != -1) CHECK(e.t0 < e.t1);
  }
  for (int t = 0; t < m.num_triangles(); ++t) CHECK(m.area(t) > 0.0);
}

std::vector<int> all_tris(const Mesh& m) {
  std::vector<int> v(m.num_triangles());
  for (int i = 0; i < m.num_triangles(); ++i) v[i] = i;
  return v;
}

}  // namespace

TEST_CASE("unit square with one cell") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 1, 1);
  CHECK(m.num_triangles() == 2);
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_edges() == 5);
  CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("2x2 grid") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 2, 2);
  CHECK(m.num_triangles() == 8);
  CHECK(m.num_vertices() == 9);
  check_conforming(m);
}

TEST_CASE("rectangle area additivity") {
  const Mesh m = Mesh::rectangle(3.0, 1.0, 7, 3);
  CHECK(m.total_area() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("rectangle rejects bad arguments") {
  CHECK_THROWS(Mesh::rectangle(1.0, 1.0, 0, 1));
  CHECK_THROWS(Mesh::rectangle(-1.0, 1.0, 1, 1));
  CHECK_THROWS(Mesh::rectangle(1.0, 0.0, 1, 1));
}

TEST_CASE("refine with empty mark set is the identity") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 2, 2);
  const auto [r, map] = m.refine({});
  CHECK(r.num_triangles() == m.num_triangles());
  CHECK(map.kind == TransferMap::Kind::identity);
}

TEST_CASE("refining one triangle of the unit square") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 1, 1);
  const auto [r, map] = m.refine({0});
  check_conforming(r);
  CHECK(r.num_triangles() >= 4);
  CHECK(r.num_triangles() <= 6);
  CHECK(r.total_area() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("children have half the parent area") {
  Mesh m = Mesh::rectangle(1.0, 1.0, 2, 2);
  std::mt19937_64 rng(7);
  for (int round = 0; round < 4; ++round) {
    std::vector<int> marked;
    for (int t = 0; t < m.num_triangles(); ++t)
      if (rng() % 3 == 0) marked.push_back(t);
    if (marked.empty()) marked.push_back(0);
    auto [r, map] = m.refine(marked);
    // group children by ancestor and check the bisection area halving chain:
    // every new triangle's area is parent_area / 2^g for its depth g >= 1
    for (int t = 0; t < r.num_triangles(); ++t) {
      const int anc = map.ancestor[t];
      const double ratio = m.area(anc) / r.area(t);
      const double g = std::log2(ratio);
      CHECK(g == doctest::Approx(std::round(g)).epsilon(1e-10));
      CHECK(ratio >= 1.0 - 1e-12);
    }
    check_conforming(r);
    CHECK(r.total_area() == doctest::Approx(1.0).epsilon(1e-12));
    m = std::move(r);
  }
}

TEST_CASE("node stars: none on the initial mesh, present after refinement") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 2, 2);
  CHECK(m.find_node_stars().empty());

  const auto [r, map] = m.refine(all_tris(m));
  const auto stars = r.find_node_stars();
  CHECK(!stars.empty());
  // all stars disjoint
  std::set<int> seen;
  for (const auto& s : stars)
    for (int t : s.tris) {
      CHECK(seen.count(t) == 0);
      seen.insert(t);
    }
  for (const auto& s : stars) {
    CHECK((s.tris.size() == 4 || s.tris.size() == 2));
    for (int t : s.tris) {
      const auto& tri = r.triangles()[t];
      CHECK(tri[0] == s.center);
    }
  }
}

TEST_CASE("uniform refine once yields a star at every newest vertex") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 1, 1);
  const auto [r, map] = m.refine(all_tris(m));
  // one bisection pair: the diagonal midpoint is the only newest vertex
  const auto stars = r.find_node_stars();
  REQUIRE(stars.size() == 1);
  CHECK(stars[0].tris.size() == 4);
  CHECK(r.vertex_original()[stars[0].center] == 0);
}

TEST_CASE("coarsen inverts refine: identical vertices and connectivity") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 2, 2);
  const auto [r, rmap] = m.refine({3});
  const auto stars = r.find_node_stars();
  REQUIRE(!stars.empty());
  const auto [c, cmap] = r.coarsen(stars);
  REQUIRE(c.num_triangles() == m.num_triangles());
  REQUIRE(c.num_vertices() == m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) {
    CHECK(c.vertices()[v].x == m.vertices()[v].x);
    CHECK(c.vertices()[v].y == m.vertices()[v].y);
  }
  // connectivity matches as a set, including the peak ordering; merged
  // parents are appended after the surviving triangles
  auto sorted_tris = [](const Mesh& mm) {
    auto ts = mm.triangles();
    std::sort(ts.begin(), ts.end());
    return ts;
  };
  CHECK(sorted_tris(c) == sorted_tris(m));
}

TEST_CASE("coarsen with no stars is the identity") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 2, 2);
  const auto [c, map] = m.coarsen({});
  CHECK(c.num_triangles() == m.num_triangles());
}

TEST_CASE("coarsen rejects overlapping and stale stars") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 1, 1);
  const auto [r, rmap] = m.refine({0, 1});
  auto stars = r.find_node_stars();
  REQUIRE(stars.size() == 1);
  std::vector<NodeStar> twice = {stars[0], stars[0]};
  CHECK_THROWS(r.coarsen(twice));
  NodeStar stale = stars[0];
  stale.tris[0] = stale.tris[1];
  CHECK_THROWS(r.coarsen({stale}));
}

TEST_CASE("coarsening preserves total area") {
  Mesh m = Mesh::rectangle(2.0, 1.0, 4, 2);
  std::mt19937_64 rng(11);
  for (int round = 0; round < 3; ++round) {
    std::vector<int> marked;
    for (int t = 0; t < m.num_triangles(); ++t)
      if (rng() % 2 == 0) marked.push_back(t);
    if (marked.empty()) marked.push_back(1);
    auto [r, map] = m.refine(marked);
    m = std::move(r);
  }
  const auto stars = m.find_node_stars();
  const auto [c, cmap] = m.coarsen(stars);
  check_conforming(c);
  CHECK(c.total_area() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("geometry of the unit right triangle") {
  // the single-cell square consists of two right triangles with legs of
  // length 1: h_T = sqrt(2), area = 1/2
  const Mesh m = Mesh::rectangle(1.0, 1.0, 1, 1);
  for (int t = 0; t < 2; ++t) {
    CHECK(m.area(t) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.diameter(t) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }
}

TEST_CASE("edge lengths and the normal convention") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 1, 1);
  // bottom edge: unit horizontal, normal vertical
  for (int e = 0; e < m.num_edges(); ++e) {
    const Edge& ed = m.edges()[e];
    if (ed.side == BoundarySide::bottom) {
      CHECK(m.edge_length(e) == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(std::abs(m.edge_normal(e).x) == doctest::Approx(0.0).epsilon(1e-15));
      CHECK(m.edge_normal(e).y == doctest::Approx(-1.0).epsilon(1e-15));  // outward
    }
  }
}

TEST_CASE("swapping the global triangle numbers flips the interior normal") {
  const std::vector<Vec2> pts = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  const Mesh a(pts, {{{1, 2, 0}}, {{3, 0, 2}}}, {1, 1, 1, 1}, 1.0, 1.0);
  const Mesh b(pts, {{{3, 0, 2}}, {{1, 2, 0}}}, {1, 1, 1, 1}, 1.0, 1.0);
  // find the diagonal edge in both
  auto diag_normal = [](const Mesh& m) {
    for (int e = 0; e < m.num_edges(); ++e)
      if (m.edges()[e].t1 != -1) return m.edge_normal(e);
    throw std::runtime_error("no interior edge");
  };
  const Vec2 na = diag_normal(a), nb = diag_normal(b);
  CHECK(na.x == doctest::Approx(-nb.x).epsilon(1e-15));
  CHECK(na.y == doctest::Approx(-nb.y).epsilon(1e-15));
}

TEST_CASE("shape regularity and minimum angle across random adaptation") {
  const Mesh m0 = Mesh::rectangle(3.0, 1.0, 6, 2);
  const double ratio0 = m0.max_shape_ratio();
  const double angle0 = m0.min_angle();

  Mesh m = m0;
  std::mt19937_64 rng(3);
  for (int round = 0; round < 6; ++round) {
    std::vector<int> marked;
    for (int t = 0; t < m.num_triangles(); ++t)
      if (rng() % 4 == 0) marked.push_back(t);
    if (marked.empty()) marked.push_back(0);
    auto [r, map] = m.refine(marked);
    m = std::move(r);
    check_conforming(m);
    CHECK(m.total_area() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m.max_shape_ratio() <= 4.0 * ratio0 + 1e-12);
    CHECK(m.min_angle() >= 0.5 * angle0 - 1e-12);
    // coarsen part of what we refined
    auto stars = m.find_node_stars();
    if (!stars.empty()) {
      stars.resize((stars.size() + 1) / 2);
      auto [c, cmap] = m.coarsen(stars);
      m = std::move(c);
      check_conforming(m);
      CHECK(m.total_area() == doctest::Approx(3.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("refine rejects out-of-range marks") {
  const Mesh m = Mesh::rectangle(1.0, 1.0, 1, 1);
  CHECK_THROWS(m.refine({7}));
}
