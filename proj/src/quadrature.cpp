#include "chns/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace chns {

namespace {

void push_perm3(std::vector<BaryPoint>& pts, double a, double b, double w) {
  // permutations of (a, b, b)
  pts.push_back({a, b, b, w});
  pts.push_back({b, a, b, w});
  pts.push_back({b, b, a, w});
}

void push_perm6(std::vector<BaryPoint>& pts, double a, double b, double c, double w) {
  pts.push_back({a, b, c, w});
  pts.push_back({a, c, b, w});
  pts.push_back({b, a, c, w});
  pts.push_back({b, c, a, w});
  pts.push_back({c, a, b, w});
  pts.push_back({c, b, a, w});
}

TriangleRule make_degree1() {
  TriangleRule r;
  r.degree = 1;
  r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0});
  return r;
}

TriangleRule make_degree2() {
  TriangleRule r;
  r.degree = 2;
  push_perm3(r.points, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);
  return r;
}

TriangleRule make_degree4() {
  TriangleRule r;
  r.degree = 4;
  push_perm3(r.points, 0.108103018168070, 0.445948490915965, 0.223381589678011);
  push_perm3(r.points, 0.816847572980459, 0.091576213509771, 0.109951743655322);
  return r;
}

TriangleRule make_degree6() {
  TriangleRule r;
  r.degree = 6;
  push_perm3(r.points, 0.501426509658179, 0.249286745170910, 0.116786275726379);
  push_perm3(r.points, 0.873821971016996, 0.063089014491502, 0.050844906370207);
  push_perm6(r.points, 0.053145049844817, 0.310352451033784, 0.636502499121399,
             0.082851075618374);
  return r;
}

TriangleRule make_degree8() {
  // collapsed 5x5 Gauss rule (Duffy transform), exact through degree 9 with
  // closed-form nodes; preferred over tabulated symmetric rules whose printed
  // digits limit accuracy
  TriangleRule r;
  r.degree = 9;
  const double a1 = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
  const double a2 = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
  const double w0 = 128.0 / 225.0;
  const double w1 = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
  const double w2 = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
  const double gx[5] = {-a2, -a1, 0.0, a1, a2};
  const double gw[5] = {w2, w1, w0, w1, w2};
  for (int i = 0; i < 5; ++i) {
    const double u = 0.5 * (gx[i] + 1.0);
    const double wu = 0.5 * gw[i];
    for (int j = 0; j < 5; ++j) {
      const double v = 0.5 * (gx[j] + 1.0);
      const double wv = 0.5 * gw[j];
      const double l1 = u;
      const double l2 = v * (1.0 - u);
      r.points.push_back({1.0 - l1 - l2, l1, l2, 2.0 * wu * wv * (1.0 - u)});
    }
  }
  return r;
}

TriangleRule make_vertex() {
  TriangleRule r;
  r.degree = 1;
  r.points.push_back({1.0, 0.0, 0.0, 1.0 / 3.0});
  r.points.push_back({0.0, 1.0, 0.0, 1.0 / 3.0});
  r.points.push_back({0.0, 0.0, 1.0, 1.0 / 3.0});
  return r;
}

EdgeRule make_edge(int n) {
  EdgeRule r;
  switch (n) {
    case 1:
      r.t = {0.5};
      r.w = {1.0};
      break;
    case 2: {
      const double d = 0.5 / std::sqrt(3.0);
      r.t = {0.5 - d, 0.5 + d};
      r.w = {0.5, 0.5};
      break;
    }
    case 3: {
      const double d = 0.5 * std::sqrt(3.0 / 5.0);
      r.t = {0.5 - d, 0.5, 0.5 + d};
      r.w = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
      break;
    }
    default:
      throw std::invalid_argument("edge_rule: unsupported point count");
  }
  return r;
}

}  // namespace

const TriangleRule& triangle_rule(int degree) {
  static const TriangleRule d1 = make_degree1();
  static const TriangleRule d2 = make_degree2();
  static const TriangleRule d4 = make_degree4();
  static const TriangleRule d6 = make_degree6();
  static const TriangleRule d8 = make_degree8();
  if (degree <= 1) return d1;
  if (degree <= 2) return d2;
  if (degree <= 4) return d4;
  if (degree <= 6) return d6;
  if (degree <= 8) return d8;
  throw std::invalid_argument("triangle_rule: degree > 8 not available");
}

const TriangleRule& vertex_rule() {
  static const TriangleRule v = make_vertex();
  return v;
}

const EdgeRule& edge_rule(int npoints) {
  static const EdgeRule e1 = make_edge(1);
  static const EdgeRule e2 = make_edge(2);
  static const EdgeRule e3 = make_edge(3);
  if (npoints <= 1) return e1;
  if (npoints == 2) return e2;
  return e3;
}

}  // namespace chns
