// Quadrature rules on the reference triangle and on edges.
#pragma once

#include <cstddef>
#include <vector>

namespace chns {

// Point in barycentric coordinates (l0, l1, l2), l0 + l1 + l2 = 1, with a
// weight given as a fraction of the triangle area. Weights of a rule sum to 1.
struct BaryPoint {
  double l0, l1, l2;
  double w;
};

struct TriangleRule {
  int degree = 0;  // exact for polynomials up to this total degree
  std::vector<BaryPoint> points;
};

// Symmetric Gauss rules (Dunavant) of degree 1, 2, 4, 6 and 8; all weights
// positive. Positivity matters: the discrete energy estimates rely on
// pointwise inequalities at quadrature points.
const TriangleRule& triangle_rule(int degree);

// Vertex rule: nodes at the three corners, weight 1/3 each. Exact for P1 and
// the rule behind the lumped treatment of the free-energy terms.
const TriangleRule& vertex_rule();

// Gauss-Legendre points on [0,1] with weights summing to 1.
struct EdgeRule {
  std::vector<double> t;
  std::vector<double> w;
};

const EdgeRule& edge_rule(int npoints);

}  // namespace chns
