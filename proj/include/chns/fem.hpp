// P1 and P2 Lagrange spaces on a Mesh: fields, evaluation, elementary
// matrices and the mass-conserving L2 transfer between related meshes.
//
// P2 scalar node ordering: vertices first, then one node per edge (the edge
// midpoint) in global edge order. Vector P2 fields interleave components,
// dof(node n, comp c) = 2 n + c.
#pragma once

#include <Eigen/Sparse>
#include <array>
#include <memory>
#include <vector>

#include "chns/geometry.hpp"
#include "chns/mesh.hpp"
#include "chns/quadrature.hpp"

namespace chns {

using SpMat = Eigen::SparseMatrix<double>;

struct ScalarFieldP1 {
  const Mesh* mesh = nullptr;
  std::vector<double> values;  // one per vertex

  ScalarFieldP1() = default;
  explicit ScalarFieldP1(const Mesh& m, double init = 0.0)
      : mesh(&m), values(m.num_vertices(), init) {}

  double eval_bary(int t, const std::array<double, 3>& l) const {
    const auto& v = mesh->triangles()[t];
    return l[0] * values[v[0]] + l[1] * values[v[1]] + l[2] * values[v[2]];
  }
  double eval(const Vec2& p) const;
  Vec2 gradient(int t) const;  // constant per triangle
};

struct VectorFieldP2 {
  const Mesh* mesh = nullptr;
  std::vector<double> values;  // 2 * (num_vertices + num_edges)

  VectorFieldP2() = default;
  explicit VectorFieldP2(const Mesh& m)
      : mesh(&m), values(2 * (m.num_vertices() + m.num_edges()), 0.0) {}

  int num_nodes() const { return mesh->num_vertices() + mesh->num_edges(); }
  Vec2 node_value(int n) const { return {values[2 * n], values[2 * n + 1]}; }
  Vec2 node_position(int n) const;

  Vec2 eval_bary(int t, const std::array<double, 3>& l) const;
  Vec2 eval(const Vec2& p) const;
  // gradient tensor g[i][j] = d v_i / d x_j at a barycentric point
  std::array<std::array<double, 2>, 2> grad_bary(int t, const std::array<double, 3>& l) const;
  Sym2 sym_grad_bary(int t, const std::array<double, 3>& l) const;
  double div_bary(int t, const std::array<double, 3>& l) const;
};

// P2 basis values and gradients; local node order: 3 vertex nodes then the
// nodes on local edges 0,1,2 (edge a opposite vertex a).
struct P2Basis {
  std::array<double, 6> N;
  std::array<Vec2, 6> grad;
};
P2Basis p2_basis(const Mesh& mesh, int t, const std::array<double, 3>& l);

// Second derivatives of the six P2 basis functions (constant per triangle).
std::array<Sym2, 6> p2_hessians(const Mesh& mesh, int t);

// Global P2 node ids of triangle t in local order.
std::array<int, 6> p2_nodes(const Mesh& mesh, int t);

SpMat assemble_mass_p1(const Mesh& mesh);
SpMat assemble_stiffness_p1(const Mesh& mesh);

// Lumped P1 mass (row sums): weight of vertex i is a third of its patch area.
std::vector<double> lumped_mass_p1(const Mesh& mesh);

double integrate_p1(const ScalarFieldP1& f);  // exact integral of the field

// Mass-conserving global L2 projection onto P1 on the target mesh. The map
// must relate source and target (one refine/coarsen step); identity maps and
// target == source return the input unchanged.
ScalarFieldP1 transfer_p1(const ScalarFieldP1& field, const Mesh& target, const TransferMap& map);

// P2 re-evaluation transfer (exact on refined regions, interpolating on
// coarsened patches).
VectorFieldP2 transfer_p2(const VectorFieldP2& field, const Mesh& target, const TransferMap& map);

// Ancestry helper: old-mesh triangle containing the given target triangle
// (refine kind), or the list of old triangles inside a target one (coarsen).
int refine_ancestor(const TransferMap& map, int new_tri);

// One mesh-change step; an adaptation is a short sequence of hops
// (coarsen, then refine).
struct Hop {
  std::shared_ptr<const Mesh> mesh;
  TransferMap map;
};

ScalarFieldP1 transfer_p1_path(const ScalarFieldP1& f, const std::vector<Hop>& hops);
VectorFieldP2 transfer_p2_path(const VectorFieldP2& f, const std::vector<Hop>& hops);

}  // namespace chns
