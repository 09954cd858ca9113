#include "chns/fem.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <stdexcept>

namespace chns {

double ScalarFieldP1::eval(const Vec2& p) const {
  const int t = mesh->locate(p);
  return eval_bary(t, mesh->barycentric(t, p));
}

Vec2 ScalarFieldP1::gradient(int t) const {
  const auto& v = mesh->triangles()[t];
  const auto& g = mesh->bary_gradients(t);
  Vec2 out{0.0, 0.0};
  for (int i = 0; i < 3; ++i) out += values[v[i]] * g[i];
  return out;
}

Vec2 VectorFieldP2::node_position(int n) const {
  const int nv = mesh->num_vertices();
  if (n < nv) return mesh->vertices()[n];
  const Edge& e = mesh->edges()[n - nv];
  return 0.5 * (mesh->vertices()[e.a] + mesh->vertices()[e.b]);
}

std::array<int, 6> p2_nodes(const Mesh& mesh, int t) {
  const auto& v = mesh.triangles()[t];
  const auto& e = mesh.triangle_edges()[t];
  const int nv = mesh.num_vertices();
  return {v[0], v[1], v[2], nv + e[0], nv + e[1], nv + e[2]};
}

P2Basis p2_basis(const Mesh& mesh, int t, const std::array<double, 3>& l) {
  const auto& g = mesh.bary_gradients(t);
  P2Basis b;
  for (int i = 0; i < 3; ++i) {
    b.N[i] = l[i] * (2.0 * l[i] - 1.0);
    b.grad[i] = (4.0 * l[i] - 1.0) * g[i];
  }
  // edge a is opposite vertex a, so its node couples the other two vertices
  for (int a = 0; a < 3; ++a) {
    const int i = (a + 1) % 3, j = (a + 2) % 3;
    b.N[3 + a] = 4.0 * l[i] * l[j];
    b.grad[3 + a] = 4.0 * (l[i] * g[j] + l[j] * g[i]);
  }
  return b;
}

std::array<Sym2, 6> p2_hessians(const Mesh& mesh, int t) {
  const auto& g = mesh.bary_gradients(t);
  std::array<Sym2, 6> h;
  for (int i = 0; i < 3; ++i)
    h[i] = {4.0 * g[i].x * g[i].x, 4.0 * g[i].y * g[i].y, 4.0 * g[i].x * g[i].y};
  for (int a = 0; a < 3; ++a) {
    const int i = (a + 1) % 3, j = (a + 2) % 3;
    h[3 + a] = {8.0 * g[i].x * g[j].x, 8.0 * g[i].y * g[j].y,
                4.0 * (g[i].x * g[j].y + g[i].y * g[j].x)};
  }
  return h;
}

Vec2 VectorFieldP2::eval_bary(int t, const std::array<double, 3>& l) const {
  const auto nodes = p2_nodes(*mesh, t);
  const auto b = p2_basis(*mesh, t, l);
  Vec2 out{0.0, 0.0};
  for (int i = 0; i < 6; ++i) {
    out.x += b.N[i] * values[2 * nodes[i]];
    out.y += b.N[i] * values[2 * nodes[i] + 1];
  }
  return out;
}

Vec2 VectorFieldP2::eval(const Vec2& p) const {
  const int t = mesh->locate(p);
  return eval_bary(t, mesh->barycentric(t, p));
}

std::array<std::array<double, 2>, 2> VectorFieldP2::grad_bary(
    int t, const std::array<double, 3>& l) const {
  const auto nodes = p2_nodes(*mesh, t);
  const auto b = p2_basis(*mesh, t, l);
  std::array<std::array<double, 2>, 2> g{{{0.0, 0.0}, {0.0, 0.0}}};
  for (int i = 0; i < 6; ++i) {
    const double vx = values[2 * nodes[i]], vy = values[2 * nodes[i] + 1];
    g[0][0] += vx * b.grad[i].x;
    g[0][1] += vx * b.grad[i].y;
    g[1][0] += vy * b.grad[i].x;
    g[1][1] += vy * b.grad[i].y;
  }
  return g;
}

Sym2 VectorFieldP2::sym_grad_bary(int t, const std::array<double, 3>& l) const {
  const auto g = grad_bary(t, l);
  return {g[0][0], g[1][1], 0.5 * (g[0][1] + g[1][0])};
}

double VectorFieldP2::div_bary(int t, const std::array<double, 3>& l) const {
  const auto g = grad_bary(t, l);
  return g[0][0] + g[1][1];
}

SpMat assemble_mass_p1(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles()[t];
    const double a = mesh.area(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(v[i], v[j], a * (i == j ? 1.0 / 6.0 : 1.0 / 12.0));
  }
  SpMat m(mesh.num_vertices(), mesh.num_vertices());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

SpMat assemble_stiffness_p1(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles()[t];
    const auto& g = mesh.bary_gradients(t);
    const double a = mesh.area(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(v[i], v[j], a * dot(g[i], g[j]));
  }
  SpMat k(mesh.num_vertices(), mesh.num_vertices());
  k.setFromTriplets(trips.begin(), trips.end());
  return k;
}

std::vector<double> lumped_mass_p1(const Mesh& mesh) {
  std::vector<double> w(mesh.num_vertices(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles()[t];
    const double third = mesh.area(t) / 3.0;
    for (int i = 0; i < 3; ++i) w[v[i]] += third;
  }
  return w;
}

double integrate_p1(const ScalarFieldP1& f) {
  double s = 0.0;
  for (int t = 0; t < f.mesh->num_triangles(); ++t) {
    const auto& v = f.mesh->triangles()[t];
    s += f.mesh->area(t) * (f.values[v[0]] + f.values[v[1]] + f.values[v[2]]) / 3.0;
  }
  return s;
}

namespace {

Eigen::VectorXd solve_mass(const Mesh& mesh, const Eigen::VectorXd& rhs) {
  const SpMat m = assemble_mass_p1(mesh);
  Eigen::SimplicialLDLT<SpMat> chol(m);
  if (chol.info() != Eigen::Success) throw std::runtime_error("transfer: mass factorization failed");
  return chol.solve(rhs);
}

}  // namespace

ScalarFieldP1 transfer_p1(const ScalarFieldP1& field, const Mesh& target, const TransferMap& map) {
  const Mesh& src = *field.mesh;
  if (map.kind == TransferMap::Kind::identity) {
    ScalarFieldP1 out(target);
    if (target.num_vertices() != src.num_vertices())
      throw std::invalid_argument("transfer_p1: identity map with mismatched meshes");
    out.values = field.values;
    return out;
  }

  const auto& rule = triangle_rule(2);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(target.num_vertices());

  if (map.kind == TransferMap::Kind::refine) {
    if (static_cast<int>(map.ancestor.size()) != target.num_triangles())
      throw std::invalid_argument("transfer_p1: map does not match target mesh");
    for (int t = 0; t < target.num_triangles(); ++t) {
      const int anc = map.ancestor[t];
      const auto& v = target.triangles()[t];
      const double a = target.area(t);
      for (const auto& q : rule.points) {
        const Vec2 p = target.point(t, q.l0, q.l1, q.l2);
        const double fval = field.eval_bary(anc, src.barycentric(anc, p));
        rhs[v[0]] += a * q.w * q.l0 * fval;
        rhs[v[1]] += a * q.w * q.l1 * fval;
        rhs[v[2]] += a * q.w * q.l2 * fval;
      }
    }
  } else {  // coarsen: integrate over old triangles inside their new parent
    if (static_cast<int>(map.ancestor.size()) != src.num_triangles())
      throw std::invalid_argument("transfer_p1: map does not match source mesh");
    for (int t = 0; t < src.num_triangles(); ++t) {
      const int parent = map.ancestor[t];
      const auto& v = target.triangles()[parent];
      const double a = src.area(t);
      for (const auto& q : rule.points) {
        const Vec2 p = src.point(t, q.l0, q.l1, q.l2);
        const double fval = field.eval_bary(t, {q.l0, q.l1, q.l2});
        const auto l = target.barycentric(parent, p);
        rhs[v[0]] += a * q.w * l[0] * fval;
        rhs[v[1]] += a * q.w * l[1] * fval;
        rhs[v[2]] += a * q.w * l[2] * fval;
      }
    }
  }

  const Eigen::VectorXd x = solve_mass(target, rhs);
  ScalarFieldP1 out(target);
  for (int i = 0; i < target.num_vertices(); ++i) out.values[i] = x[i];
  return out;
}

VectorFieldP2 transfer_p2(const VectorFieldP2& field, const Mesh& target, const TransferMap& map) {
  const Mesh& src = *field.mesh;
  VectorFieldP2 out(target);
  if (map.kind == TransferMap::Kind::identity) {
    if (target.num_vertices() != src.num_vertices() || target.num_edges() != src.num_edges())
      throw std::invalid_argument("transfer_p2: identity map with mismatched meshes");
    out.values = field.values;
    return out;
  }

  // node -> an adjacent target triangle, to know the ancestry
  const int nn = out.num_nodes();
  std::vector<int> node_tri(nn, -1);
  for (int t = 0; t < target.num_triangles(); ++t)
    for (int n : p2_nodes(target, t))
      if (node_tri[n] == -1) node_tri[n] = t;

  if (map.kind == TransferMap::Kind::refine) {
    for (int n = 0; n < nn; ++n) {
      const Vec2 p = out.node_position(n);
      const int anc = map.ancestor[node_tri[n]];
      const Vec2 val = field.eval_bary(anc, src.barycentric(anc, p));
      out.values[2 * n] = val.x;
      out.values[2 * n + 1] = val.y;
    }
  } else {
    // children of each parent, to evaluate on the right source triangle
    std::vector<std::vector<int>> children(target.num_triangles());
    for (int t = 0; t < src.num_triangles(); ++t) children[map.ancestor[t]].push_back(t);
    for (int n = 0; n < nn; ++n) {
      const Vec2 p = out.node_position(n);
      int best = -1;
      double best_min = -1e300;
      for (int c : children[node_tri[n]]) {
        const auto l = src.barycentric(c, p);
        const double m = std::min({l[0], l[1], l[2]});
        if (m > best_min) {
          best_min = m;
          best = c;
        }
      }
      const Vec2 val = field.eval_bary(best, src.barycentric(best, p));
      out.values[2 * n] = val.x;
      out.values[2 * n + 1] = val.y;
    }
  }
  return out;
}

int refine_ancestor(const TransferMap& map, int new_tri) {
  if (map.kind == TransferMap::Kind::coarsen)
    throw std::invalid_argument("refine_ancestor: wrong map kind");
  return map.ancestor[new_tri];
}

ScalarFieldP1 transfer_p1_path(const ScalarFieldP1& f, const std::vector<Hop>& hops) {
  ScalarFieldP1 cur = f;
  for (const Hop& h : hops) cur = transfer_p1(cur, *h.mesh, h.map);
  return cur;
}

VectorFieldP2 transfer_p2_path(const VectorFieldP2& f, const std::vector<Hop>& hops) {
  VectorFieldP2 cur = f;
  for (const Hop& h : hops) cur = transfer_p2(cur, *h.mesh, h.map);
  return cur;
}

}  // namespace chns
