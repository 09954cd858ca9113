// Conforming triangle meshes of a rectangle with newest-vertex bisection
// refinement and nodeStar coarsening.
//
// Conventions, fixed for reproducibility:
//  - triangles are counterclockwise; local vertex 0 is the peak (the newest
//    vertex), the refinement edge is the opposite edge (v1, v2);
//  - bisecting (v0, v1, v2) at the midpoint m of (v1, v2) yields the children
//    (m, v0, v1) and (m, v2, v0), in this order;
//  - triangles and edges are numbered by insertion order; edge normals point
//    from the adjacent triangle with lower global number to the one with
//    higher global number, outward on the boundary.
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chns/geometry.hpp"

namespace chns {

enum class BoundarySide : std::uint8_t { none = 0, bottom = 1, right = 2, top = 3, left = 4 };

struct Edge {
  int a = -1, b = -1;    // vertex ids, a < b
  int t0 = -1, t1 = -1;  // adjacent triangles, t0 < t1; t1 = -1 on the boundary
  BoundarySide side = BoundarySide::none;
};

struct NodeStar {
  int center = -1;
  std::vector<int> tris;  // 4 interior / 2 boundary, each with peak == center
  bool boundary = false;
};

// Relates two meshes produced by one refine or coarsen call.
struct TransferMap {
  enum class Kind { identity, refine, coarsen } kind = Kind::identity;
  // refine: ancestor[new_tri] = old triangle containing it.
  // coarsen: ancestor[old_tri] = new triangle containing it.
  std::vector<int> ancestor;
  // coarsen only: new id of each surviving old vertex, -1 for removed centers.
  std::vector<int> vertex_map;
};

class Mesh {
 public:
  // Structured criss-cross triangulation of (0,width)x(0,height); the
  // diagonal direction alternates with the cell parity.
  static Mesh rectangle(double width, double height, int nx, int ny);

  // Raw constructor for tests and deserialization. Triangles must be CCW with
  // the peak-first ordering described above.
  Mesh(std::vector<Vec2> verts, std::vector<std::array<int, 3>> tris,
       std::vector<std::uint8_t> vert_original, double width, double height);

  // Bisects every marked triangle at least once, restoring conformity by
  // recursive closure. Marked indices out of range throw.
  std::pair<Mesh, TransferMap> refine(const std::vector<int>& marked) const;

  // Vertices eligible for coarsening: non-original vertices whose star is
  // 4 triangles (interior) or 2 (boundary), all with the vertex as peak.
  std::vector<NodeStar> find_node_stars() const;

  // Removes the star centers, merging each sibling pair back into its parent.
  // Stars must be pairwise disjoint and valid for this mesh.
  std::pair<Mesh, TransferMap> coarsen(const std::vector<NodeStar>& stars) const;

  int num_vertices() const { return static_cast<int>(verts_.size()); }
  int num_triangles() const { return static_cast<int>(tris_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Vec2>& vertices() const { return verts_; }
  const std::vector<std::array<int, 3>>& triangles() const { return tris_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::array<int, 3>>& triangle_edges() const { return tri_edges_; }
  const std::vector<std::uint8_t>& vertex_original() const { return vert_original_; }
  bool vertex_on_boundary(int v) const { return vert_boundary_[v] != 0; }

  double width() const { return width_; }
  double height() const { return height_; }

  double area(int t) const { return area_[t]; }
  double diameter(int t) const { return h_t_[t]; }  // longest edge
  double total_area() const { return total_area_; }
  Vec2 centroid(int t) const;

  double edge_length(int e) const { return h_e_[e]; }
  // Unit normal following the global-number convention.
  Vec2 edge_normal(int e) const { return normal_[e]; }

  // Barycentric gradients of the three P1 hat functions on triangle t.
  const std::array<Vec2, 3>& bary_gradients(int t) const { return grad_[t]; }

  Vec2 point(int t, double l0, double l1, double l2) const;

  // Barycentric coordinates of p in triangle t (may be outside [0,1]).
  std::array<double, 3> barycentric(int t, const Vec2& p) const;

  // Triangle containing p (walk search); throws if p is outside the domain.
  int locate(const Vec2& p) const;

  double min_angle() const;
  double max_shape_ratio() const;  // max over T of h_T^2 / area(T)

 private:
  void finalize();

  std::vector<Vec2> verts_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<std::uint8_t> vert_original_;
  std::vector<std::uint8_t> vert_boundary_;
  double width_ = 0.0, height_ = 0.0;

  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<double> area_, h_t_, h_e_;
  std::vector<Vec2> normal_;
  std::vector<std::array<Vec2, 3>> grad_;
  double total_area_ = 0.0;
};

}  // namespace chns
