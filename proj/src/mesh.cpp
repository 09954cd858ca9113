#include "chns/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace chns {

namespace {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

Mesh::Mesh(std::vector<Vec2> verts, std::vector<std::array<int, 3>> tris,
           std::vector<std::uint8_t> vert_original, double width, double height)
    : verts_(std::move(verts)),
      tris_(std::move(tris)),
      vert_original_(std::move(vert_original)),
      width_(width),
      height_(height) {
  finalize();
}

Mesh Mesh::rectangle(double width, double height, int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("rectangle: nx, ny must be >= 1");
  if (!(width > 0.0) || !(height > 0.0))
    throw std::invalid_argument("rectangle: width, height must be positive");

  std::vector<Vec2> verts;
  verts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double x = (i == nx) ? width : width * i / nx;
      const double y = (j == ny) ? height : height * j / ny;
      verts.push_back({x, y});
    }
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  std::vector<std::array<int, 3>> tris;
  tris.reserve(static_cast<std::size_t>(2) * nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int p00 = vid(i, j), p10 = vid(i + 1, j);
      const int p01 = vid(i, j + 1), p11 = vid(i + 1, j + 1);
      // The refinement edge is the diagonal (always the longest edge); the
      // peak comes first.
      if ((i + j) % 2 == 0) {
        tris.push_back({p10, p11, p00});
        tris.push_back({p01, p00, p11});
      } else {
        tris.push_back({p00, p10, p01});
        tris.push_back({p11, p01, p10});
      }
    }
  std::vector<std::uint8_t> original(verts.size(), 1);
  return Mesh(std::move(verts), std::move(tris), std::move(original), width, height);
}

void Mesh::finalize() {
  const int nt = num_triangles();
  edges_.clear();
  tri_edges_.assign(nt, {-1, -1, -1});

  std::unordered_map<std::uint64_t, int> index;
  index.reserve(static_cast<std::size_t>(nt) * 2);
  for (int t = 0; t < nt; ++t) {
    const auto& v = tris_[t];
    // local edge a is opposite local vertex a
    const std::array<std::array<int, 2>, 3> le = {{{v[1], v[2]}, {v[2], v[0]}, {v[0], v[1]}}};
    for (int a = 0; a < 3; ++a) {
      const std::uint64_t key = edge_key(le[a][0], le[a][1]);
      auto it = index.find(key);
      if (it == index.end()) {
        Edge e;
        e.a = std::min(le[a][0], le[a][1]);
        e.b = std::max(le[a][0], le[a][1]);
        e.t0 = t;
        index.emplace(key, static_cast<int>(edges_.size()));
        tri_edges_[t][a] = static_cast<int>(edges_.size());
        edges_.push_back(e);
      } else {
        Edge& e = edges_[it->second];
        if (e.t1 != -1) throw std::runtime_error("mesh: edge shared by more than two triangles");
        e.t1 = t;  // t0 < t1 holds since triangles are scanned in order
        tri_edges_[t][a] = it->second;
      }
    }
  }

  vert_boundary_.assign(verts_.size(), 0);
  const double eps = 1e-12 * std::max(width_, height_);
  for (Edge& e : edges_) {
    if (e.t1 != -1) continue;
    vert_boundary_[e.a] = 1;
    vert_boundary_[e.b] = 1;
    const Vec2 pa = verts_[e.a], pb = verts_[e.b];
    if (std::abs(pa.y) <= eps && std::abs(pb.y) <= eps)
      e.side = BoundarySide::bottom;
    else if (std::abs(pa.y - height_) <= eps && std::abs(pb.y - height_) <= eps)
      e.side = BoundarySide::top;
    else if (std::abs(pa.x) <= eps && std::abs(pb.x) <= eps)
      e.side = BoundarySide::left;
    else if (std::abs(pa.x - width_) <= eps && std::abs(pb.x - width_) <= eps)
      e.side = BoundarySide::right;
    else
      throw std::runtime_error("mesh: boundary edge not on a rectangle side");
  }

  const int ne = num_edges();
  area_.resize(nt);
  h_t_.resize(nt);
  grad_.resize(nt);
  h_e_.resize(ne);
  normal_.resize(ne);
  total_area_ = 0.0;

  for (int t = 0; t < nt; ++t) {
    const Vec2 p0 = verts_[tris_[t][0]], p1 = verts_[tris_[t][1]], p2 = verts_[tris_[t][2]];
    const double a = triangle_area(p0, p1, p2);
    if (!(a > 0.0)) throw std::runtime_error("mesh: non-positive triangle area");
    area_[t] = a;
    total_area_ += a;
    h_t_[t] = std::max({norm(p1 - p0), norm(p2 - p1), norm(p0 - p2)});
    // grad of hat function at vertex i: rotate opposite edge by 90 degrees
    const double inv2a = 1.0 / (2.0 * a);
    grad_[t][0] = {(p1.y - p2.y) * inv2a, (p2.x - p1.x) * inv2a};
    grad_[t][1] = {(p2.y - p0.y) * inv2a, (p0.x - p2.x) * inv2a};
    grad_[t][2] = {(p0.y - p1.y) * inv2a, (p1.x - p0.x) * inv2a};
  }

  for (int e = 0; e < ne; ++e) {
    const Vec2 pa = verts_[edges_[e].a], pb = verts_[edges_[e].b];
    const Vec2 tang = pb - pa;
    h_e_[e] = norm(tang);
    Vec2 nrm{tang.y / h_e_[e], -tang.x / h_e_[e]};
    const int t0 = edges_[e].t0;
    const Vec2 c0 = centroid(t0);
    const Vec2 mid = 0.5 * (pa + pb);
    if (edges_[e].t1 == -1) {
      // boundary: outward, i.e. away from the only adjacent triangle
      if (dot(nrm, c0 - mid) > 0.0) nrm = {-nrm.x, -nrm.y};
    } else {
      // from lower triangle number (t0) towards higher (t1)
      if (dot(nrm, mid - c0) < 0.0) nrm = {-nrm.x, -nrm.y};
    }
    normal_[e] = nrm;
  }
}

Vec2 Mesh::centroid(int t) const {
  const auto& v = tris_[t];
  return {(verts_[v[0]].x + verts_[v[1]].x + verts_[v[2]].x) / 3.0,
          (verts_[v[0]].y + verts_[v[1]].y + verts_[v[2]].y) / 3.0};
}

Vec2 Mesh::point(int t, double l0, double l1, double l2) const {
  const auto& v = tris_[t];
  return {l0 * verts_[v[0]].x + l1 * verts_[v[1]].x + l2 * verts_[v[2]].x,
          l0 * verts_[v[0]].y + l1 * verts_[v[1]].y + l2 * verts_[v[2]].y};
}

std::array<double, 3> Mesh::barycentric(int t, const Vec2& p) const {
  const auto& v = tris_[t];
  const Vec2 p0 = verts_[v[0]], p1 = verts_[v[1]], p2 = verts_[v[2]];
  const double a = area_[t];
  const double l1 = triangle_area(p0, p, p2) / a;
  const double l2 = triangle_area(p0, p1, p) / a;
  return {1.0 - l1 - l2, l1, l2};
}

int Mesh::locate(const Vec2& p) const {
  // brute scan with tolerance; meshes here are modest and locate is not hot
  const double tol = -1e-12;
  for (int t = 0; t < num_triangles(); ++t) {
    const auto l = barycentric(t, p);
    if (l[0] >= tol && l[1] >= tol && l[2] >= tol) return t;
  }
  throw std::runtime_error("locate: point outside mesh");
}

double Mesh::min_angle() const {
  double amin = 4.0;
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& v = tris_[t];
    for (int i = 0; i < 3; ++i) {
      const Vec2 a = verts_[v[i]], b = verts_[v[(i + 1) % 3]], c = verts_[v[(i + 2) % 3]];
      const Vec2 u = b - a, w = c - a;
      const double ang = std::atan2(std::abs(cross(u, w)), dot(u, w));
      amin = std::min(amin, ang);
    }
  }
  return amin;
}

double Mesh::max_shape_ratio() const {
  double r = 0.0;
  for (int t = 0; t < num_triangles(); ++t) r = std::max(r, h_t_[t] * h_t_[t] / area_[t]);
  return r;
}

// ---------------------------------------------------------------------------
// refinement

namespace {

struct RefineWork {
  std::vector<std::array<int, 3>> tris;
  std::vector<std::uint8_t> alive;
  std::vector<int> ancestor;  // old-mesh triangle id
  std::vector<Vec2> verts;
  std::vector<std::uint8_t> vert_original;
  // alive triangles adjacent to each (sorted) vertex pair
  std::unordered_map<std::uint64_t, std::array<int, 2>> edge_tris;
  std::unordered_map<std::uint64_t, int> midpoint;

  void edge_add(int a, int b, int t) {
    const std::uint64_t key = edge_key(a, b);
    auto it = edge_tris.find(key);
    if (it == edge_tris.end()) {
      edge_tris.emplace(key, std::array<int, 2>{t, -1});
      return;
    }
    auto& slot = it->second;
    if (slot[0] == t || slot[1] == t) return;
    if (slot[0] == -1)
      slot[0] = t;
    else if (slot[1] == -1)
      slot[1] = t;
    else
      throw std::runtime_error("refine: more than two triangles at an edge");
  }

  void edge_remove(int a, int b, int t) {
    auto it = edge_tris.find(edge_key(a, b));
    if (it == edge_tris.end()) throw std::runtime_error("refine: missing edge entry");
    if (it->second[0] == t)
      it->second[0] = -1;
    else if (it->second[1] == t)
      it->second[1] = -1;
    else
      throw std::runtime_error("refine: triangle not registered at edge");
  }

  int neighbor_across(int a, int b, int t) const {
    auto it = edge_tris.find(edge_key(a, b));
    if (it == edge_tris.end()) return -1;
    if (it->second[0] == t) return it->second[1];
    if (it->second[1] == t) return it->second[0];
    return -1;
  }

  int add_tri(const std::array<int, 3>& v, int anc) {
    tris.push_back(v);
    alive.push_back(1);
    ancestor.push_back(anc);
    const int t = static_cast<int>(tris.size()) - 1;
    edge_add(v[1], v[2], t);
    edge_add(v[2], v[0], t);
    edge_add(v[0], v[1], t);
    return t;
  }

  void kill_tri(int t) {
    alive[t] = 0;
    const auto& v = tris[t];
    edge_remove(v[1], v[2], t);
    edge_remove(v[2], v[0], t);
    edge_remove(v[0], v[1], t);
  }

  int midpoint_vertex(int a, int b) {
    const std::uint64_t key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    verts.push_back({0.5 * (verts[a].x + verts[b].x), 0.5 * (verts[a].y + verts[b].y)});
    vert_original.push_back(0);
    const int m = static_cast<int>(verts.size()) - 1;
    midpoint.emplace(key, m);
    return m;
  }

  // Splits t (and its compatible partner) at the refinement edge; recursive
  // closure makes an incompatible partner compatible first.
  void bisect(int t) {
    if (!alive[t]) return;
    const int v0 = tris[t][0], v1 = tris[t][1], v2 = tris[t][2];
    int other = neighbor_across(v1, v2, t);
    while (other != -1) {
      const std::uint64_t e = edge_key(v1, v2);
      if (edge_key(tris[other][1], tris[other][2]) == e) break;  // compatible
      bisect(other);
      other = neighbor_across(v1, v2, t);
    }
    const int m = midpoint_vertex(v1, v2);
    kill_tri(t);
    add_tri({m, v0, v1}, ancestor[t]);
    add_tri({m, v2, v0}, ancestor[t]);
    if (other != -1) {
      const int w0 = tris[other][0], w1 = tris[other][1], w2 = tris[other][2];
      kill_tri(other);
      add_tri({m, w0, w1}, ancestor[other]);
      add_tri({m, w2, w0}, ancestor[other]);
    }
  }
};

}  // namespace

std::pair<Mesh, TransferMap> Mesh::refine(const std::vector<int>& marked) const {
  for (int t : marked)
    if (t < 0 || t >= num_triangles()) throw std::invalid_argument("refine: index out of range");

  if (marked.empty()) {
    TransferMap map;
    map.kind = TransferMap::Kind::identity;
    map.ancestor.resize(num_triangles());
    for (int t = 0; t < num_triangles(); ++t) map.ancestor[t] = t;
    return {*this, map};
  }

  RefineWork w;
  w.tris = tris_;
  w.alive.assign(tris_.size(), 1);
  w.ancestor.resize(tris_.size());
  for (int t = 0; t < num_triangles(); ++t) w.ancestor[t] = t;
  w.verts = verts_;
  w.vert_original = vert_original_;
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& v = tris_[t];
    w.edge_add(v[1], v[2], t);
    w.edge_add(v[2], v[0], t);
    w.edge_add(v[0], v[1], t);
  }

  for (int t : marked) w.bisect(t);

  std::vector<std::array<int, 3>> tris;
  TransferMap map;
  map.kind = TransferMap::Kind::refine;
  for (std::size_t t = 0; t < w.tris.size(); ++t) {
    if (!w.alive[t]) continue;
    tris.push_back(w.tris[t]);
    map.ancestor.push_back(w.ancestor[t]);
  }
  Mesh out(std::move(w.verts), std::move(tris), std::move(w.vert_original), width_, height_);
  return {std::move(out), std::move(map)};
}

// ---------------------------------------------------------------------------
// coarsening

std::vector<NodeStar> Mesh::find_node_stars() const {
  const int nv = num_vertices();
  std::vector<std::vector<int>> star(nv);
  for (int t = 0; t < num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) star[tris_[t][i]].push_back(t);

  std::vector<NodeStar> out;
  for (int c = 0; c < nv; ++c) {
    if (vert_original_[c]) continue;
    const bool bnd = vertex_on_boundary(c);
    const std::size_t want = bnd ? 2 : 4;
    if (star[c].size() != want) continue;
    bool all_peak = true;
    for (int t : star[c]) all_peak &= (tris_[t][0] == c);
    if (!all_peak) continue;

    // sibling pairing: (c, v0, v1) pairs with (c, v2, v0) across edge (c, v0)
    bool ok = true;
    std::vector<std::uint8_t> used(star[c].size(), 0);
    int pairs = 0;
    for (std::size_t i = 0; i < star[c].size() && ok; ++i) {
      if (used[i]) continue;
      const int ti = star[c][i];
      int mate = -1;
      for (std::size_t j = 0; j < star[c].size(); ++j) {
        if (j == i || used[j]) continue;
        const int tj = star[c][j];
        if (tris_[ti][1] == tris_[tj][2]) {
          mate = static_cast<int>(j);
          break;
        }
      }
      if (mate == -1) {
        ok = false;
        break;
      }
      used[i] = used[mate] = 1;
      ++pairs;
    }
    if (!ok || pairs != static_cast<int>(want / 2)) continue;

    NodeStar s;
    s.center = c;
    s.tris = star[c];
    s.boundary = bnd;
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<Mesh, TransferMap> Mesh::coarsen(const std::vector<NodeStar>& stars) const {
  if (stars.empty()) {
    TransferMap map;
    map.kind = TransferMap::Kind::identity;
    map.ancestor.resize(num_triangles());
    for (int t = 0; t < num_triangles(); ++t) map.ancestor[t] = t;
    map.vertex_map.resize(num_vertices());
    for (int v = 0; v < num_vertices(); ++v) map.vertex_map[v] = v;
    return {*this, map};
  }

  std::vector<std::uint8_t> tri_used(num_triangles(), 0);
  std::vector<std::uint8_t> vert_removed(num_vertices(), 0);
  for (const auto& s : stars) {
    if (s.center < 0 || s.center >= num_vertices() || vert_removed[s.center])
      throw std::invalid_argument("coarsen: invalid or overlapping stars");
    if (vert_original_[s.center]) throw std::invalid_argument("coarsen: original vertex");
    vert_removed[s.center] = 1;
    const std::size_t want = s.boundary ? 2 : 4;
    if (s.tris.size() != want) throw std::invalid_argument("coarsen: wrong star size");
    for (int t : s.tris) {
      if (t < 0 || t >= num_triangles() || tri_used[t])
        throw std::invalid_argument("coarsen: stale or overlapping star triangle");
      if (tris_[t][0] != s.center) throw std::invalid_argument("coarsen: peak mismatch");
      tri_used[t] = 1;
    }
  }

  TransferMap map;
  map.kind = TransferMap::Kind::coarsen;
  map.ancestor.assign(num_triangles(), -1);
  map.vertex_map.assign(num_vertices(), -1);

  std::vector<Vec2> verts;
  std::vector<std::uint8_t> original;
  verts.reserve(verts_.size());
  for (int v = 0; v < num_vertices(); ++v) {
    if (vert_removed[v]) continue;
    map.vertex_map[v] = static_cast<int>(verts.size());
    verts.push_back(verts_[v]);
    original.push_back(vert_original_[v]);
  }

  std::vector<std::array<int, 3>> tris;
  for (int t = 0; t < num_triangles(); ++t) {
    if (tri_used[t]) continue;
    map.ancestor[t] = static_cast<int>(tris.size());
    tris.push_back({map.vertex_map[tris_[t][0]], map.vertex_map[tris_[t][1]],
                    map.vertex_map[tris_[t][2]]});
  }
  for (const auto& s : stars) {
    std::vector<std::uint8_t> used(s.tris.size(), 0);
    for (std::size_t i = 0; i < s.tris.size(); ++i) {
      if (used[i]) continue;
      const int ti = s.tris[i];
      int tj = -1;
      std::size_t jmate = 0;
      for (std::size_t j = 0; j < s.tris.size(); ++j) {
        if (j == i || used[j]) continue;
        if (tris_[ti][1] == tris_[s.tris[j]][2]) {
          tj = s.tris[j];
          jmate = j;
          break;
        }
      }
      if (tj == -1) throw std::invalid_argument("coarsen: star lost sibling structure");
      used[i] = used[jmate] = 1;
      // (c, v0, v1) + (c, v2, v0) -> (v0, v1, v2)
      const int v0 = tris_[ti][1], v1 = tris_[ti][2], v2 = tris_[tj][1];
      const int parent = static_cast<int>(tris.size());
      tris.push_back({map.vertex_map[v0], map.vertex_map[v1], map.vertex_map[v2]});
      map.ancestor[ti] = parent;
      map.ancestor[tj] = parent;
    }
  }

  Mesh out(std::move(verts), std::move(tris), std::move(original), width_, height_);
  return {std::move(out), std::move(map)};
}

}  // namespace chns
