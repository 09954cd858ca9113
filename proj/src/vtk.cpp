#include "chns/vtk.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace chns {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("vtk: cannot open '" + path + "' for writing");
  return out;
}

void write_header(std::ofstream& out, const char* title) {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
}

}  // namespace

void write_fields_vtk(const State& state, const std::string& path, bool refined) {
  const Mesh& mesh = *state.mesh;
  auto out = open_out(path);
  write_header(out, "chns2d fields");

  const int nv = mesh.num_vertices();
  if (!refined) {
    out << "POINTS " << nv << " double\n";
    for (const Vec2& p : mesh.vertices()) out << num(p.x) << " " << num(p.y) << " 0\n";
    const int nt = mesh.num_triangles();
    out << "CELLS " << nt << " " << 4 * nt << "\n";
    for (const auto& t : mesh.triangles()) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << "CELL_TYPES " << nt << "\n";
    for (int t = 0; t < nt; ++t) out << "5\n";

    out << "POINT_DATA " << nv << "\n";
    auto scalars = [&](const char* name, const std::vector<double>& vals) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (int i = 0; i < nv; ++i) out << num(vals[i]) << "\n";
    };
    scalars("phi", state.phi.values);
    scalars("mu", state.mu.values);
    scalars("p", state.p.values);
    out << "VECTORS velocity double\n";
    for (int i = 0; i < nv; ++i)
      out << num(state.v.values[2 * i]) << " " << num(state.v.values[2 * i + 1]) << " 0\n";
    return;
  }

  // refined view: all P2 nodes become points, each triangle splits in four
  const int nn = nv + mesh.num_edges();
  out << "POINTS " << nn << " double\n";
  for (int n = 0; n < nn; ++n) {
    const Vec2 p = state.v.node_position(n);
    out << num(p.x) << " " << num(p.y) << " 0\n";
  }
  const int nt = 4 * mesh.num_triangles();
  out << "CELLS " << nt << " " << 4 * nt << "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto n = p2_nodes(mesh, t);
    // corners (v0,m2,m1), (v1,m0,m2), (v2,m1,m0), center (m0,m1,m2)
    out << "3 " << n[0] << " " << n[5] << " " << n[4] << "\n";
    out << "3 " << n[1] << " " << n[3] << " " << n[5] << "\n";
    out << "3 " << n[2] << " " << n[4] << " " << n[3] << "\n";
    out << "3 " << n[3] << " " << n[4] << " " << n[5] << "\n";
  }
  out << "CELL_TYPES " << nt << "\n";
  for (int t = 0; t < nt; ++t) out << "5\n";

  out << "POINT_DATA " << nn << "\n";
  auto p1_at_node = [&](const std::vector<double>& vals, int n) {
    if (n < nv) return vals[n];
    const Edge& e = mesh.edges()[n - nv];
    return 0.5 * (vals[e.a] + vals[e.b]);
  };
  auto scalars = [&](const char* name, const std::vector<double>& vals) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int n = 0; n < nn; ++n) out << num(p1_at_node(vals, n)) << "\n";
  };
  scalars("phi", state.phi.values);
  scalars("mu", state.mu.values);
  scalars("p", state.p.values);
  out << "VECTORS velocity double\n";
  for (int n = 0; n < nn; ++n)
    out << num(state.v.values[2 * n]) << " " << num(state.v.values[2 * n + 1]) << " 0\n";
}

void write_indicators_vtk(const Mesh& mesh, const IndicatorField& ind, const std::string& path) {
  auto out = open_out(path);
  write_header(out, "chns2d indicators");
  const int nv = mesh.num_vertices();
  const int nt = mesh.num_triangles();
  out << "POINTS " << nv << " double\n";
  for (const Vec2& p : mesh.vertices()) out << num(p.x) << " " << num(p.y) << " 0\n";
  out << "CELLS " << nt << " " << 4 * nt << "\n";
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << nt << "\n";
  for (int t = 0; t < nt; ++t) out << "5\n";
  out << "CELL_DATA " << nt << "\n";
  auto cell_scalars = [&](const char* name, auto&& f) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int t = 0; t < nt; ++t) out << num(f(t)) << "\n";
  };
  cell_scalars("eta_t1", [&](int t) { return ind.eta_t[t][0]; });
  cell_scalars("eta_t2", [&](int t) { return ind.eta_t[t][1]; });
  cell_scalars("eta_t3", [&](int t) { return ind.eta_t[t][2]; });
  cell_scalars("eta_combined_t", [&](int t) { return ind.combined_t(t); });
  cell_scalars("eta_combined_te", [&](int t) { return ind.combined_te(t, mesh); });
}

}  // namespace chns
