#include "chns/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chns {

namespace {

std::string hexd(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_hexd(const std::string& s) {
  const char* c = s.c_str();
  char* end = nullptr;
  const double x = std::strtod(c, &end);
  if (end == c) throw std::runtime_error("checkpoint: bad number '" + s + "'");
  return x;
}

void expect(std::istream& in, const std::string& want) {
  std::string got;
  in >> got;
  if (got != want) throw std::runtime_error("checkpoint: expected '" + want + "', got '" + got + "'");
}

void write_values(std::ofstream& out, const char* tag, const std::vector<double>& vals) {
  out << tag << " " << vals.size() << "\n";
  for (double v : vals) out << hexd(v) << "\n";
}

std::vector<double> read_values(std::istream& in, const char* tag) {
  expect(in, tag);
  std::size_t n = 0;
  in >> n;
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    in >> s;
    vals[i] = parse_hexd(s);
  }
  return vals;
}

}  // namespace

void save_checkpoint(const State& state, double time, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  const Mesh& mesh = *state.mesh;

  out << "chns2d-checkpoint 1\n";
  out << "step " << state.k << "\n";
  out << "time " << hexd(time) << "\n";
  out << "ssn_iters " << state.ssn_iters << "\n";
  out << "mesh " << mesh.num_vertices() << " " << mesh.num_triangles() << " "
      << hexd(mesh.width()) << " " << hexd(mesh.height()) << "\n";
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const Vec2& p = mesh.vertices()[i];
    out << hexd(p.x) << " " << hexd(p.y) << " " << int(mesh.vertex_original()[i]) << "\n";
  }
  for (const auto& t : mesh.triangles()) out << t[0] << " " << t[1] << " " << t[2] << "\n";

  write_values(out, "phi", state.phi.values);
  write_values(out, "mu", state.mu.values);
  write_values(out, "p", state.p.values);
  write_values(out, "v", state.v.values);
  write_values(out, "prev_phi_proj", state.prev_phi_proj.values);
  write_values(out, "prev_v", state.prev_v.values);
  write_values(out, "prev_rho_old", state.prev_rho_old.values);

  out << "flux " << state.flux_J.size() << "\n";
  for (const Vec2& j : state.flux_J) out << hexd(j.x) << " " << hexd(j.y) << "\n";
  out << "active " << state.active.size() << "\n";
  for (auto a : state.active) out << int(a) << "\n";
  out << "end\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  expect(in, "chns2d-checkpoint");
  int version = 0;
  in >> version;
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version");

  expect(in, "step");
  int k = 0;
  in >> k;
  expect(in, "time");
  std::string ts;
  in >> ts;
  const double time = parse_hexd(ts);
  expect(in, "ssn_iters");
  int iters = 0;
  in >> iters;

  expect(in, "mesh");
  int nv = 0, nt = 0;
  std::string ws, hs;
  in >> nv >> nt >> ws >> hs;
  std::vector<Vec2> verts(nv);
  std::vector<std::uint8_t> original(nv);
  for (int i = 0; i < nv; ++i) {
    std::string xs, ys;
    int orig = 0;
    in >> xs >> ys >> orig;
    verts[i] = {parse_hexd(xs), parse_hexd(ys)};
    original[i] = static_cast<std::uint8_t>(orig);
  }
  std::vector<std::array<int, 3>> tris(nt);
  for (int t = 0; t < nt; ++t) in >> tris[t][0] >> tris[t][1] >> tris[t][2];
  auto mesh = std::make_shared<const Mesh>(std::move(verts), std::move(tris), std::move(original),
                                           parse_hexd(ws), parse_hexd(hs));

  Checkpoint cp{State(mesh)};
  cp.state.k = k;
  cp.time = time;
  cp.state.ssn_iters = iters;
  cp.state.phi.values = read_values(in, "phi");
  cp.state.mu.values = read_values(in, "mu");
  cp.state.p.values = read_values(in, "p");
  cp.state.v.values = read_values(in, "v");
  cp.state.prev_phi_proj.values = read_values(in, "prev_phi_proj");
  cp.state.prev_v.values = read_values(in, "prev_v");
  cp.state.prev_rho_old.values = read_values(in, "prev_rho_old");

  expect(in, "flux");
  std::size_t nf = 0;
  in >> nf;
  cp.state.flux_J.resize(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    std::string xs, ys;
    in >> xs >> ys;
    cp.state.flux_J[i] = {parse_hexd(xs), parse_hexd(ys)};
  }
  expect(in, "active");
  std::size_t na = 0;
  in >> na;
  cp.state.active.resize(na);
  for (std::size_t i = 0; i < na; ++i) {
    int a = 0;
    in >> a;
    cp.state.active[i] = static_cast<std::int8_t>(a);
  }
  expect(in, "end");
  cp.state.check();
  return cp;
}

}  // namespace chns
