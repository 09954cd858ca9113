#include "chns/assembly.hpp"

#include <cstring>
#include <stdexcept>
#include <unordered_set>

namespace chns {

const TriangleRule& volume_rule() {
  // Degree 6 integrates every polynomial term of the forms exactly (the
  // highest is P1 x P2 x P2 in the momentum time term plus its gradient
  // products); the monitor shares the rule so the energy algebra telescopes.
  return triangle_rule(6);
}

const VelocityBC& BCSpec::side(BoundarySide s) const {
  switch (s) {
    case BoundarySide::bottom: return bottom;
    case BoundarySide::right: return right;
    case BoundarySide::top: return top;
    case BoundarySide::left: return left;
    default: throw std::invalid_argument("BCSpec::side: interior edge");
  }
}

DofLayout DofLayout::coupled(const Mesh& m) {
  DofLayout d;
  d.nv = m.num_vertices();
  d.nn2 = m.num_vertices() + m.num_edges();
  d.off_v = 0;
  d.off_p = 2 * d.nn2;
  d.off_phi = d.off_p + d.nv;
  d.off_mu = d.off_phi + d.nv;
  d.lambda_row = d.off_mu + d.nv;
  d.total = d.lambda_row + 1;
  return d;
}

SpMat CoupledSystem::matrix() const {
  SpMat a(dofs.total, dofs.total);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

SpMat InitPhaseSystem::matrix() const {
  SpMat a(2 * nv, 2 * nv);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

SpMat InitFlowSystem::matrix() const {
  SpMat a(total, total);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

double trilinear_a(const VectorFieldP2& u, const VectorFieldP2& v, const VectorFieldP2& w) {
  if (u.mesh != v.mesh || v.mesh != w.mesh)
    throw std::invalid_argument("trilinear_a: fields on different meshes");
  const Mesh& mesh = *u.mesh;
  const auto& rule = volume_rule();
  double acc = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.area(t);
    for (const auto& q : rule.points) {
      const std::array<double, 3> l{q.l0, q.l1, q.l2};
      const Vec2 uq = u.eval_bary(t, l);
      const auto gv = v.grad_bary(t, l);
      const auto gw = w.grad_bary(t, l);
      const Vec2 vq = v.eval_bary(t, l);
      const Vec2 wq = w.eval_bary(t, l);
      const Vec2 ugv{uq.x * gv[0][0] + uq.y * gv[0][1], uq.x * gv[1][0] + uq.y * gv[1][1]};
      const Vec2 ugw{uq.x * gw[0][0] + uq.y * gw[0][1], uq.x * gw[1][0] + uq.y * gw[1][1]};
      acc += area * q.w * 0.5 * (dot(ugv, wq) - dot(ugw, vq));
    }
  }
  return acc;
}

std::vector<Vec2> assemble_flux_J(const ScalarFieldP1& phi, const ScalarFieldP1& mu,
                                  const MaterialParams& params) {
  if (phi.mesh != mu.mesh) throw std::invalid_argument("assemble_flux_J: mesh mismatch");
  const Mesh& mesh = *phi.mesh;
  const double drho = params.d_density_dphi();
  std::vector<Vec2> J(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles()[t];
    const double phi_mid = (phi.values[v[0]] + phi.values[v[1]] + phi.values[v[2]]) / 3.0;
    const double m = params.mobility_of(phi_mid);
    J[t] = (-drho * m) * mu.gradient(t);
  }
  return J;
}

namespace {

struct P2AtPoint {
  std::array<double, 6> N;
  std::array<Vec2, 6> grad;
};

inline void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::runtime_error(std::string("assembly: non-finite ") + what);
}

}  // namespace

CoupledSystem assemble_step_system(const StepFields& fields, const MaterialParams& params,
                                   const WindForce& wind, double tau, const ActiveSet& active,
                                   bool transport_ibp) {
  const Mesh& mesh = *fields.mesh;
  if (fields.phi_old.mesh != &mesh || fields.rho_prev.mesh != &mesh || fields.v_old.mesh != &mesh)
    throw std::invalid_argument("assemble_step_system: inconsistent mesh references");
  if (static_cast<int>(fields.flux_J.size()) != mesh.num_triangles())
    throw std::invalid_argument("assemble_step_system: flux cache size mismatch");
  if (static_cast<int>(active.size()) != mesh.num_vertices())
    throw std::invalid_argument("assemble_step_system: active set size mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("assemble_step_system: tau must be positive");
  for (double x : fields.phi_old.values) check_finite(x, "phi_old");
  for (double x : fields.v_old.values) check_finite(x, "v_old");

  const DofLayout dofs = DofLayout::coupled(mesh);
  CoupledSystem sys;
  sys.dofs = dofs;
  sys.rhs = Eigen::VectorXd::Zero(dofs.total);
  sys.trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 340);

  const auto& rule = volume_rule();
  const double sig_eps = params.sigma * params.epsilon;
  const double sig_over_eps = params.sigma / params.epsilon;

  // element blocks, accumulated over the quadrature points and emitted once
  struct Local {
    double vv[12][12];
    double vp[12][3], vmu[12][3];
    double pv[3][12];
    double phiphi[3][3], phimu[3][3], phiv[3][12];
    double muphi[3][3], mumu[3][3];
    double rv[12], rphi[3];
    void clear() { std::memset(this, 0, sizeof *this); }
  };
  Local loc;

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.area(t);
    const auto nodes = p2_nodes(mesh, t);
    const auto& vtx = mesh.triangles()[t];
    const Vec2 grad_phi_old = fields.phi_old.gradient(t);
    const Vec2 Jt = fields.flux_J[t];
    const auto& gP1 = mesh.bary_gradients(t);
    loc.clear();

    for (const auto& q : rule.points) {
      const std::array<double, 3> l{q.l0, q.l1, q.l2};
      const double wq = area * q.w;
      const auto b2 = p2_basis(mesh, t, l);

      const double phi_old_q = fields.phi_old.eval_bary(t, l);
      const double rho_k = params.density(phi_old_q);
      const double rho_km1 = fields.rho_prev.eval_bary(t, l);
      const double eta_k = params.viscosity(phi_old_q);
      const double mob_k = params.mobility_of(phi_old_q);
      const Vec2 v_old_q = fields.v_old.eval_bary(t, l);
      const Vec2 bk = rho_k * v_old_q + Jt;  // b^k = rho^k v^k + J^k
      const Vec2 xq = mesh.point(t, l[0], l[1], l[2]);
      const Vec2 fq = wind(xq);
      const Vec2 grav = params.gravity;

      for (int r = 0; r < 6; ++r) {
        const double Nr = b2.N[r];
        const Vec2 Gr = b2.grad[r];
        for (int c = 0; c < 2; ++c) {
          const int lr = 2 * r + c;
          const double vc = (c == 0) ? v_old_q.x : v_old_q.y;
          const double gc = (c == 0) ? grav.x : grav.y;
          const double fc = (c == 0) ? fq.x : fq.y;
          loc.rv[lr] += wq * Nr * (rho_km1 * vc + tau * (rho_k * gc + fc));

          for (int s2 = 0; s2 < 6; ++s2) {
            const double Ns = b2.N[s2];
            const Vec2 Gs = b2.grad[s2];
            // time term + antisymmetrized convection, diagonal in components
            loc.vv[lr][2 * s2 + c] +=
                wq * (0.5 * (rho_k + rho_km1) * Ns * Nr +
                      tau * 0.5 * (dot(bk, Gs) * Nr - dot(bk, Gr) * Ns));
            // viscous 2 eta D(v):D(w), coupling both components
            const double tv = wq * tau * 2.0 * eta_k;
            if (c == 0) {
              loc.vv[lr][2 * s2 + 0] += tv * (Gs.x * Gr.x + 0.5 * Gs.y * Gr.y);
              loc.vv[lr][2 * s2 + 1] += tv * 0.5 * Gs.x * Gr.y;
            } else {
              loc.vv[lr][2 * s2 + 1] += tv * (Gs.y * Gr.y + 0.5 * Gs.x * Gr.x);
              loc.vv[lr][2 * s2 + 0] += tv * 0.5 * Gs.y * Gr.x;
            }
          }

          const double divw_c = (c == 0) ? Gr.x : Gr.y;
          const double gpc = (c == 0) ? grad_phi_old.x : grad_phi_old.y;
          for (int j = 0; j < 3; ++j) {
            loc.vp[lr][j] += -wq * tau * l[j] * divw_c;       // - tau (p, div w)
            loc.vmu[lr][j] += -wq * tau * l[j] * gpc * Nr;    // - tau (mu grad phi^k, w)
          }
        }
      }

      for (int j = 0; j < 3; ++j)
        for (int s2 = 0; s2 < 6; ++s2) {
          loc.pv[j][2 * s2 + 0] += -wq * l[j] * b2.grad[s2].x;  // -(div v, q)
          loc.pv[j][2 * s2 + 1] += -wq * l[j] * b2.grad[s2].y;
        }

      for (int r3 = 0; r3 < 3; ++r3) {
        loc.rphi[r3] += wq * l[r3] * phi_old_q;
        for (int j = 0; j < 3; ++j) {
          loc.phiphi[r3][j] += wq * l[r3] * l[j];
          loc.phimu[r3][j] += wq * tau * mob_k * dot(gP1[j], gP1[r3]);
          loc.muphi[r3][j] += wq * sig_eps * dot(gP1[j], gP1[r3]);
          loc.mumu[r3][j] += -wq * l[r3] * l[j];
        }
        for (int s2 = 0; s2 < 6; ++s2) {
          if (transport_ibp) {
            loc.phiv[r3][2 * s2 + 0] += -wq * tau * b2.N[s2] * phi_old_q * gP1[r3].x;
            loc.phiv[r3][2 * s2 + 1] += -wq * tau * b2.N[s2] * phi_old_q * gP1[r3].y;
          } else {
            loc.phiv[r3][2 * s2 + 0] += wq * tau * b2.N[s2] * grad_phi_old.x * l[r3];
            loc.phiv[r3][2 * s2 + 1] += wq * tau * b2.N[s2] * grad_phi_old.y * l[r3];
          }
        }
      }
    }

    // emit
    for (int a = 0; a < 12; ++a) {
      const int row = dofs.vdof(nodes[a / 2], a % 2);
      sys.rhs[row] += loc.rv[a];
      for (int b = 0; b < 12; ++b)
        sys.trips.emplace_back(row, dofs.vdof(nodes[b / 2], b % 2), loc.vv[a][b]);
      for (int j = 0; j < 3; ++j) {
        sys.trips.emplace_back(row, dofs.pdof(vtx[j]), loc.vp[a][j]);
        sys.trips.emplace_back(row, dofs.mudof(vtx[j]), loc.vmu[a][j]);
      }
    }
    for (int j = 0; j < 3; ++j) {
      const int prow = dofs.pdof(vtx[j]);
      for (int b = 0; b < 12; ++b)
        sys.trips.emplace_back(prow, dofs.vdof(nodes[b / 2], b % 2), loc.pv[j][b]);
      const int phirow = dofs.phidof(vtx[j]);
      sys.rhs[phirow] += loc.rphi[j];
      for (int i = 0; i < 3; ++i) {
        sys.trips.emplace_back(phirow, dofs.phidof(vtx[i]), loc.phiphi[j][i]);
        sys.trips.emplace_back(phirow, dofs.mudof(vtx[i]), loc.phimu[j][i]);
      }
      for (int b = 0; b < 12; ++b)
        sys.trips.emplace_back(phirow, dofs.vdof(nodes[b / 2], b % 2), loc.phiv[j][b]);
      const int murow = dofs.mudof(vtx[j]);
      for (int i = 0; i < 3; ++i) {
        sys.trips.emplace_back(murow, dofs.phidof(vtx[i]), loc.muphi[j][i]);
        sys.trips.emplace_back(murow, dofs.mudof(vtx[i]), loc.mumu[j][i]);
      }
    }
  }

  // lumped free-energy derivative terms and the pressure-mean multiplier
  const std::vector<double> lump = lumped_mass_p1(mesh);
  for (int i = 0; i < dofs.nv; ++i) {
    const int row = dofs.mudof(i);
    // concave part, explicit: F-'(P phi^k) = -phi_old
    sys.rhs[row] += sig_over_eps * lump[i] * fields.phi_old.values[i];
    // convex part, semismooth-linearized on the active set
    if (active[i] != 0) {
      sys.trips.emplace_back(row, dofs.phidof(i), sig_over_eps * lump[i] * params.s);
      sys.rhs[row] += sig_over_eps * lump[i] * params.s * static_cast<double>(active[i]);
    }
  }
  for (int i = 0; i < dofs.nv; ++i) {
    // integral of the P1 hat function i
    double ci = 0.0;
    // accumulate in triangle order for determinism
    // (recomputed here instead of caching; cost is negligible)
    ci = lump[i];
    sys.trips.emplace_back(dofs.pdof(i), dofs.lambda_row, ci);
    sys.trips.emplace_back(dofs.lambda_row, dofs.pdof(i), ci);
  }

  return sys;
}

InitPhaseSystem assemble_init_phase_system(const ScalarFieldP1& phi0, const VectorFieldP2& v0,
                                           const MaterialParams& params, double tau,
                                           const ActiveSet& active) {
  const Mesh& mesh = *phi0.mesh;
  if (v0.mesh != &mesh) throw std::invalid_argument("init phase: mesh mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("init phase: tau must be positive");
  const int nv = mesh.num_vertices();
  if (static_cast<int>(active.size()) != nv)
    throw std::invalid_argument("init phase: active set size mismatch");

  InitPhaseSystem sys;
  sys.nv = nv;
  sys.rhs = Eigen::VectorXd::Zero(2 * nv);
  const auto& rule = volume_rule();
  const double sig_eps = params.sigma * params.epsilon;
  const double sig_over_eps = params.sigma / params.epsilon;

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.area(t);
    const auto& vtx = mesh.triangles()[t];
    const auto& gP1 = mesh.bary_gradients(t);
    const Vec2 grad_phi0 = phi0.gradient(t);

    for (const auto& q : rule.points) {
      const std::array<double, 3> l{q.l0, q.l1, q.l2};
      const double wq = area * q.w;
      const double phi0_q = phi0.eval_bary(t, l);
      const double mob = params.mobility_of(phi0_q);
      const Vec2 v0_q = v0.eval_bary(t, l);
      const double transport = dot(v0_q, grad_phi0);  // explicit v^0 . grad phi^0

      for (int r = 0; r < 3; ++r) {
        const int row_phi = vtx[r];
        const int row_mu = nv + vtx[r];
        // (phi^1, P) + tau m (grad mu^1, grad P) = (phi^0, P) - tau (v0.grad phi0, P)
        sys.rhs[row_phi] += wq * l[r] * (phi0_q - tau * transport);
        for (int j = 0; j < 3; ++j) {
          sys.trips.emplace_back(row_phi, vtx[j], wq * l[r] * l[j]);
          sys.trips.emplace_back(row_phi, nv + vtx[j], wq * tau * mob * dot(gP1[j], gP1[r]));
          // sigma eps (grad phi^1, grad Q) - (mu^1, Q)
          sys.trips.emplace_back(row_mu, vtx[j], wq * sig_eps * dot(gP1[j], gP1[r]));
          sys.trips.emplace_back(row_mu, nv + vtx[j], -wq * l[r] * l[j]);
        }
      }
    }
  }

  const std::vector<double> lump = lumped_mass_p1(mesh);
  for (int i = 0; i < nv; ++i) {
    const int row_mu = nv + i;
    sys.rhs[row_mu] += sig_over_eps * lump[i] * phi0.values[i];  // -F-'(phi^0)
    if (active[i] != 0) {
      sys.trips.emplace_back(row_mu, i, sig_over_eps * lump[i] * params.s);
      sys.rhs[row_mu] += sig_over_eps * lump[i] * params.s * static_cast<double>(active[i]);
    }
  }
  return sys;
}

InitFlowSystem assemble_init_flow_system(const ScalarFieldP1& phi0, const VectorFieldP2& v0,
                                         const ScalarFieldP1& phi1, const ScalarFieldP1& mu1,
                                         const MaterialParams& params, const WindForce& wind,
                                         double tau) {
  const Mesh& mesh = *phi0.mesh;
  if (v0.mesh != &mesh || phi1.mesh != &mesh || mu1.mesh != &mesh)
    throw std::invalid_argument("init flow: mesh mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("init flow: tau must be positive");

  InitFlowSystem sys;
  sys.nn2 = mesh.num_vertices() + mesh.num_edges();
  sys.nv = mesh.num_vertices();
  sys.lambda_row = 2 * sys.nn2 + sys.nv;
  sys.total = sys.lambda_row + 1;
  sys.rhs = Eigen::VectorXd::Zero(sys.total);

  const auto& rule = volume_rule();
  const std::vector<Vec2> J1 = assemble_flux_J(phi1, mu1, params);

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.area(t);
    const auto nodes = p2_nodes(mesh, t);
    const auto& vtx = mesh.triangles()[t];
    const Vec2 grad_phi1 = phi1.gradient(t);

    for (const auto& q : rule.points) {
      const std::array<double, 3> l{q.l0, q.l1, q.l2};
      const double wq = area * q.w;
      const auto b2 = p2_basis(mesh, t, l);
      const double phi0_q = phi0.eval_bary(t, l);
      const double phi1_q = phi1.eval_bary(t, l);
      const double mu1_q = mu1.eval_bary(t, l);
      const double rho0 = params.density(phi0_q);
      const double rho1 = params.density(phi1_q);
      const double eta1v = params.viscosity(phi1_q);
      const Vec2 v0_q = v0.eval_bary(t, l);
      const Vec2 conv = rho0 * v0_q + J1[t];  // rho^0 v^0 + J^1
      const Vec2 xq = mesh.point(t, l[0], l[1], l[2]);
      const Vec2 fq = wind(xq);

      for (int r = 0; r < 6; ++r) {
        const double Nr = b2.N[r];
        const Vec2 Gr = b2.grad[r];
        for (int c = 0; c < 2; ++c) {
          const int row = 2 * nodes[r] + c;
          const double vc = (c == 0) ? v0_q.x : v0_q.y;
          const double gc = (c == 0) ? params.gravity.x : params.gravity.y;
          const double fc = (c == 0) ? fq.x : fq.y;
          const double gp1c = (c == 0) ? grad_phi1.x : grad_phi1.y;
          // rhs: rho^1 v^0 . w + tau (mu^1 grad phi^1 + rho^1 g + f) . w
          sys.rhs[row] += wq * Nr * (rho1 * vc + tau * (mu1_q * gp1c + rho1 * gc + fc));

          for (int s2 = 0; s2 < 6; ++s2) {
            const double Ns = b2.N[s2];
            const Vec2 Gs = b2.grad[s2];
            // rho^1 (v,w) + tau ((conv . grad) v) . w  (not antisymmetrized)
            const double val = rho1 * Ns * Nr + tau * dot(conv, Gs) * Nr;
            sys.trips.emplace_back(row, 2 * nodes[s2] + c, wq * val);
            for (int d = 0; d < 2; ++d) {
              double dd;
              if (c == 0 && d == 0)
                dd = Gs.x * Gr.x + 0.5 * Gs.y * Gr.y;
              else if (c == 1 && d == 1)
                dd = Gs.y * Gr.y + 0.5 * Gs.x * Gr.x;
              else if (c == 0 && d == 1)
                dd = 0.5 * Gs.x * Gr.y;
              else
                dd = 0.5 * Gs.y * Gr.x;
              sys.trips.emplace_back(row, 2 * nodes[s2] + d, wq * tau * 2.0 * eta1v * dd);
            }
          }
          const double divw_c = (c == 0) ? Gr.x : Gr.y;
          for (int j = 0; j < 3; ++j)
            sys.trips.emplace_back(row, 2 * sys.nn2 + vtx[j], -wq * tau * l[j] * divw_c);
        }
      }

      for (int j = 0; j < 3; ++j) {
        const int row = 2 * sys.nn2 + vtx[j];
        for (int s2 = 0; s2 < 6; ++s2) {
          sys.trips.emplace_back(row, 2 * nodes[s2], -wq * l[j] * b2.grad[s2].x);
          sys.trips.emplace_back(row, 2 * nodes[s2] + 1, -wq * l[j] * b2.grad[s2].y);
        }
      }
    }
  }

  const std::vector<double> lump = lumped_mass_p1(mesh);
  for (int i = 0; i < sys.nv; ++i) {
    sys.trips.emplace_back(2 * sys.nn2 + i, sys.lambda_row, lump[i]);
    sys.trips.emplace_back(sys.lambda_row, 2 * sys.nn2 + i, lump[i]);
  }
  return sys;
}

std::vector<std::pair<int, Vec2>> dirichlet_velocity_nodes(const Mesh& mesh, const BCSpec& bc) {
  const int nv = mesh.num_vertices();
  std::vector<int> tagged(nv + mesh.num_edges(), 0);  // BoundarySide as int, 0 = untouched
  auto apply_side = [&](BoundarySide s) {
    for (int e = 0; e < mesh.num_edges(); ++e) {
      if (mesh.edges()[e].side != s) continue;
      tagged[mesh.edges()[e].a] = static_cast<int>(s);
      tagged[mesh.edges()[e].b] = static_cast<int>(s);
      tagged[nv + e] = static_cast<int>(s);
    }
  };
  apply_side(BoundarySide::bottom);
  apply_side(BoundarySide::right);
  apply_side(BoundarySide::top);
  apply_side(BoundarySide::left);

  std::vector<std::pair<int, Vec2>> out;
  for (int n = 0; n < static_cast<int>(tagged.size()); ++n) {
    if (tagged[n] == 0) continue;
    const auto s = static_cast<BoundarySide>(tagged[n]);
    const VelocityBC& vbc = bc.side(s);
    Vec2 val{0.0, 0.0};
    if (vbc.type == VelocityBC::Type::tangential) {
      const bool horizontal = (s == BoundarySide::bottom || s == BoundarySide::top);
      val = horizontal ? Vec2{vbc.speed, 0.0} : Vec2{0.0, vbc.speed};
    }
    out.emplace_back(n, val);
  }
  return out;
}

namespace {

template <typename System>
void apply_dirichlet_rows(System& sys, const std::vector<std::pair<int, Vec2>>& nodes,
                          int off_v) {
  if (sys.bc_applied) throw std::logic_error("apply_boundary_conditions: already applied");
  std::unordered_set<int> rows;
  rows.reserve(nodes.size() * 2);
  for (const auto& [n, val] : nodes) {
    rows.insert(off_v + 2 * n);
    rows.insert(off_v + 2 * n + 1);
  }
  std::erase_if(sys.trips, [&](const Eigen::Triplet<double>& t) { return rows.count(t.row()) > 0; });
  for (const auto& [n, val] : nodes) {
    sys.trips.emplace_back(off_v + 2 * n, off_v + 2 * n, 1.0);
    sys.trips.emplace_back(off_v + 2 * n + 1, off_v + 2 * n + 1, 1.0);
    sys.rhs[off_v + 2 * n] = val.x;
    sys.rhs[off_v + 2 * n + 1] = val.y;
  }
  sys.bc_applied = true;
}

}  // namespace

void apply_boundary_conditions(CoupledSystem& sys, const Mesh& mesh, const BCSpec& bc) {
  apply_dirichlet_rows(sys, dirichlet_velocity_nodes(mesh, bc), sys.dofs.off_v);
}

void apply_boundary_conditions(InitFlowSystem& sys, const Mesh& mesh, const BCSpec& bc) {
  apply_dirichlet_rows(sys, dirichlet_velocity_nodes(mesh, bc), 0);
}

}  // namespace chns
