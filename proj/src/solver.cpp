#include "chns/solver.hpp"

#ifdef CHNS_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/SparseLU>
#endif
#include <cmath>
#include <stdexcept>

namespace chns {

State::State(std::shared_ptr<const Mesh> m)
    : mesh(std::move(m)),
      phi(*mesh),
      mu(*mesh),
      p(*mesh),
      v(*mesh),
      prev_phi_proj(*mesh),
      prev_v(*mesh),
      prev_rho_old(*mesh),
      flux_J(mesh->num_triangles()),
      active(mesh->num_vertices(), 0) {}

void State::check() const {
  auto finite = [](const std::vector<double>& xs) {
    for (double x : xs)
      if (!std::isfinite(x)) return false;
    return true;
  };
  if (!finite(phi.values) || !finite(mu.values) || !finite(p.values) || !finite(v.values))
    throw std::runtime_error("state: non-finite field entries");
  double pmax = 0.0;
  for (double x : p.values) pmax = std::max(pmax, std::abs(x));
  const double pm = integrate_p1(p);
  if (std::abs(pm) > 1e-11 * mesh->total_area() * (1.0 + pmax))
    throw std::runtime_error("state: pressure mean not zero");
}

ActiveSet active_set_of(const std::vector<double>& phi_values) {
  ActiveSet a(phi_values.size(), 0);
  for (std::size_t i = 0; i < phi_values.size(); ++i) {
    if (phi_values[i] > 1.0)
      a[i] = 1;
    else if (phi_values[i] < -1.0)
      a[i] = -1;
  }
  return a;
}

SsnResult ssn_loop(ActiveSet active, const SsnOptions& opts,
                   const std::function<std::vector<double>(const ActiveSet&)>& solve_with,
                   const std::function<double(const ActiveSet&)>& residual_of) {
  SsnResult res;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const std::vector<double> phi = solve_with(active);
    ActiveSet next = active_set_of(phi);
    res.iterations = it;
    if (next == active) {
      res.active = std::move(next);
      return res;
    }
    active = std::move(next);
    if (residual_of && residual_of(active) <= opts.tol) {
      res.active = std::move(active);
      return res;
    }
  }
  throw SsnFailure("ssn: active set did not settle within max_iter");
}

double ginzburg_landau_energy(const ScalarFieldP1& phi, const MaterialParams& params) {
  const Mesh& mesh = *phi.mesh;
  double grad2 = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 g = phi.gradient(t);
    grad2 += mesh.area(t) * dot(g, g);
  }
  const std::vector<double> lump = lumped_mass_p1(mesh);
  double fpart = 0.0;
  for (int i = 0; i < mesh.num_vertices(); ++i)
    fpart += lump[i] * free_energy(phi.values[i], params.s);
  return 0.5 * params.sigma * params.epsilon * grad2 + params.sigma / params.epsilon * fpart;
}

ScalarFieldP1 project_initial_phase(const Mesh& mesh,
                                    const std::function<double(const Vec2&)>& phi0) {
  const auto& rule = triangle_rule(6);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles()[t];
    const double a = mesh.area(t);
    for (const auto& q : rule.points) {
      const double f = phi0(mesh.point(t, q.l0, q.l1, q.l2));
      rhs[v[0]] += a * q.w * q.l0 * f;
      rhs[v[1]] += a * q.w * q.l1 * f;
      rhs[v[2]] += a * q.w * q.l2 * f;
    }
  }
  const SpMat m = assemble_mass_p1(mesh);
  Eigen::SimplicialLDLT<SpMat> chol(m);
  const Eigen::VectorXd x = chol.solve(rhs);
  ScalarFieldP1 out(mesh);
  for (int i = 0; i < mesh.num_vertices(); ++i) out.values[i] = x[i];
  return out;
}

namespace {

Eigen::VectorXd sparse_solve(const SpMat& a, const Eigen::VectorXd& rhs, const char* what) {
#ifdef CHNS_HAVE_UMFPACK
  Eigen::UmfPackLU<SpMat> lu;
#else
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
#endif
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error(std::string("linear solve failed (factorize): ") + what);
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error(std::string("linear solve failed (solve): ") + what);
  return x;
}

ScalarFieldP1 density_field(const ScalarFieldP1& phi, const MaterialParams& params) {
  ScalarFieldP1 rho(*phi.mesh);
  for (std::size_t i = 0; i < phi.values.size(); ++i)
    rho.values[i] = params.density(phi.values[i]);
  return rho;
}

}  // namespace

State init_step(const ScalarFieldP1& phi0, const VectorFieldP2& v0,
                std::shared_ptr<const Mesh> mesh, const MaterialParams& params,
                const WindForce& wind, const BCSpec& bc, double tau, const SchemeOptions& opts) {
  params.validate();
  if (phi0.mesh != mesh.get() || v0.mesh != mesh.get())
    throw std::invalid_argument("init_step: fields not on the given mesh");

  const int nv = mesh->num_vertices();
  Eigen::VectorXd sol;
  auto solve_with = [&](const ActiveSet& active) {
    InitPhaseSystem sys = assemble_init_phase_system(phi0, v0, params, tau, active);
    sol = sparse_solve(sys.matrix(), sys.rhs, "init phase system");
    std::vector<double> phi(nv);
    for (int i = 0; i < nv; ++i) phi[i] = sol[i];
    return phi;
  };
  auto residual_of = [&](const ActiveSet& active) {
    const InitPhaseSystem sys = assemble_init_phase_system(phi0, v0, params, tau, active);
    const double bn = sys.rhs.norm();
    return (sys.matrix() * sol - sys.rhs).norm() / (bn > 0.0 ? bn : 1.0);
  };
  const SsnResult ssn = ssn_loop(active_set_of(phi0.values), opts.ssn, solve_with, residual_of);

  State st(mesh);
  st.k = 1;
  for (int i = 0; i < nv; ++i) {
    st.phi.values[i] = sol[i];
    st.mu.values[i] = sol[nv + i];
  }

  InitFlowSystem fsys =
      assemble_init_flow_system(phi0, v0, st.phi, st.mu, params, wind, tau);
  apply_boundary_conditions(fsys, *mesh, bc);
  const Eigen::VectorXd fx = sparse_solve(fsys.matrix(), fsys.rhs, "init flow system");
  for (int i = 0; i < 2 * fsys.nn2; ++i) st.v.values[i] = fx[i];
  for (int i = 0; i < nv; ++i) st.p.values[i] = fx[2 * fsys.nn2 + i];

  st.prev_phi_proj = phi0;
  st.prev_v = v0;
  st.prev_rho_old = density_field(phi0, params);  // rho^0 stands in for rho^{-1}
  st.flux_J = assemble_flux_J(st.phi, st.mu, params);
  st.active = ssn.active;
  st.ssn_iters = ssn.iterations;
  st.check();
  return st;
}

// Carries the previous level's active set through the mesh hops: surviving
// vertices keep their flags (refinement appends vertices, keeping old ids as
// a prefix; coarsening renumbers through vertex_map), vertices created by
// refinement fall back to the sign test on the transferred phase.
static ActiveSet transfer_active_set(const ActiveSet& a, const std::vector<Hop>& hops,
                                     const ScalarFieldP1& phi_on_final) {
  constexpr std::int8_t unset = 127;
  std::vector<std::int8_t> cur(a.begin(), a.end());
  for (const Hop& h : hops) {
    const int nv_new = h.mesh->num_vertices();
    std::vector<std::int8_t> next(nv_new, unset);
    switch (h.map.kind) {
      case TransferMap::Kind::identity:
        next.assign(cur.begin(), cur.end());
        break;
      case TransferMap::Kind::refine:
        for (std::size_t i = 0; i < cur.size(); ++i) next[i] = cur[i];
        break;
      case TransferMap::Kind::coarsen:
        for (std::size_t i = 0; i < h.map.vertex_map.size(); ++i)
          if (h.map.vertex_map[i] != -1) next[h.map.vertex_map[i]] = cur[i];
        break;
    }
    cur = std::move(next);
  }
  ActiveSet out(cur.size(), 0);
  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (cur[i] != unset) {
      out[i] = cur[i];
    } else if (phi_on_final.values[i] > 1.0) {
      out[i] = 1;
    } else if (phi_on_final.values[i] < -1.0) {
      out[i] = -1;
    }
  }
  return out;
}

State time_step(const State& state, const std::vector<Hop>& hops, const MaterialParams& params,
                const WindForce& wind, const BCSpec& bc, double tau, const SchemeOptions& opts) {
  params.validate();
  std::shared_ptr<const Mesh> next_mesh = hops.empty() ? state.mesh : hops.back().mesh;
  const Mesh& mesh = *next_mesh;

  StepFields fields;
  fields.mesh = &mesh;
  fields.phi_old = transfer_p1_path(state.phi, hops);
  ScalarFieldP1 mu_old = transfer_p1_path(state.mu, hops);
  fields.v_old = transfer_p2_path(state.v, hops);
  const ScalarFieldP1 rho_k = density_field(state.prev_phi_proj, params);  // rho^{k-1}
  fields.rho_prev = transfer_p1_path(rho_k, hops);
  fields.flux_J = assemble_flux_J(fields.phi_old, mu_old, params);

  const int nv = mesh.num_vertices();
  const DofLayout dofs = DofLayout::coupled(mesh);
  Eigen::VectorXd sol;

  // the active set only contributes a phase-column diagonal in the potential
  // rows plus right-hand-side offsets: assemble and constrain once, append
  // the set-dependent entries per iteration
  CoupledSystem base =
      assemble_step_system(fields, params, wind, tau, ActiveSet(nv, 0), opts.transport_ibp);
  apply_boundary_conditions(base, mesh, bc);
  const SpMat base_csr = base.matrix();  // compressed once; the active set
                                         // only touches existing diagonal
                                         // positions of the potential rows
  const std::vector<double> lump = lumped_mass_p1(mesh);
  const double soe_s = params.sigma / params.epsilon * params.s;

  auto with_active = [&](const ActiveSet& active) {
    SpMat a = base_csr;
    Eigen::VectorXd rhs = base.rhs;
    for (int i = 0; i < nv; ++i) {
      if (active[i] == 0) continue;
      a.coeffRef(dofs.mudof(i), dofs.phidof(i)) += soe_s * lump[i];
      rhs[dofs.mudof(i)] += soe_s * lump[i] * static_cast<double>(active[i]);
    }
    return std::make_pair(std::move(a), std::move(rhs));
  };
  auto solve_with = [&](const ActiveSet& active) {
    const auto [a, rhs] = with_active(active);
    sol = sparse_solve(a, rhs, "step system");
    std::vector<double> phi(nv);
    for (int i = 0; i < nv; ++i) phi[i] = sol[dofs.phidof(i)];
    return phi;
  };
  auto residual_of = [&](const ActiveSet& active) {
    const auto [a, rhs] = with_active(active);
    const double rn = (a * sol - rhs).norm();
    const double bn = rhs.norm();
    return rn / (bn > 0.0 ? bn : 1.0);
  };

  const ActiveSet warm = transfer_active_set(state.active, hops, fields.phi_old);
  const SsnResult ssn = ssn_loop(warm, opts.ssn, solve_with, residual_of);

  State st(next_mesh);
  st.k = state.k + 1;
  for (int n = 0; n < dofs.nn2; ++n) {
    st.v.values[2 * n] = sol[dofs.vdof(n, 0)];
    st.v.values[2 * n + 1] = sol[dofs.vdof(n, 1)];
  }
  for (int i = 0; i < nv; ++i) {
    st.p.values[i] = sol[dofs.pdof(i)];
    st.phi.values[i] = sol[dofs.phidof(i)];
    st.mu.values[i] = sol[dofs.mudof(i)];
  }
  st.prev_phi_proj = fields.phi_old;
  st.prev_v = fields.v_old;
  st.prev_rho_old = fields.rho_prev;
  st.flux_J = fields.flux_J;
  st.active = ssn.active;
  st.ssn_iters = ssn.iterations;
  st.check();
  return st;
}

EnergyReport energy_report(const State& next, const MaterialParams& params,
                           const WindForce& wind, double tau) {
  const Mesh& mesh = *next.mesh;
  const auto& rule = volume_rule();
  EnergyReport r;

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.area(t);
    for (const auto& q : rule.points) {
      const std::array<double, 3> l{q.l0, q.l1, q.l2};
      const double wq = area * q.w;
      const double phi_old_q = next.prev_phi_proj.eval_bary(t, l);
      const double rho_k = params.density(phi_old_q);
      const double rho_km1 = next.prev_rho_old.eval_bary(t, l);
      const double eta_k = params.viscosity(phi_old_q);
      const double mob_k = params.mobility_of(phi_old_q);
      const Vec2 vn = next.v.eval_bary(t, l);
      const Vec2 vo = next.prev_v.eval_bary(t, l);
      const Vec2 dv = vn - vo;
      const Sym2 Dv = next.v.sym_grad_bary(t, l);
      const Vec2 xq = mesh.point(t, l[0], l[1], l[2]);
      const Vec2 force = params.density(phi_old_q) * params.gravity + wind(xq);

      r.e_kin_new += wq * 0.5 * rho_k * dot(vn, vn);
      r.e_kin_old += wq * 0.5 * rho_km1 * dot(vo, vo);
      r.d_num_v += wq * 0.5 * rho_km1 * dot(dv, dv);
      r.d_visc += wq * tau * 2.0 * eta_k * Dv.contract(Dv);
      r.w_grav += wq * tau * dot(force, vn);

      const Vec2 gmu = next.mu.gradient(t);
      r.d_mob += wq * tau * mob_k * dot(gmu, gmu);
    }
    // gradient parts of the GL energies (constant per triangle)
    const Vec2 gn = next.phi.gradient(t);
    const Vec2 go = next.prev_phi_proj.gradient(t);
    const Vec2 gd = gn - go;
    const double half_se = 0.5 * params.sigma * params.epsilon;
    r.e_gl_new += half_se * mesh.area(t) * dot(gn, gn);
    r.e_gl_old_proj += half_se * mesh.area(t) * dot(go, go);
    r.d_num_phi += half_se * mesh.area(t) * dot(gd, gd);
  }

  const std::vector<double> lump = lumped_mass_p1(mesh);
  const double soe = params.sigma / params.epsilon;
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    r.e_gl_new += soe * lump[i] * free_energy(next.phi.values[i], params.s);
    r.e_gl_old_proj += soe * lump[i] * free_energy(next.prev_phi_proj.values[i], params.s);
  }

  r.mass = integrate_p1(next.phi);
  r.slack = (r.e_kin_old + r.e_gl_old_proj + r.w_grav) -
            (r.e_kin_new + r.e_gl_new + r.d_visc + r.d_mob + r.d_num_v + r.d_num_phi);
  return r;
}

}  // namespace chns
