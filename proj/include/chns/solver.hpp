// Time integration: initialization step, the two-step scheme with a
// semi-smooth Newton (primal active set) iteration for the relaxed
// double-obstacle nonlinearity, and the discrete energy monitor.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "chns/assembly.hpp"

namespace chns {

// One time level plus the transferred previous-level data the scheme and the
// estimator need. All fields live on `mesh`.
struct State {
  int k = 0;  // time index of this level
  std::shared_ptr<const Mesh> mesh;
  ScalarFieldP1 phi, mu, p;
  VectorFieldP2 v;

  // caches from the step that produced this level, on the same mesh:
  ScalarFieldP1 prev_phi_proj;   // P^k phi^{k-1}
  VectorFieldP2 prev_v;          // transferred v^{k-1}
  ScalarFieldP1 prev_rho_old;    // rho^{k-2}-level density used in the step
  std::vector<Vec2> flux_J;      // J^{k-1} used in the convection field
  ActiveSet active;              // final SSN active set
  int ssn_iters = 0;

  explicit State(std::shared_ptr<const Mesh> m);
  void check() const;  // finiteness, zero pressure mean, matching sizes
};

struct EnergyReport {
  double e_kin_new = 0.0, e_gl_new = 0.0;
  double e_kin_old = 0.0, e_gl_old_proj = 0.0;
  double d_visc = 0.0, d_mob = 0.0, d_num_v = 0.0, d_num_phi = 0.0;
  double w_grav = 0.0;  // work of gravity plus the wind volume force
  double mass = 0.0;
  double slack = 0.0;  // rhs - lhs of the discrete energy inequality
  double e_total() const { return e_kin_new + e_gl_new; }
};

struct SsnOptions {
  double tol = 1e-10;
  int max_iter = 30;
};

struct SsnFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Generic primal active-set loop. `solve_with(active)` returns the new phase
// vertex values; termination on active-set repetition or on the relative
// algebraic residual reported by `residual_of`.
struct SsnResult {
  int iterations = 0;
  ActiveSet active;
};
SsnResult ssn_loop(ActiveSet active, const SsnOptions& opts,
                   const std::function<std::vector<double>(const ActiveSet&)>& solve_with,
                   const std::function<double(const ActiveSet&)>& residual_of);

struct SchemeOptions {
  SsnOptions ssn;
  // Transport coupling form. false (default) tests the convective term
  // against the phase test function, (v . grad phi^k, P); this is the
  // solenoidal scheme expressed in primitive variables and keeps the
  // discrete energy inequality exact for the Taylor-Hood pair, while the
  // divergence constraint still yields exact mass conservation. true selects
  // the integrated-by-parts variant -(v phi^k, grad P), whose energy balance
  // picks up a weak-divergence defect.
  bool transport_ibp = false;
};

// Discrete GL energy: sigma eps/2 |grad phi|^2 + sigma/eps * nodal F(phi).
double ginzburg_landau_energy(const ScalarFieldP1& phi, const MaterialParams& params);

ActiveSet active_set_of(const std::vector<double>& phi_values);

// L2 projection of the analytic profile phi0(x) onto P1.
ScalarFieldP1 project_initial_phase(const Mesh& mesh,
                                    const std::function<double(const Vec2&)>& phi0);

// Initialization for k = 0: the phase system solved by SSN, then the flow
// system; returns the complete level-1 state.
State init_step(const ScalarFieldP1& phi0, const VectorFieldP2& v0,
                std::shared_ptr<const Mesh> mesh, const MaterialParams& params,
                const WindForce& wind, const BCSpec& bc, double tau, const SchemeOptions& opts);

// One two-step update on the already adapted mesh reached through `hops`
// (empty hops: the mesh is unchanged); fields are transferred internally.
State time_step(const State& state, const std::vector<Hop>& hops, const MaterialParams& params,
                const WindForce& wind, const BCSpec& bc, double tau, const SchemeOptions& opts);

// Evaluates every term of the discrete energy inequality for the step that
// produced `next`; quadrature matches the assembly exactly.
EnergyReport energy_report(const State& next, const MaterialParams& params,
                           const WindForce& wind, double tau);

}  // namespace chns
