// Weak-form assembly of the coupled velocity/pressure/phase/potential system
// for one time step, plus the k = 0 initialization systems.
//
// Conventions:
//  - the momentum and transport equations are assembled multiplied by tau, so
//    the element residuals of the estimator are the strong form of exactly
//    the assembled rows;
//  - F+' and F-' are assembled with vertex-lumped weights. Together with the
//    nodal quadrature used for the free-energy integrals in the monitor this
//    keeps the discrete energy inequality exact up to rounding;
//  - the pressure mean is fixed by a single Lagrange multiplier row.
#pragma once

#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

#include "chns/fem.hpp"
#include "chns/mesh.hpp"
#include "chns/physics.hpp"

namespace chns {

struct VelocityBC {
  enum class Type : std::uint8_t { noslip, tangential };
  Type type = Type::noslip;
  double speed = 0.0;
};

struct BCSpec {
  VelocityBC bottom, right, top, left;
  const VelocityBC& side(BoundarySide s) const;
};

struct DofLayout {
  int nv = 0;   // P1 dofs (vertices)
  int nn2 = 0;  // P2 scalar nodes
  int off_v = 0;
  int off_p = 0;
  int off_phi = 0;
  int off_mu = 0;
  int lambda_row = 0;
  int total = 0;

  static DofLayout coupled(const Mesh& m);
  int vdof(int node, int comp) const { return off_v + 2 * node + comp; }
  int pdof(int i) const { return off_p + i; }
  int phidof(int i) const { return off_phi + i; }
  int mudof(int i) const { return off_mu + i; }
};

// Active-set mask for the semismooth linearization of F+': sign is -1/+1
// where |phi| exceeds 1, 0 elsewhere.
using ActiveSet = std::vector<std::int8_t>;

struct CoupledSystem {
  DofLayout dofs;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs;
  bool bc_applied = false;

  SpMat matrix() const;
};

// Everything from the previous time level, already living on the step mesh.
struct StepFields {
  const Mesh* mesh = nullptr;
  ScalarFieldP1 phi_old;   // P^{k+1} phi^k
  ScalarFieldP1 rho_prev;  // rho^{k-1}, transferred
  VectorFieldP2 v_old;     // v^k, transferred
  std::vector<Vec2> flux_J;  // J^k per triangle
};

// The antisymmetrized convection form
//   a(u,v,w) = 1/2 int ((u.grad)v).w - 1/2 int ((u.grad)w).v.
// Evaluated with the shared volume rule; the two products are formed at each
// quadrature point, so a(u,v,v) vanishes exactly.
double trilinear_a(const VectorFieldP2& u, const VectorFieldP2& v, const VectorFieldP2& w);

// J = -(d rho / d phi) m grad(mu), constant per triangle for P1 mu.
std::vector<Vec2> assemble_flux_J(const ScalarFieldP1& phi, const ScalarFieldP1& mu,
                                  const MaterialParams& params);

// One SSN iterate of the two-step scheme: linear in (v,p,phi,mu) once the
// active set is fixed.
CoupledSystem assemble_step_system(const StepFields& fields, const MaterialParams& params,
                                   const WindForce& wind, double tau, const ActiveSet& active,
                                   bool transport_ibp);

// Initialization systems for k = 0: the phase system in (phi^1, mu^1) with
// explicit transport, and the flow system in (v^1, p^1) built from the
// already computed phase fields.
struct InitPhaseSystem {
  int nv = 0;  // unknowns: phi (0..nv-1), mu (nv..2nv-1)
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs;
  SpMat matrix() const;
};

InitPhaseSystem assemble_init_phase_system(const ScalarFieldP1& phi0, const VectorFieldP2& v0,
                                           const MaterialParams& params, double tau,
                                           const ActiveSet& active);

struct InitFlowSystem {
  int nn2 = 0;  // v dofs 0..2*nn2-1, p next nv, lambda last
  int nv = 0;
  int lambda_row = 0;
  int total = 0;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs;
  bool bc_applied = false;
  SpMat matrix() const;
};

InitFlowSystem assemble_init_flow_system(const ScalarFieldP1& phi0, const VectorFieldP2& v0,
                                         const ScalarFieldP1& phi1, const ScalarFieldP1& mu1,
                                         const MaterialParams& params, const WindForce& wind,
                                         double tau);

// Dirichlet velocity rows become identity rows carrying the side profile;
// phase/potential rows are untouched, the pressure mean is handled by the
// multiplier already present in the system.
void apply_boundary_conditions(CoupledSystem& sys, const Mesh& mesh, const BCSpec& bc);
void apply_boundary_conditions(InitFlowSystem& sys, const Mesh& mesh, const BCSpec& bc);

// Boundary P2 nodes with their prescribed values, in the precedence order
// bottom, right, top, left (later sides win at corners).
std::vector<std::pair<int, Vec2>> dirichlet_velocity_nodes(const Mesh& mesh, const BCSpec& bc);

// Volume rule shared by assembly and the energy monitor.
const TriangleRule& volume_rule();

}  // namespace chns
