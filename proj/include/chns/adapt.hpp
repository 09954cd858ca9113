// Residual-based a posteriori error indicators, the bulk marking strategy,
// the energy-monotone coarsening post-processing, and the per-step mesh
// adaptation driver.
#pragma once

#include <memory>
#include <vector>

#include "chns/solver.hpp"

namespace chns {

// Strong-form element residuals of the tau-scaled step equations, evaluated
// from a converged level and its cached previous-level data.
class StepResiduals {
 public:
  StepResiduals(const State& next, const MaterialParams& params, const WindForce& wind,
                double tau);

  Vec2 r1(int t, const std::array<double, 3>& l) const;   // momentum
  double r2(int t, const std::array<double, 3>& l) const;  // transport
  double r3(int t, const std::array<double, 3>& l) const;  // potential

  // P1 interpolant of the viscosity used by r1 and the stress jumps
  double viscosity_interp(int t, const std::array<double, 3>& l) const;

  const State& state() const { return *next_; }
  const MaterialParams& params() const { return *params_; }
  double tau() const { return tau_; }

 private:
  const State* next_;
  const MaterialParams* params_;
  const WindForce* wind_;
  double tau_;
  // per-triangle constants
  std::vector<Vec2> grad_phi_old_, grad_mu_, grad_p_;
  std::vector<Vec2> grad_eta_;     // gradient of the P1 viscosity interpolant
  std::vector<std::array<Sym2, 2>> hess_v_;  // Hessians of both components
};

struct IndicatorField {
  std::vector<std::array<double, 3>> eta_t;  // per triangle, unsquared
  std::vector<std::array<double, 3>> eta_e;  // per edge, unsquared; 0 on boundary
  double tau = 0.0;
  double eta_lo = 0.0;  // min viscosity
  double mob_lo = 0.0;  // mobility lower bound
  double sigma = 0.0, epsilon = 0.0;

  // combined per-triangle indicators of the marking strategy
  double combined_t(int t) const;
  double combined_te(int t, const Mesh& mesh) const;
};

IndicatorField compute_indicators(const StepResiduals& res);

// Worker threads for the element/edge loops of compute_indicators. Each
// element writes only its own slot, so the result is identical for any
// count. Assembly stays serial: triplet order feeds a summed reduction.
void set_runtime_threads(int n);
int runtime_threads();

// eta_Omega >= 0 from the six weighted groups.
double estimator_total(const IndicatorField& ind);

struct MarkParams {
  double theta_r = 0.5;
  double theta_c = 0.01;
  double a_min = 8e-6;  // no element may fall below this area
  double a_max = 3e-4;  // no coarsening may create an element above this
};

struct MarkResult {
  std::vector<int> refine;
  std::vector<int> coarsen;
};

// Bulk (Doerfler) refinement sets built greedily by descending indicator;
// coarsening by the mean-threshold rule. Size guards act directionally:
// a_min on refinement (children keep area >= a_min), a_max on coarsening
// (merged parents keep area <= a_max).
MarkResult mark(const IndicatorField& ind, const Mesh& mesh, const MarkParams& mp);

struct PostprocessResult {
  std::vector<NodeStar> stars;  // surviving coarsening candidates
  int dropped_incomplete = 0;   // triangles not part of a fully marked star
  int dropped_energy = 0;       // stars failing the projection-energy test
};

// Algorithm-2 style filter: keep only complete nodeStars, then drop stars
// where the locally projected coarse preview raises the patch GL energy.
// With check_energy = false only the structural step runs.
PostprocessResult postprocess_coarsen(const Mesh& mesh, const std::vector<int>& coarsen_set,
                                      const ScalarFieldP1& phi, const MaterialParams& params,
                                      bool check_energy);

// Patch GL energies of the fine patch and of its virtually coarsened,
// locally L2-projected preview (gradient part plus nodal free energy).
struct PatchEnergyPair {
  double fine = 0.0;
  double coarse = 0.0;
};
PatchEnergyPair star_projection_energies(const Mesh& mesh, const NodeStar& star,
                                         const ScalarFieldP1& phi, const MaterialParams& params);

struct AdaptOptions {
  MarkParams mark;
  bool postprocess = true;
  // Bisections applied to each marked triangle per adaptation (1 = plain
  // newest-vertex bisection, 2 = quartering). Children respect the a_min
  // floor either way.
  int bisections = 1;
  // The bulk criterion is scale invariant, so rounding noise on an exactly
  // stationary state would still mark half the mesh. Below this total the
  // adaptation is a no-op.
  double eta_floor = 1e-14;
};

struct AdaptResult {
  std::shared_ptr<const Mesh> mesh;  // final mesh (input mesh if unchanged)
  std::vector<Hop> hops;             // empty when unchanged
  double eta_omega = 0.0;
  int n_marked_refine = 0;
  int n_coarsened_stars = 0;
  int n_filtered_stars = 0;
  double min_area = 0.0, max_area = 0.0;
  // patch energies of every star actually coarsened (empty with the
  // postprocess filter off); fine >= coarse certifies the projection-energy
  // assumption for this adaptation
  std::vector<PatchEnergyPair> star_energies;
};

// ESTIMATE -> MARK -> (postprocess) -> coarsen + refine. Field transfer is
// left to the caller (the time step pulls fields along the hops).
AdaptResult adapt_step(const State& state, std::shared_ptr<const Mesh> mesh,
                       const MaterialParams& params, const WindForce& wind, double tau,
                       const AdaptOptions& opts);

}  // namespace chns
