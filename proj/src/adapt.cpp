#include "chns/adapt.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace chns {

StepResiduals::StepResiduals(const State& next, const MaterialParams& params,
                             const WindForce& wind, double tau)
    : next_(&next), params_(&params), wind_(&wind), tau_(tau) {
  const Mesh& mesh = *next.mesh;
  const int nt = mesh.num_triangles();
  grad_phi_old_.resize(nt);
  grad_mu_.resize(nt);
  grad_p_.resize(nt);
  grad_eta_.resize(nt);
  hess_v_.resize(nt);
  for (int t = 0; t < nt; ++t) {
    grad_phi_old_[t] = next.prev_phi_proj.gradient(t);
    grad_mu_[t] = next.mu.gradient(t);
    grad_p_[t] = next.p.gradient(t);
    const auto& vtx = mesh.triangles()[t];
    const auto& g = mesh.bary_gradients(t);
    Vec2 ge{0.0, 0.0};
    for (int i = 0; i < 3; ++i)
      ge += params.viscosity(next.prev_phi_proj.values[vtx[i]]) * g[i];
    grad_eta_[t] = ge;
    const auto hess = p2_hessians(mesh, t);
    const auto nodes = p2_nodes(mesh, t);
    Sym2 hx{}, hy{};
    for (int i = 0; i < 6; ++i) {
      const double vx = next.v.values[2 * nodes[i]], vy = next.v.values[2 * nodes[i] + 1];
      hx.xx += vx * hess[i].xx;
      hx.yy += vx * hess[i].yy;
      hx.xy += vx * hess[i].xy;
      hy.xx += vy * hess[i].xx;
      hy.yy += vy * hess[i].yy;
      hy.xy += vy * hess[i].xy;
    }
    hess_v_[t] = {hx, hy};
  }
}

// P1 interpolant of the viscosity at the vertex phase values, consistent with
// the gradient cached in grad_eta_.
double StepResiduals::viscosity_interp(int t, const std::array<double, 3>& l) const {
  const auto& vtx = next_->mesh->triangles()[t];
  double eta = 0.0;
  for (int i = 0; i < 3; ++i)
    eta += l[i] * params_->viscosity(next_->prev_phi_proj.values[vtx[i]]);
  return eta;
}

Vec2 StepResiduals::r1(int t, const std::array<double, 3>& l) const {
  const State& st = *next_;
  const Mesh& mesh = *st.mesh;
  const double phi_old_q = st.prev_phi_proj.eval_bary(t, l);
  const double rho_k = params_->density(phi_old_q);
  const double rho_km1 = st.prev_rho_old.eval_bary(t, l);
  const Vec2 vn = st.v.eval_bary(t, l);
  const Vec2 vo = st.prev_v.eval_bary(t, l);
  const Vec2 bk = rho_k * vo + st.flux_J[t];
  const auto gv = st.v.grad_bary(t, l);

  // div(b^k) = drho/dphi grad(phi^k) . v^k + rho^k div v^k; J is
  // divergence-free elementwise for P1 mu
  const double div_vo = st.prev_v.div_bary(t, l);
  const double div_b = params_->d_density_dphi() * dot(grad_phi_old_[t], vo) + rho_k * div_vo;

  // div(2 eta^k D v^{k+1}) with eta as P1 interpolant of vertex viscosities
  const double eta_q = viscosity_interp(t, l);
  const Sym2 D{gv[0][0], gv[1][1], 0.5 * (gv[0][1] + gv[1][0])};
  const Sym2& hx = hess_v_[t][0];
  const Sym2& hy = hess_v_[t][1];
  const Vec2 ge = grad_eta_[t];
  const Vec2 div_visc{
      2.0 * (ge.x * D.xx + ge.y * D.xy + eta_q * (hx.xx + 0.5 * (hx.yy + hy.xy))),
      2.0 * (ge.x * D.xy + ge.y * D.yy + eta_q * (0.5 * (hx.xy + hy.xx) + hy.yy))};

  const double mu_q = st.mu.eval_bary(t, l);
  const Vec2 xq = mesh.point(t, l[0], l[1], l[2]);
  const Vec2 force = rho_k * params_->gravity + (*wind_)(xq);

  Vec2 r = 0.5 * (rho_k + rho_km1) * vn - rho_km1 * vo;
  r += tau_ * Vec2{dot(bk, {gv[0][0], gv[0][1]}), dot(bk, {gv[1][0], gv[1][1]})};
  r += (tau_ * 0.5 * div_b) * vn;
  r += (-tau_) * div_visc;
  r += tau_ * grad_p_[t];
  r += (-tau_ * mu_q) * grad_phi_old_[t];
  r += (-tau_) * force;
  return r;
}

double StepResiduals::r2(int t, const std::array<double, 3>& l) const {
  const State& st = *next_;
  const double phi_new = st.phi.eval_bary(t, l);
  const double phi_old = st.prev_phi_proj.eval_bary(t, l);
  const Vec2 vn = st.v.eval_bary(t, l);
  // div(m grad mu) vanishes elementwise: constant mobility, P1 mu
  return phi_new - phi_old + tau_ * dot(vn, grad_phi_old_[t]);
}

double StepResiduals::r3(int t, const std::array<double, 3>& l) const {
  const State& st = *next_;
  const double phi_new = st.phi.eval_bary(t, l);
  const double phi_old = st.prev_phi_proj.eval_bary(t, l);
  const double mu_q = st.mu.eval_bary(t, l);
  const double soe = params_->sigma / params_->epsilon;
  return soe * (f_plus_prime(phi_new, params_->s) + f_minus_prime(phi_old)) - mu_q;
}

namespace {

std::atomic<int> g_threads{1};

// static chunking; each index is processed exactly once and writes only its
// own outputs
void parallel_for(int n, const std::function<void(int)>& body) {
  const int nthreads = std::min(g_threads.load(), n > 0 ? n : 1);
  if (nthreads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + nthreads - 1) / nthreads;
  for (int w = 0; w < nthreads; ++w) {
    const int lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

void set_runtime_threads(int n) { g_threads.store(std::max(1, n)); }
int runtime_threads() { return g_threads.load(); }

double IndicatorField::combined_t(int t) const {
  return eta_t[t][0] * eta_t[t][0] / (tau * eta_lo) + eta_t[t][1] * eta_t[t][1] / (tau * mob_lo) +
         eta_t[t][2] * eta_t[t][2] / (sigma * epsilon);
}

double IndicatorField::combined_te(int t, const Mesh& mesh) const {
  double s = 0.0;
  for (int e : mesh.triangle_edges()[t]) {
    s += tau / eta_lo * eta_e[e][0] * eta_e[e][0] + tau / mob_lo * eta_e[e][1] * eta_e[e][1] +
         sigma * epsilon * eta_e[e][2] * eta_e[e][2];
  }
  return s;
}

IndicatorField compute_indicators(const StepResiduals& res) {
  const State& st = res.state();
  const Mesh& mesh = *st.mesh;
  const MaterialParams& params = res.params();

  IndicatorField ind;
  ind.eta_t.assign(mesh.num_triangles(), {0.0, 0.0, 0.0});
  ind.eta_e.assign(mesh.num_edges(), {0.0, 0.0, 0.0});
  ind.tau = res.tau();
  ind.eta_lo = params.min_viscosity();
  ind.mob_lo = params.mobility;
  ind.sigma = params.sigma;
  ind.epsilon = params.epsilon;

  const auto& rule = triangle_rule(8);
  parallel_for(mesh.num_triangles(), [&](int t) {
    double n1 = 0.0, n2 = 0.0, n3 = 0.0;
    const double area = mesh.area(t);
    for (const auto& q : rule.points) {
      const std::array<double, 3> l{q.l0, q.l1, q.l2};
      const Vec2 v1 = res.r1(t, l);
      const double v2 = res.r2(t, l);
      const double v3 = res.r3(t, l);
      n1 += area * q.w * dot(v1, v1);
      n2 += area * q.w * v2 * v2;
      n3 += area * q.w * v3 * v3;
    }
    const double h = mesh.diameter(t);
    ind.eta_t[t] = {h * std::sqrt(n1), h * std::sqrt(n2), h * std::sqrt(n3)};
  });

  const auto& erule = edge_rule(3);
  parallel_for(mesh.num_edges(), [&](int e) {
    const Edge& ed = mesh.edges()[e];
    if (ed.t1 == -1) return;  // no interior jump on boundary edges
    const Vec2 nu = mesh.edge_normal(e);
    const Vec2 pa = mesh.vertices()[ed.a], pb = mesh.vertices()[ed.b];
    const double he = mesh.edge_length(e);

    const Vec2 jump_gmu = st.mu.gradient(ed.t1) - st.mu.gradient(ed.t0);
    const Vec2 jump_gphi = st.phi.gradient(ed.t1) - st.phi.gradient(ed.t0);
    const double jphi = dot(jump_gphi, nu);

    double s1 = 0.0, s2 = 0.0;
    for (std::size_t iq = 0; iq < erule.t.size(); ++iq) {
      const Vec2 x = pa + erule.t[iq] * (pb - pa);
      Vec2 flux[2];
      double mob_edge = 0.0;
      const int ts[2] = {ed.t0, ed.t1};
      for (int side = 0; side < 2; ++side) {
        const int t = ts[side];
        const auto l = mesh.barycentric(t, x);
        const Sym2 D = st.v.sym_grad_bary(t, l);
        const double eta_q = res.viscosity_interp(t, l);
        flux[side] = {2.0 * eta_q * (D.xx * nu.x + D.xy * nu.y),
                      2.0 * eta_q * (D.xy * nu.x + D.yy * nu.y)};
        if (side == 0) {
          const double phi_q = st.prev_phi_proj.eval_bary(t, l);
          mob_edge = params.mobility_of(phi_q);
        }
      }
      const Vec2 jump = flux[1] - flux[0];
      s1 += erule.w[iq] * dot(jump, jump);
      const double jmu = mob_edge * dot(jump_gmu, nu);
      s2 += erule.w[iq] * jmu * jmu;
    }
    // || . ||_E^2 = he * (weighted average along the edge)
    ind.eta_e[e][0] = std::sqrt(he) * std::sqrt(he * s1);
    ind.eta_e[e][1] = std::sqrt(he) * std::sqrt(he * s2);
    ind.eta_e[e][2] = std::sqrt(he) * std::sqrt(he * jphi * jphi);
  });

  return ind;
}

double estimator_total(const IndicatorField& ind) {
  double acc = 0.0;
  for (const auto& e : ind.eta_t) {
    acc += e[0] * e[0] / (ind.tau * ind.eta_lo);
    acc += e[1] * e[1] / (ind.tau * ind.mob_lo);
    acc += e[2] * e[2] / (ind.sigma * ind.epsilon);
  }
  for (const auto& e : ind.eta_e) {
    acc += ind.tau / ind.eta_lo * e[0] * e[0];
    acc += ind.tau / ind.mob_lo * e[1] * e[1];
    acc += ind.sigma * ind.epsilon * e[2] * e[2];
  }
  return std::sqrt(acc);
}

namespace {

// Greedy bulk set: smallest prefix of the descending order reaching the
// fraction theta of the total.
std::vector<int> bulk_set(const std::vector<double>& eta, double theta) {
  const double total = std::accumulate(eta.begin(), eta.end(), 0.0);
  std::vector<int> order(eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return eta[a] > eta[b]; });
  std::vector<int> out;
  double acc = 0.0;
  for (int t : order) {
    if (acc >= theta * total) break;
    out.push_back(t);
    acc += eta[t];
  }
  return out;
}

}  // namespace

MarkResult mark(const IndicatorField& ind, const Mesh& mesh, const MarkParams& mp) {
  const int nt = mesh.num_triangles();
  std::vector<double> eta_t(nt), eta_te(nt);
  for (int t = 0; t < nt; ++t) {
    eta_t[t] = ind.combined_t(t);
    eta_te[t] = ind.combined_te(t, mesh);
  }

  std::vector<std::uint8_t> in_refine(nt, 0);
  for (int t : bulk_set(eta_t, mp.theta_r)) in_refine[t] = 1;
  for (int t : bulk_set(eta_te, mp.theta_r)) in_refine[t] = 1;

  const double sum_t = std::accumulate(eta_t.begin(), eta_t.end(), 0.0);
  const double sum_te = std::accumulate(eta_te.begin(), eta_te.end(), 0.0);
  const double thr_t = mp.theta_c / nt * sum_t;
  const double thr_te = mp.theta_c / nt * sum_te;

  MarkResult out;
  for (int t = 0; t < nt; ++t) {
    // a_min guards refinement only: children must keep area >= a_min
    if (in_refine[t] && mesh.area(t) >= 2.0 * mp.a_min) out.refine.push_back(t);
  }
  std::vector<std::uint8_t> in_ref_final(nt, 0);
  for (int t : out.refine) in_ref_final[t] = 1;
  for (int t = 0; t < nt; ++t) {
    if (in_ref_final[t]) continue;
    // a_max guards coarsening only: merged parents must keep area <= a_max
    if ((eta_t[t] <= thr_t || eta_te[t] <= thr_te) && mesh.area(t) <= 0.5 * mp.a_max)
      out.coarsen.push_back(t);
  }
  return out;
}

PatchEnergyPair star_projection_energies(const Mesh& mesh, const NodeStar& star,
                                         const ScalarFieldP1& phi, const MaterialParams& params) {
  // Pair the star triangles into their virtual parents, (c,v0,v1)+(c,v2,v0)
  // -> (v0,v1,v2), and L2-project phi restricted to the patch onto the
  // coarse patch with all patch vertices free.
  struct Parent {
    int v0, v1, v2;
    int child_a, child_b;
  };
  std::vector<Parent> parents;
  std::vector<std::uint8_t> used(star.tris.size(), 0);
  for (std::size_t i = 0; i < star.tris.size(); ++i) {
    if (used[i]) continue;
    const int ti = star.tris[i];
    for (std::size_t j = 0; j < star.tris.size(); ++j) {
      if (j == i || used[j]) continue;
      const int tj = star.tris[j];
      if (mesh.triangles()[ti][1] == mesh.triangles()[tj][2]) {
        parents.push_back({mesh.triangles()[ti][1], mesh.triangles()[ti][2],
                           mesh.triangles()[tj][1], ti, tj});
        used[i] = used[j] = 1;
        break;
      }
    }
  }

  // local vertex numbering over the coarse patch
  std::vector<int> lverts;
  auto local_of = [&](int v) {
    for (std::size_t i = 0; i < lverts.size(); ++i)
      if (lverts[i] == v) return static_cast<int>(i);
    lverts.push_back(v);
    return static_cast<int>(lverts.size()) - 1;
  };
  struct LocalTri {
    std::array<int, 3> lv;
    std::array<int, 3> gv;
    int child_a, child_b;
  };
  std::vector<LocalTri> ltris;
  for (const auto& p : parents)
    ltris.push_back({{local_of(p.v0), local_of(p.v1), local_of(p.v2)},
                     {p.v0, p.v1, p.v2},
                     p.child_a,
                     p.child_b});

  const int n = static_cast<int>(lverts.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  const auto& rule = triangle_rule(2);

  auto coarse_bary = [&](const LocalTri& lt, const Vec2& x) {
    const Vec2 p0 = mesh.vertices()[lt.gv[0]], p1 = mesh.vertices()[lt.gv[1]],
               p2 = mesh.vertices()[lt.gv[2]];
    const double a = triangle_area(p0, p1, p2);
    const double l1 = triangle_area(p0, x, p2) / a;
    const double l2 = triangle_area(p0, p1, x) / a;
    return std::array<double, 3>{1.0 - l1 - l2, l1, l2};
  };

  for (const auto& lt : ltris) {
    for (int child : {lt.child_a, lt.child_b}) {
      const double a = mesh.area(child);
      for (const auto& q : rule.points) {
        const Vec2 x = mesh.point(child, q.l0, q.l1, q.l2);
        const double f = phi.eval_bary(child, {q.l0, q.l1, q.l2});
        const auto l = coarse_bary(lt, x);
        for (int i = 0; i < 3; ++i) {
          b[lt.lv[i]] += a * q.w * l[i] * f;
          for (int j = 0; j < 3; ++j) m(lt.lv[i], lt.lv[j]) += a * q.w * l[i] * l[j];
        }
      }
    }
  }
  const Eigen::VectorXd coef = m.ldlt().solve(b);

  // energies: gradient part per triangle plus nodal free energy with the
  // patch-local lumped weights, on each of the two patch meshes
  PatchEnergyPair out;
  const double half_se = 0.5 * params.sigma * params.epsilon;
  const double soe = params.sigma / params.epsilon;

  for (int t : star.tris) {
    const Vec2 g = phi.gradient(t);
    out.fine += half_se * mesh.area(t) * dot(g, g);
    const auto& vtx = mesh.triangles()[t];
    for (int i = 0; i < 3; ++i)
      out.fine += soe * mesh.area(t) / 3.0 * free_energy(phi.values[vtx[i]], params.s);
  }

  for (const auto& lt : ltris) {
    const Vec2 p0 = mesh.vertices()[lt.gv[0]], p1 = mesh.vertices()[lt.gv[1]],
               p2 = mesh.vertices()[lt.gv[2]];
    const double a = triangle_area(p0, p1, p2);
    const double inv2a = 1.0 / (2.0 * a);
    const Vec2 g0{(p1.y - p2.y) * inv2a, (p2.x - p1.x) * inv2a};
    const Vec2 g1{(p2.y - p0.y) * inv2a, (p0.x - p2.x) * inv2a};
    const Vec2 g2{(p0.y - p1.y) * inv2a, (p1.x - p0.x) * inv2a};
    const Vec2 g = coef[lt.lv[0]] * g0 + coef[lt.lv[1]] * g1 + coef[lt.lv[2]] * g2;
    out.coarse += half_se * a * dot(g, g);
    for (int i = 0; i < 3; ++i)
      out.coarse += soe * a / 3.0 * free_energy(coef[lt.lv[i]], params.s);
  }
  return out;
}

PostprocessResult postprocess_coarsen(const Mesh& mesh, const std::vector<int>& coarsen_set,
                                      const ScalarFieldP1& phi, const MaterialParams& params,
                                      bool check_energy) {
  std::vector<std::uint8_t> marked(mesh.num_triangles(), 0);
  for (int t : coarsen_set) marked[t] = 1;

  PostprocessResult out;
  int in_complete_star = 0;
  for (const NodeStar& s : mesh.find_node_stars()) {
    bool all = true;
    for (int t : s.tris) all &= (marked[t] != 0);
    if (!all) continue;
    in_complete_star += static_cast<int>(s.tris.size());
    if (check_energy) {
      const PatchEnergyPair e = star_projection_energies(mesh, s, phi, params);
      if (e.coarse > e.fine + 1e-13) {
        ++out.dropped_energy;
        continue;
      }
    }
    out.stars.push_back(s);
  }
  out.dropped_incomplete = static_cast<int>(coarsen_set.size()) - in_complete_star;
  return out;
}

AdaptResult adapt_step(const State& state, std::shared_ptr<const Mesh> mesh,
                       const MaterialParams& params, const WindForce& wind, double tau,
                       const AdaptOptions& opts) {
  AdaptResult out;
  const StepResiduals res(state, params, wind, tau);
  const IndicatorField ind = compute_indicators(res);
  out.eta_omega = estimator_total(ind);

  if (out.eta_omega <= opts.eta_floor) {
    out.mesh = mesh;
    out.min_area = out.max_area = mesh->area(0);
    for (int t = 1; t < mesh->num_triangles(); ++t) {
      out.min_area = std::min(out.min_area, mesh->area(t));
      out.max_area = std::max(out.max_area, mesh->area(t));
    }
    return out;
  }

  const MarkResult marks = mark(ind, *mesh, opts.mark);
  const PostprocessResult post =
      postprocess_coarsen(*mesh, marks.coarsen, state.phi, params, opts.postprocess);
  out.n_marked_refine = static_cast<int>(marks.refine.size());
  out.n_coarsened_stars = static_cast<int>(post.stars.size());
  out.n_filtered_stars = post.dropped_energy;
  if (opts.postprocess)
    for (const NodeStar& s : post.stars)
      out.star_energies.push_back(star_projection_energies(*mesh, s, state.phi, params));

  if (marks.refine.empty() && post.stars.empty()) {
    out.mesh = mesh;
  } else {
    std::shared_ptr<const Mesh> cur = mesh;
    if (!post.stars.empty()) {
      auto [coarse, cmap] = cur->coarsen(post.stars);
      auto cmesh = std::make_shared<const Mesh>(std::move(coarse));
      out.hops.push_back({cmesh, std::move(cmap)});
      cur = cmesh;
    }
    if (!marks.refine.empty()) {
      std::vector<int> translated;
      translated.reserve(marks.refine.size());
      if (!out.hops.empty()) {
        const TransferMap& cmap = out.hops.back().map;
        std::vector<std::uint8_t> merged(cur->num_triangles(), 0);
        for (const NodeStar& s : post.stars)
          for (int t : s.tris) merged[cmap.ancestor[t]] = 1;
        for (int t : marks.refine)
          if (!merged[cmap.ancestor[t]]) translated.push_back(cmap.ancestor[t]);
      } else {
        translated = marks.refine;
      }
      for (int pass = 0; pass < std::max(1, opts.bisections) && !translated.empty(); ++pass) {
        auto [fine, rmap] = cur->refine(translated);
        auto fmesh = std::make_shared<const Mesh>(std::move(fine));
        // deeper passes target the children of this pass's marked set,
        // subject to the same area floor
        std::vector<std::uint8_t> was_marked(cur->num_triangles(), 0);
        for (int t : translated) was_marked[t] = 1;
        std::vector<int> next;
        for (int t = 0; t < fmesh->num_triangles(); ++t)
          if (was_marked[rmap.ancestor[t]] && fmesh->area(t) >= 2.0 * opts.mark.a_min)
            next.push_back(t);
        out.hops.push_back({fmesh, std::move(rmap)});
        cur = fmesh;
        translated = std::move(next);
      }
    }
    out.mesh = cur;
  }

  out.min_area = 1e300;
  out.max_area = 0.0;
  for (int t = 0; t < out.mesh->num_triangles(); ++t) {
    out.min_area = std::min(out.min_area, out.mesh->area(t));
    out.max_area = std::max(out.max_area, out.mesh->area(t));
  }
  return out;
}

}  // namespace chns
