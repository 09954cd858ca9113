#include "chns/driver.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "chns/vtk.hpp"

namespace chns {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string csv_row(const TimeSeriesRow& r) {
  std::string s;
  s += std::to_string(r.step) + "," + num(r.time) + "," + num(r.report.e_kin_new) + "," +
       num(r.report.e_gl_new) + "," + num(r.report.e_total()) + "," + num(r.report.d_visc) + "," +
       num(r.report.d_mob) + "," + num(r.report.w_grav) + "," + num(r.report.slack) + "," +
       num(r.report.mass) + "," + num(r.eta_omega) + "," + std::to_string(r.n_tri) + "," +
       std::to_string(r.ssn_iters);
  return s;
}

Simulation::Simulation(RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  params_ = cfg_.resolved_material();
  params_.validate();
  wind_ = cfg_.resolved_wind();
  set_runtime_threads(cfg_.threads);
}

bool Simulation::finished() const {
  if (!state_) return false;
  return time_ >= cfg_.t_end * (1.0 - 1e-12);
}

TimeSeriesRow Simulation::finish_step(double tau_used) {
  time_ += tau_used;
  TimeSeriesRow row;
  row.step = state_->k;
  row.time = time_;
  row.report = energy_report(*state_, params_, wind_, tau_used);
  row.n_tri = state_->mesh->num_triangles();
  row.ssn_iters = state_->ssn_iters;

  // ESTIMATE (and in adaptive mode MARK + ADAPT) for the next solve
  AdaptOptions opts = cfg_.adapt;
  AdaptResult ar = adapt_step(*state_, state_->mesh, params_, wind_, tau_used, opts);
  row.eta_omega = ar.eta_omega;
  if (cfg_.adaptive)
    pending_ = std::move(ar);
  else
    pending_.reset();
  return row;
}

TimeSeriesRow Simulation::advance() {
  if (!state_) {
    auto mesh = std::make_shared<const Mesh>(
        Mesh::rectangle(cfg_.domain_width, cfg_.domain_height, cfg_.nx, cfg_.ny));
    ScalarFieldP1 phi0(*mesh);
    if (cfg_.phi0_mode == RunConfig::Phi0Mode::constant) {
      for (double& v : phi0.values) v = cfg_.phi0_constant;
    } else {
      phi0 = project_initial_phase(
          *mesh, [&](const Vec2& x) { return initial_phase_profile(cfg_.initial_z(x), params_.s); });
    }
    const VectorFieldP2 v0(*mesh);
    mass0_ = integrate_p1(phi0);
    energy0_ = ginzburg_landau_energy(phi0, params_);  // v0 = 0, no kinetic part

    state_ = init_step(phi0, v0, mesh, params_, wind_, cfg_.bc, cfg_.tau, cfg_.scheme);
    return finish_step(cfg_.tau);
  }

  std::vector<Hop> hops;
  if (cfg_.adaptive && pending_ && !pending_->hops.empty()) hops = pending_->hops;

  double tau_used = cfg_.tau;
  try {
    state_ = time_step(*state_, hops, params_, wind_, cfg_.bc, tau_used, cfg_.scheme);
  } catch (const SsnFailure&) {
    // rejection policy: a single retry with half the step size
    tau_used = 0.5 * cfg_.tau;
    halved_ = state_->k + 1;
    state_ = time_step(*state_, hops, params_, wind_, cfg_.bc, tau_used, cfg_.scheme);
  }
  return finish_step(tau_used);
}

void Simulation::restore(Checkpoint cp) {
  time_ = cp.time;
  state_.emplace(std::move(cp.state));
  // the adaptation decision is a pure function of the restored level
  AdaptResult ar = adapt_step(*state_, state_->mesh, params_, wind_, cfg_.tau, cfg_.adapt);
  if (cfg_.adaptive)
    pending_ = std::move(ar);
  else
    pending_.reset();
}

int run(const RunConfig& cfg, const std::optional<std::string>& restart_path) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const std::string csv_path = cfg.output_dir + "/timeseries.csv";

  Simulation sim(cfg);
  if (restart_path) sim.restore(load_checkpoint(*restart_path));

  const bool fresh = !fs::exists(csv_path) || !restart_path;
  std::ofstream csv(csv_path, fresh ? std::ios::trunc : std::ios::app);
  if (!csv) {
    std::cerr << "cannot open " << csv_path << " for writing\n";
    return 1;
  }
  if (fresh) csv << kCsvHeader << "\n";

  auto snapshot = [&](const TimeSeriesRow& row) {
    char name[64];
    std::snprintf(name, sizeof name, "fields_%06d.vtk", row.step);
    if (cfg.write_vtk)
      write_fields_vtk(sim.state(), cfg.output_dir + "/" + name, cfg.refined_output);
  };
  auto checkpoint = [&](int step) {
    char name[64];
    std::snprintf(name, sizeof name, "checkpoint_%06d.chk", step);
    save_checkpoint(sim.state(), sim.time(), cfg.output_dir + "/" + name);
  };

  try {
    while (!sim.finished()) {
      const TimeSeriesRow row = sim.advance();
      csv << csv_row(row) << "\n";
      csv.flush();
      const bool at_interval = cfg.output_interval > 0 && row.step % cfg.output_interval == 0;
      if (at_interval || sim.finished()) snapshot(row);
      const bool cp_interval =
          cfg.checkpoint_interval > 0 && row.step % cfg.checkpoint_interval == 0;
      if (cp_interval || sim.finished()) checkpoint(row.step);
    }
  } catch (const std::exception& e) {
    std::cerr << "run aborted at t = " << sim.time() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace chns
