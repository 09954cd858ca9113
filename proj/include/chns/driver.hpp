// Run driver: owns the time loop, the adaptation cycle and all file output.
#pragma once

#include <optional>
#include <string>

#include "chns/adapt.hpp"
#include "chns/checkpoint.hpp"
#include "chns/config.hpp"
#include "chns/solver.hpp"

namespace chns {

struct TimeSeriesRow {
  int step = 0;
  double time = 0.0;
  EnergyReport report;
  double eta_omega = 0.0;
  int n_tri = 0;
  int ssn_iters = 0;
};

inline constexpr const char* kCsvHeader =
    "step,time,e_kin,e_gl,e_total,d_visc,d_mob,w_grav,slack,mass,eta_omega,n_tri,ssn_iters";

std::string csv_row(const TimeSeriesRow& row);

// In-memory simulation; file output lives in run(). The adaptation cycle
// SOLVE -> ESTIMATE -> MARK -> ADAPT runs once per step: after each solve the
// indicators are computed (eta_omega of the row) and, in adaptive mode, the
// mesh for the next solve is prepared.
class Simulation {
 public:
  explicit Simulation(RunConfig cfg);

  TimeSeriesRow advance();  // first call runs the initialization step
  bool finished() const;

  const State& state() const { return *state_; }
  double time() const { return time_; }
  bool started() const { return state_.has_value(); }
  const std::optional<AdaptResult>& pending_adapt() const { return pending_; }
  // initial discrete mass and energy, available after the first advance
  double initial_mass() const { return mass0_; }
  double initial_energy() const { return energy0_; }
  // step index whose solve was rejected once and redone with tau/2 (latest)
  std::optional<int> last_halved_step() const { return halved_; }

  void restore(Checkpoint cp);

  const RunConfig& config() const { return cfg_; }
  const MaterialParams& material() const { return params_; }
  const WindForce& wind() const { return wind_; }

 private:
  TimeSeriesRow finish_step(double tau_used);

  RunConfig cfg_;
  MaterialParams params_;
  WindForce wind_;
  std::optional<State> state_;
  double time_ = 0.0;
  double mass0_ = 0.0;
  double energy0_ = 0.0;
  std::optional<AdaptResult> pending_;
  std::optional<int> halved_;
};

// Executes the configured run, writing timeseries.csv, field snapshots and
// checkpoints under config.output_dir. Returns the process exit status; a
// solver abort leaves the last checkpoint intact and returns nonzero.
int run(const RunConfig& cfg, const std::optional<std::string>& restart_path = std::nullopt);

}  // namespace chns
