// Run configuration: plain key = value files with # comments, unknown keys
// rejected, defaults matching the wind-wave scenario.
#pragma once

#include <string>

#include "chns/adapt.hpp"
#include "chns/assembly.hpp"

namespace chns {

struct RunConfig {
  // domain and initial mesh
  double domain_width = 3.0;
  double domain_height = 1.0;
  int nx = 48;
  int ny = 16;

  // time stepping
  double tau = 5e-4;
  double t_end = 10.0;

  MaterialParams material;       // mobility finalized below when automatic
  bool mobility_auto = true;     // b = epsilon / (500 sigma)

  // wind forcing and scenario geometry. The published scenario places the
  // interface and the force bell outside the domain; the defaults move both
  // inside, `paper_literal_geometry` restores the printed values.
  WindForce wind;
  double surface_height = 0.5;
  double wave_amplitude = 0.02;
  bool paper_literal_geometry = false;

  enum class Phi0Mode { wave, constant };
  Phi0Mode phi0_mode = Phi0Mode::wave;
  double phi0_constant = 1.0;

  BCSpec bc;

  // adaptation
  bool adaptive = false;
  AdaptOptions adapt;

  // solver
  SchemeOptions scheme;

  // output
  std::string output_dir = "out";
  int output_interval = 100;     // steps between field snapshots, 0 = final only
  bool write_vtk = true;
  bool refined_output = false;
  int checkpoint_interval = 0;   // 0 = final only
  int threads = 1;
  unsigned long seed = 42;       // test fields only

  void validate() const;          // throws with the violated key named
  double resolved_mobility() const;
  MaterialParams resolved_material() const;
  WindForce resolved_wind() const;
  // wave coordinate z(x) of the initial profile, honoring the literal switch
  double initial_z(const Vec2& x) const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);  // same grammar, from memory
std::string serialize_config(const RunConfig& c);

}  // namespace chns
