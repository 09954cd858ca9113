// Versioned text checkpoints; doubles stored as hex floats so a restart
// reproduces the run bit for bit.
#pragma once

#include <string>

#include "chns/solver.hpp"

namespace chns {

struct Checkpoint {
  State state;
  double time = 0.0;
  explicit Checkpoint(State s) : state(std::move(s)) {}
};

void save_checkpoint(const State& state, double time, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace chns
