// Legacy-VTK ASCII writers for field snapshots and per-cell indicator data.
#pragma once

#include <string>

#include "chns/adapt.hpp"
#include "chns/solver.hpp"

namespace chns {

// Unstructured grid, triangles as cell type 5; phi, mu, p as point scalars,
// velocity as point vectors sampled at vertices. With refined = true every
// triangle is split in four so the P2 edge values become visible.
void write_fields_vtk(const State& state, const std::string& path, bool refined = false);

// Cell data: the three per-triangle indicator components and their combined
// marking values.
void write_indicators_vtk(const Mesh& mesh, const IndicatorField& ind, const std::string& path);

}  // namespace chns
