#pragma once

#include "cellpic/core.hpp"
#include "cellpic/fields.hpp"
#include "cellpic/metrics.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cellpic {

class Scheduler;

/// Velocity increment per unit field, in grid units: (q/m) dt^2 / dx.
double kick_factor(const SpeciesDef& sp, const Grid1D& grid, const PhysicalConstants& consts);

/// vx += (q/m) E_p dt for one species. Throws ContractViolation for a
/// neutral species.
void push_velocity(CellSortedStore& store, std::size_t isp, const ParticleField& ep, const Grid1D& grid,
                   const PhysicalConstants& consts);
void push_velocity_cells(CellSortedStore& store, std::size_t isp, const ParticleField& ep, double factor,
                         int begin, int end);

/// x += nstep vx (and yp += nstep vy when tracked). Offsets may leave
/// [0, 1) until the next resort.
void push_position(CellSortedStore& store, std::size_t isp);
void push_position_cells(CellSortedStore& store, std::size_t isp, int begin, int end);

/// A particle leaving its cell, with its offset already normalised to the
/// destination cell. Cells are global indices.
struct Emigrant {
    int species = 0;
    int source_cell = 0;
    int dest_cell = 0;
    ParticleRecord particle;
};

/// Pull every particle with x outside [0, 1) out of local cells [begin, end),
/// compacting the remaining particles in order. Emigrants are appended in
/// (cell, species, particle) order. Throws CflViolation when a particle
/// would skip nc or more cells.
void extract_emigrants(CellSortedStore& store, int begin, int end, std::vector<Emigrant>& out);

/// Append emigrants to their destination cells in the given order. Every
/// destination must lie inside `store`.
void insert_immigrants(CellSortedStore& store, std::span<const Emigrant> incoming);

/// Move out-of-cell particles to cell j + floor(x) (wrapping periodically)
/// with x - floor(x). Returns the number of particles moved.
std::size_t resort(CellSortedStore& store, const Grid1D& grid);

/// Gather, velocity push and position push for every active species, over
/// blocks of `grainsize` cells. Elapsed time goes to the "gather" and
/// "mover" phases.
void mover_phase(CellSortedStore& store, std::span<const double> e_field, const Grid1D& grid,
                 const PhysicalConstants& consts, Scheduler& scheduler, std::size_t grainsize,
                 PhaseTimers* timers = nullptr);

/// Parallel resort: per-block extraction, then a serial merge in block
/// order. Identical output to resort() for any worker count or grainsize.
std::size_t resort_phase(CellSortedStore& store, Scheduler& scheduler, std::size_t grainsize,
                         PhaseTimers* timers = nullptr);

} // namespace cellpic
