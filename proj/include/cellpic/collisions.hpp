#pragma once

#include "cellpic/core.hpp"
#include "cellpic/rng.hpp"

#include <cstdint>
#include <string>

namespace cellpic {

class Scheduler;

/// Constant rate coefficients for electron-neutral processes.
struct CollisionRates {
    double rate_ionization_m3s = 0.0;
    double rate_elastic_m3s = 0.0;
    double rate_excitation_m3s = 0.0;
    double excitation_threshold_ev = 0.0;
    double ionization_threshold_ev = 0.0;

    void validate() const;
};

/// Which species play electron, ion and neutral in the collision model.
struct CollisionRoles {
    int electron = -1;
    int ion = -1;
    int neutral = -1;
};

struct CollisionSetup {
    bool enabled = false;
    CollisionRates rates;
    CollisionRoles roles;

    /// Check the roles against a species table (distinct indices, neutral
    /// is uncharged, equal macro weights when ionization is on).
    void validate(const std::vector<SpeciesDef>& species) const;
};

struct CollisionTally {
    std::uint64_t elastic = 0;
    std::uint64_t excitation = 0;
    std::uint64_t ionization = 0;
    std::uint64_t suppressed = 0;

    CollisionTally& operator+=(const CollisionTally& o);
    bool operator==(const CollisionTally&) const = default;
    std::uint64_t total() const { return elastic + excitation + ionization; }
};

/// P = 1 - exp(-n R Δt), evaluated without cancellation for small arguments.
double process_probability(double target_density_m3, double rate_m3s, double dt_s);

/// Per-process probabilities for one sub-step, after the step-split guard.
struct CollisionProbabilities {
    double elastic = 0.0;
    double excitation = 0.0;
    double ionization = 0.0;
    int substeps = 1;

    double sum() const { return elastic + excitation + ionization; }
};

/// Halve the collision time step until the summed probability is below
/// `kMaxCombinedProbability`.
CollisionProbabilities collision_probabilities(double neutral_density_m3, const CollisionRates& rates,
                                               double dt_s);

inline constexpr double kMaxCombinedProbability = 0.1;

/// Neutral number density in a cell of `store`.
double neutral_density(const CellSortedStore& store, const CollisionSetup& setup, const Grid1D& grid,
                       int local_cell);

/// Monte Carlo electron-neutral collisions in one cell, drawing only from `rng`.
CollisionTally collide_cell(CellSortedStore& store, int local_cell, const CollisionSetup& setup,
                            const Grid1D& grid, const PhysicalConstants& consts, CounterRng& rng);

/// The stream a cell uses at a given step: keyed by the global cell index
/// so that results do not depend on how cells are split among workers.
CounterRng collision_stream(std::uint64_t seed, std::int64_t step, int global_cell);

/// collide_cell over cells [begin, end) of `store`.
CollisionTally collide_cells(CellSortedStore& store, int begin, int end, const CollisionSetup& setup,
                             const Grid1D& grid, const PhysicalConstants& consts, std::uint64_t seed,
                             std::int64_t step);

/// collide_cell over every cell, split into blocks of `grainsize` cells.
CollisionTally collision_phase(CellSortedStore& store, const CollisionSetup& setup, const Grid1D& grid,
                               const PhysicalConstants& consts, Scheduler& scheduler,
                               std::size_t grainsize, std::uint64_t seed, std::int64_t step);

/// Kinetic energy in eV of a particle with grid-unit velocity (vx, vy, vz).
double kinetic_energy_ev(const SpeciesDef& sp, const ParticleRecord& p, const Grid1D& grid,
                         const PhysicalConstants& consts);

} // namespace cellpic
