#pragma once

#include "cellpic/collisions.hpp"
#include "cellpic/core.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace cellpic {

/// kIonizationDecay runs the neutral-ionization test case, which skips the
/// smoother and the field solver (the field stays zero). kFullPic runs the
/// whole cycle.
enum class Scenario { ionization_decay, full_pic };

const char* to_string(Scenario s);

struct OutputConfig {
    std::filesystem::path dir = "out";
    bool trace = true;
};

struct RunConfig {
    Grid1D grid;
    PhysicalConstants consts;
    std::vector<SpeciesDef> species;
    int ppc0 = 1;
    int n_steps = 1;
    std::uint64_t seed = 1;
    CollisionSetup collisions;
    int worker_count = 1;
    int grainsize = 500;
    LayoutVariant layout = LayoutVariant::cell_sorted;
    Scenario scenario = Scenario::ionization_decay;
    FieldBoundary field_bc = FieldBoundary::periodic();
    int smoother_passes = 1;
    double capacity_slack = 1.5;
    std::uint64_t memory_cap_bytes = 0; // 0 = unlimited
    OutputConfig output;

    /// Recompute derived fields (dx, charged flags, macro weights).
    void finalize();
    /// Throws ConfigError on any violated invariant. Programmatic runs may
    /// ask for zero steps (initial diagnostics only).
    void validate(bool allow_zero_steps = false) const;

    int species_index(const std::string& name) const;
};

/// Parse a configuration document. Unknown keys are an error.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Stable hash of the physics-relevant configuration (excludes worker
/// count, grainsize and output settings).
std::uint64_t config_hash(const RunConfig& cfg);

/// Slots allocated per cell at start-up: ceil(capacity_slack * ppc0).
std::size_t initial_cell_capacity(const RunConfig& cfg);

/// Load ppc0 particles of every species into every cell: uniform offsets,
/// Maxwellian velocities. Deterministic per (seed, species, global cell).
CellSortedStore init_plasma(const RunConfig& cfg);

/// Same load restricted to global cells [first_cell, first_cell + cell_count).
CellSortedStore init_plasma(const RunConfig& cfg, int first_cell, int cell_count);

/// Electrons, D+ ions and D neutrals at 1e21 m^-3; 20 eV plasma and 1 eV
/// gas, dt = 4e-14 s and dx = 10 um. Ionization rate set so that
/// n_e R dt = 1e-3.
RunConfig desk_scale_config();

/// The same case at production size: 100,000 cells over 1 m, 100 particles
/// per cell per species, 200,000 steps.
RunConfig production_scale_config();

} // namespace cellpic
