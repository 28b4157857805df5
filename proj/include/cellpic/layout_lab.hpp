#pragma once

#include "cellpic/config.hpp"
#include "cellpic/core.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cellpic {

/// A particle that carries its own cell index.
struct TaggedParticle {
    double x = 0.0;
    double yp = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double vz = 0.0;
    int cell = 0;
};

/// Vector-of-structs layout: one growable vector of particle objects per
/// species, in no particular spatial order.
struct VectorOfStructsStore {
    std::vector<SpeciesDef> species;
    int nc = 0;
    std::vector<std::vector<TaggedParticle>> particles;
};

/// Array-of-structs layout: one contiguous block per species in cell-major
/// order, with `offsets[j]` the index of the first particle of cell j.
struct ArrayOfStructsStore {
    std::vector<SpeciesDef> species;
    int nc = 0;
    std::vector<std::vector<ParticleRecord>> particles;
    std::vector<std::vector<std::size_t>> offsets; // nc + 1 entries per species
};

using LayoutStore = std::variant<CellSortedStore, VectorOfStructsStore, ArrayOfStructsStore>;

LayoutVariant variant_of(const LayoutStore& store);

/// Lossless conversion of a resorted store into another layout.
LayoutStore convert_layout(const CellSortedStore& store, LayoutVariant target);

/// Back to natural sorting. Particles keep their relative order within a cell.
CellSortedStore to_cell_sorted(const LayoutStore& store);

/// Field-driven kick and drift in one pass: a = E[j] + x (E[j+1] - E[j]),
/// vx += factor a, x += nstep vx. Each layout has its own loop; the
/// arithmetic is shared so all layouts agree bitwise.
void mover_kernel(LayoutStore& store, std::span<const double> e_field, const Grid1D& grid,
                  const PhysicalConstants& consts);

/// Return every particle to [0, 1) with periodic wrap. Array-of-structs
/// is re-bucketed to keep cell-major order.
void layout_resort(LayoutStore& store);

/// A particle flattened with its global cell, for layout-independent
/// comparisons.
struct FlatParticle {
    int cell = 0;
    ParticleRecord p;

    auto key() const { return std::tie(cell, p.x, p.yp, p.vx, p.vy, p.vz); }
    bool operator<(const FlatParticle& o) const { return key() < o.key(); }
    bool operator==(const FlatParticle& o) const = default;
};

/// Per species, every particle sorted by (cell, x, yp, vx, vy, vz).
std::vector<std::vector<FlatParticle>> canonical_particles(const LayoutStore& store);

/// Periodic CIC density computed from the canonical particle order, so it
/// does not depend on the layout's storage order.
std::vector<double> canonical_density(const LayoutStore& store, const Grid1D& grid);

/// Self-consistent collisionless run in one layout: canonical deposit,
/// smoothing, periodic field solve, fused mover, resort. Returns the
/// fingerprint of the density at every step.
std::vector<std::uint64_t> simulate_layout(LayoutStore& store, const Grid1D& grid,
                                           const PhysicalConstants& consts, int steps, int smoother_passes = 1);

struct LayoutTiming {
    LayoutVariant layout = LayoutVariant::cell_sorted;
    std::string scenario;
    std::size_t ppc_total = 0;
    double ns_per_particle_median = 0.0;
    double ns_per_particle_iqr = 0.0;
};

struct LayoutBenchOptions {
    int repetitions = 5;
    int steps_per_repetition = 10;
    int warmup_repetitions = 1;
    std::vector<LayoutVariant> layouts = {LayoutVariant::cell_sorted, LayoutVariant::vector_of_structs,
                                          LayoutVariant::array_of_structs};
};

/// Particle counts per cell for the "skewed" scenario: 90% of the total in
/// the first 10% of cells, the rest spread over the remaining cells.
std::vector<std::size_t> skewed_counts(int nc, std::size_t total);

/// Time mover_kernel for each layout on a uniform and a skewed particle
/// distribution built from `cfg`. Throws ConfigError if repetitions < 3.
std::vector<LayoutTiming> bench_layouts(const RunConfig& cfg, const LayoutBenchOptions& options);

void write_layout_csv(const std::filesystem::path& path, std::span<const LayoutTiming> rows);

/// Median and interquartile range (linear interpolation between order
/// statistics).
double median(std::vector<double> values);
double interquartile_range(std::vector<double> values);

} // namespace cellpic
