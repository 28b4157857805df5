#pragma once

#include "cellpic/collisions.hpp"
#include "cellpic/config.hpp"
#include "cellpic/fields.hpp"
#include "cellpic/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace cellpic {

/// Phase keys recorded by run_simulation.
inline constexpr const char* kPhaseKeys[] = {"deposit", "smooth", "solve", "gather", "mover",
                                             "resort",  "collide", "migrate", "total"};

struct StepDiagnostics {
    int step = 0;
    std::vector<std::size_t> species_totals;
    CollisionTally tally;
    std::uint64_t rho_fingerprint = 0;

    bool operator==(const StepDiagnostics&) const = default;
};

struct RunDescriptor {
    std::uint64_t config_hash = 0;
    int workers = 1;
    LayoutVariant layout = LayoutVariant::cell_sorted;
    std::vector<std::string> species_names;
};

struct RunMetrics {
    PhaseTimers phases;
    std::vector<StepDiagnostics> steps; // steps[0] is the initial state
    RunDescriptor descriptor;
    FieldState final_fields;
    Grid1D grid;

    double seconds(const std::string& phase) const { return phases.get(phase); }
};

/// Called after every step with the stitched density and the subdomain stores.
using StepObserver =
    std::function<void(int step, const FieldState& fields, std::span<const CellSortedStore> stores)>;

struct RunOptions {
    StepObserver observer;
    bool trace = false;
    /// Where to write trace.csv when `trace` is set (empty: keep in memory only).
    std::filesystem::path trace_path;
};

/// Run n_steps of deposit → smooth → solve → collide → gather → push →
/// resort → migrate with `worker_count` subdomains. The ionization-decay
/// scenario skips smoothing and the field solve.
RunMetrics run_simulation(const RunConfig& cfg, const RunOptions& options = {});

/// t1 / tn. Throws Error for non-positive times.
double compute_speedup(double t1, double tn);

/// 100 · speedup / workers. Throws Error when workers < 1.
double compute_parallel_efficiency(double speedup, int workers);

struct ScalingRow {
    int workers = 1;
    int nc = 0;
    double t_total = 0.0;
    double t_mover = 0.0;
    double speedup = 1.0;
    double pe = 100.0;
    double runtime_ratio = 1.0; // T(n) / T(1)
};

struct ScalingReport {
    bool weak = false;
    std::vector<ScalingRow> rows;
    /// True when the physics diagnostics of every row match the first row
    /// (strong scaling only; weak-scaling rows solve different problems).
    bool diagnostics_identical = true;
    std::vector<RunMetrics> runs;
};

ScalingReport strong_scaling_sweep(const RunConfig& cfg, std::span<const int> workers);

/// Each row uses nc = base nc × workers (and a proportionally longer
/// domain, so dx is unchanged); the reference time is the one-worker run.
ScalingReport weak_scaling_sweep(const RunConfig& cfg, std::span<const int> workers);

void write_diagnostics_csv(const std::filesystem::path& path, const RunMetrics& m);
void write_tally_csv(const std::filesystem::path& path, const RunMetrics& m, int neutral_species);
void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& m);
void write_fields_csv(const std::filesystem::path& path, const Grid1D& grid, const FieldState& fields);
void write_scaling_csv(const std::filesystem::path& path, const ScalingReport& report);

} // namespace cellpic
