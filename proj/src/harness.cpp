#include "cellpic/harness.hpp"

#include "cellpic/csv.hpp"
#include "cellpic/decomposition.hpp"
#include "cellpic/error.hpp"
#include "cellpic/mover.hpp"
#include "cellpic/scheduler.hpp"

#include <algorithm>
#include <cstdio>

namespace cellpic {

namespace {

struct Block {
    int worker;
    int begin;
    int end;
};

std::vector<Block> blocks_of(const std::vector<CellSortedStore>& stores, int grainsize) {
    std::vector<Block> out;
    for (std::size_t w = 0; w < stores.size(); ++w) {
        const int n = stores[w].cell_count();
        for (int b = 0; b < n; b += grainsize) out.push_back({static_cast<int>(w), b, std::min(n, b + grainsize)});
    }
    return out;
}

/// Submit one task per block on the block's worker queue and wait for all.
template <class Body>
void run_blocks(Scheduler& scheduler, const std::vector<Block>& blocks, const char* tag, Body body) {
    std::vector<TaskHandle> handles;
    handles.reserve(blocks.size());
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        handles.push_back(scheduler.submit({[&body, &blocks, k] { body(k, blocks[k]); }, {}, blocks[k].worker, tag}));
    }
    scheduler.wait(std::span<const TaskHandle>(handles));
}

/// Rethrow `e` as the same library error type with step and phase context.
[[noreturn]] void rethrow_with_context(int step, const char* phase) {
    const std::string where = "step " + std::to_string(step) + ", phase " + phase + ": ";
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
    } catch (const ContractViolation& e) {
        throw ContractViolation(where + e.what());
    } catch (const CflViolation& e) {
        throw CflViolation(where + e.what());
    } catch (const AllocationError& e) {
        throw AllocationError(where + e.what());
    } catch (const SizeError& e) {
        throw SizeError(where + e.what());
    } catch (const SchedulerError& e) {
        throw SchedulerError(where + e.what());
    } catch (const std::exception& e) {
        throw Error(where + e.what());
    }
}

template <class Fn>
void phase(PhaseTimers& timers, int step, const char* name, Fn fn) {
    Stopwatch watch;
    try {
        fn();
    } catch (...) {
        rethrow_with_context(step, name);
    }
    timers.add(name, watch.seconds());
}

class Engine {
public:
    explicit Engine(const RunConfig& cfg)
        : cfg_(cfg), partition_(partition_grid(cfg.grid.nc, cfg.worker_count)) {
        for (const CellRange& r : partition_.ranges) stores_.push_back(init_plasma(cfg, r.begin, r.size()));
        fields_ = FieldState(cfg.grid.nc);
    }

    std::vector<CellSortedStore>& stores() { return stores_; }
    const FieldState& fields() const { return fields_; }

    std::vector<std::size_t> totals() const {
        std::vector<std::size_t> t(cfg_.species.size(), 0);
        for (const auto& s : stores_) {
            for (std::size_t isp = 0; isp < t.size(); ++isp) t[isp] += s.total(isp);
        }
        return t;
    }

    std::vector<double> deposit(Scheduler& scheduler) {
        const auto blocks = blocks_of(stores_, cfg_.grainsize);
        std::vector<DepositPartials> partials;
        for (const auto& s : stores_) partials.emplace_back(s.cell_count());
        run_blocks(scheduler, blocks, "deposit", [&](std::size_t, const Block& b) {
            const auto w = static_cast<std::size_t>(b.worker);
            accumulate_partials(stores_[w], cfg_.grid, b.begin, b.end, partials[w]);
        });
        std::vector<DensityPiece> pieces;
        for (std::size_t w = 0; w < stores_.size(); ++w) pieces.push_back(assemble_piece(stores_[w], partials[w]));
        return exchange_guard_density(pieces, partition_, cfg_.field_bc);
    }

    void smooth(std::vector<double>& rho) const {
        if (cfg_.smoother_passes > 0) rho = smooth_density(rho, cfg_.smoother_passes);
    }

    void solve() {
        fields_.phi = solve_poisson(fields_.rho, cfg_.grid, cfg_.consts, cfg_.field_bc, &fields_.subtracted_mean_rho);
        fields_.e_field = compute_efield(fields_.phi, cfg_.grid, cfg_.field_bc);
    }

    void set_rho(std::vector<double> rho) { fields_.rho = std::move(rho); }

    CollisionTally collide(Scheduler& scheduler, int step) {
        const auto blocks = blocks_of(stores_, cfg_.grainsize);
        std::vector<CollisionTally> partial(blocks.size());
        run_blocks(scheduler, blocks, "collide", [&](std::size_t k, const Block& b) {
            partial[k] = collide_cells(stores_[static_cast<std::size_t>(b.worker)], b.begin, b.end, cfg_.collisions,
                                       cfg_.grid, cfg_.consts, cfg_.seed, step);
        });
        CollisionTally total;
        for (const auto& t : partial) total += t;
        return total;
    }

    void gather(Scheduler& scheduler) {
        particle_fields_.resize(stores_.size());
        for (std::size_t w = 0; w < stores_.size(); ++w) shape_like(particle_fields_[w], stores_[w]);
        const auto blocks = species_blocks([](const SpeciesDef& sp) { return sp.active_mover && sp.charged; });
        run_blocks(scheduler, blocks.blocks, "gather", [&](std::size_t k, const Block& b) {
            const auto w = static_cast<std::size_t>(b.worker);
            gather_cells(fields_.e_field, stores_[w], blocks.species[k], b.begin, b.end, particle_fields_[w]);
        });
    }

    void move(Scheduler& scheduler) {
        const auto blocks = species_blocks([](const SpeciesDef& sp) { return sp.active_mover; });
        run_blocks(scheduler, blocks.blocks, "mover", [&](std::size_t k, const Block& b) {
            const auto w = static_cast<std::size_t>(b.worker);
            const std::size_t isp = blocks.species[k];
            const SpeciesDef& sp = cfg_.species[isp];
            if (sp.charged) {
                push_velocity_cells(stores_[w], isp, particle_fields_[w], kick_factor(sp, cfg_.grid, cfg_.consts),
                                    b.begin, b.end);
            }
            push_position_cells(stores_[w], isp, b.begin, b.end);
        });
    }

    void resort(Scheduler& scheduler) {
        const auto blocks = blocks_of(stores_, cfg_.grainsize);
        std::vector<std::vector<Emigrant>> per_block(blocks.size());
        run_blocks(scheduler, blocks, "resort", [&](std::size_t k, const Block& b) {
            extract_emigrants(stores_[static_cast<std::size_t>(b.worker)], b.begin, b.end, per_block[k]);
        });
        emigrants_.assign(stores_.size(), {});
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            auto& dst = emigrants_[static_cast<std::size_t>(blocks[k].worker)];
            dst.insert(dst.end(), per_block[k].begin(), per_block[k].end());
        }
    }

    void migrate() { migrate_particles(stores_, partition_, emigrants_); }

private:
    struct SpeciesBlocks {
        std::vector<Block> blocks;
        std::vector<std::size_t> species;
    };

    template <class Pred>
    SpeciesBlocks species_blocks(Pred selected) const {
        SpeciesBlocks out;
        const auto cells = blocks_of(stores_, cfg_.grainsize);
        for (std::size_t isp = 0; isp < cfg_.species.size(); ++isp) {
            if (!selected(cfg_.species[isp])) continue;
            for (const Block& b : cells) {
                out.blocks.push_back(b);
                out.species.push_back(isp);
            }
        }
        return out;
    }

    const RunConfig& cfg_;
    Partition partition_;
    std::vector<CellSortedStore> stores_;
    FieldState fields_;
    std::vector<ParticleField> particle_fields_;
    std::vector<std::vector<Emigrant>> emigrants_;
};

} // namespace

RunMetrics run_simulation(const RunConfig& cfg, const RunOptions& options) {
    cfg.validate(true);
    if (cfg.layout != LayoutVariant::cell_sorted) {
        throw ConfigError(std::string("run_simulation supports the cell_sorted layout only (got ") +
                          to_string(cfg.layout) + "); use bench-layouts for the others");
    }
    const bool field_solve = cfg.scenario == Scenario::full_pic;

    RunMetrics m;
    m.grid = cfg.grid;
    m.descriptor.config_hash = config_hash(cfg);
    m.descriptor.workers = cfg.worker_count;
    m.descriptor.layout = cfg.layout;
    for (const auto& sp : cfg.species) m.descriptor.species_names.push_back(sp.name);
    for (const char* key : kPhaseKeys) m.phases.add(key, 0.0);

    Engine engine(cfg);
    Scheduler scheduler(cfg.worker_count, options.trace);
    auto& timers = m.phases;

    StepDiagnostics initial;
    initial.step = 0;
    initial.species_totals = engine.totals();
    m.steps.push_back(initial);

    Stopwatch total_watch;
    for (int step = 1; step <= cfg.n_steps; ++step) {
        std::vector<double> rho;
        phase(timers, step, "deposit", [&] { rho = engine.deposit(scheduler); });
        if (field_solve) {
            phase(timers, step, "smooth", [&] { engine.smooth(rho); });
        }
        engine.set_rho(std::move(rho));
        m.steps.back().rho_fingerprint = fingerprint(engine.fields().rho);
        if (field_solve) {
            phase(timers, step, "solve", [&] { engine.solve(); });
        }
        CollisionTally tally;
        if (cfg.collisions.enabled) {
            phase(timers, step, "collide", [&] { tally = engine.collide(scheduler, step); });
        }
        phase(timers, step, "gather", [&] { engine.gather(scheduler); });
        phase(timers, step, "mover", [&] { engine.move(scheduler); });
        phase(timers, step, "resort", [&] { engine.resort(scheduler); });
        phase(timers, step, "migrate", [&] { engine.migrate(); });

        StepDiagnostics d;
        d.step = step;
        d.species_totals = engine.totals();
        d.tally = tally;
        m.steps.push_back(d);
        if (options.observer) options.observer(step, engine.fields(), engine.stores());
    }
    if (cfg.n_steps > 0) timers.add("total", total_watch.seconds());

    // Density of the final state, for the last diagnostics row; untimed.
    try {
        std::vector<double> rho = engine.deposit(scheduler);
        if (field_solve) engine.smooth(rho);
        engine.set_rho(std::move(rho));
        m.steps.back().rho_fingerprint = fingerprint(engine.fields().rho);
        if (field_solve) engine.solve();
    } catch (...) {
        rethrow_with_context(cfg.n_steps, "final deposit");
    }
    m.final_fields = engine.fields();

    scheduler.taskwait_all();
    if (options.trace && !options.trace_path.empty()) scheduler.write_trace_csv(options.trace_path);
    return m;
}

double compute_speedup(double t1, double tn) {
    if (!(t1 > 0.0) || !(tn > 0.0)) throw Error("compute_speedup: times must be positive");
    return t1 / tn;
}

double compute_parallel_efficiency(double speedup, int workers) {
    if (workers < 1) throw Error("compute_parallel_efficiency: workers must be >= 1");
    return 100.0 * speedup / workers;
}

namespace {

bool same_physics(const RunMetrics& a, const RunMetrics& b) { return a.steps == b.steps; }

} // namespace

ScalingReport strong_scaling_sweep(const RunConfig& cfg, std::span<const int> workers) {
    if (workers.empty()) throw ConfigError("strong_scaling_sweep: empty worker list");
    ScalingReport report;
    std::vector<RunMetrics> runs;
    for (int n : workers) {
        RunConfig c = cfg;
        c.worker_count = n;
        runs.push_back(run_simulation(c));
    }
    double t1 = 0.0;
    for (std::size_t k = 0; k < workers.size(); ++k) {
        if (workers[k] == 1) {
            t1 = runs[k].seconds("total");
            break;
        }
    }
    if (t1 == 0.0) {
        RunConfig c = cfg;
        c.worker_count = 1;
        t1 = run_simulation(c).seconds("total");
    }
    for (std::size_t k = 0; k < workers.size(); ++k) {
        ScalingRow row;
        row.workers = workers[k];
        row.nc = cfg.grid.nc;
        row.t_total = runs[k].seconds("total");
        row.t_mover = runs[k].seconds("mover");
        row.speedup = workers[k] == 1 ? 1.0 : compute_speedup(t1, row.t_total);
        row.pe = compute_parallel_efficiency(row.speedup, row.workers);
        row.runtime_ratio = row.t_total / t1;
        report.rows.push_back(row);
        if (!same_physics(runs[k], runs.front())) report.diagnostics_identical = false;
    }
    report.runs = std::move(runs);
    return report;
}

ScalingReport weak_scaling_sweep(const RunConfig& cfg, std::span<const int> workers) {
    if (workers.empty()) throw ConfigError("weak_scaling_sweep: empty worker list");
    ScalingReport report;
    report.weak = true;
    report.diagnostics_identical = false;
    auto scaled = [&](int n) {
        RunConfig c = cfg;
        c.worker_count = n;
        c.grid = Grid1D::make(cfg.grid.nc * n, cfg.grid.length_m * n);
        c.finalize();
        return c;
    };
    std::vector<RunMetrics> runs;
    for (int n : workers) runs.push_back(run_simulation(scaled(n)));
    double t1 = 0.0;
    for (std::size_t k = 0; k < workers.size(); ++k) {
        if (workers[k] == 1) {
            t1 = runs[k].seconds("total");
            break;
        }
    }
    if (t1 == 0.0) t1 = run_simulation(scaled(1)).seconds("total");
    for (std::size_t k = 0; k < workers.size(); ++k) {
        ScalingRow row;
        row.workers = workers[k];
        row.nc = cfg.grid.nc * workers[k];
        row.t_total = runs[k].seconds("total");
        row.t_mover = runs[k].seconds("mover");
        // Scaled speedup: n times the work in T(n) against T(1).
        row.speedup = workers[k] == 1 ? 1.0 : workers[k] * compute_speedup(t1, row.t_total);
        row.pe = compute_parallel_efficiency(row.speedup, row.workers);
        row.runtime_ratio = row.t_total / t1;
        report.rows.push_back(row);
    }
    report.runs = std::move(runs);
    return report;
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

void write_diagnostics_csv(const std::filesystem::path& path, const RunMetrics& m) {
    std::vector<std::string> header = {"step"};
    for (const auto& name : m.descriptor.species_names) header.push_back("n_" + name);
    for (const char* h : {"elastic", "excitation", "ionization", "suppressed", "rho_fingerprint"}) header.emplace_back(h);
    CsvWriter csv(path, header);
    for (const auto& d : m.steps) {
        csv.cell(d.step);
        for (std::size_t n : d.species_totals) csv.cell(static_cast<std::uint64_t>(n));
        csv.cell(d.tally.elastic).cell(d.tally.excitation).cell(d.tally.ionization).cell(d.tally.suppressed);
        csv.cell(std::string_view(hex64(d.rho_fingerprint)));
        csv.end_row();
    }
}

void write_tally_csv(const std::filesystem::path& path, const RunMetrics& m, int neutral_species) {
    CsvWriter csv(path, {"step", "elastic", "excitation", "ionization", "suppressed", "n_neutral_total"});
    for (const auto& d : m.steps) {
        const std::uint64_t neutrals =
            neutral_species >= 0 ? d.species_totals.at(static_cast<std::size_t>(neutral_species)) : 0;
        csv.cell(d.step).cell(d.tally.elastic).cell(d.tally.excitation).cell(d.tally.ionization);
        csv.cell(d.tally.suppressed).cell(neutrals);
        csv.end_row();
    }
}

void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& m) {
    CsvWriter csv(path, {"phase", "seconds"});
    for (const char* key : kPhaseKeys) {
        csv.cell(std::string_view(key)).cell(m.seconds(key));
        csv.end_row();
    }
}

void write_fields_csv(const std::filesystem::path& path, const Grid1D& grid, const FieldState& fields) {
    CsvWriter csv(path, {"node_index", "x_m", "rho", "phi", "e_field"});
    for (std::size_t k = 0; k < fields.rho.size(); ++k) {
        csv.cell(static_cast<std::uint64_t>(k)).cell(static_cast<double>(k) * grid.dx_m);
        csv.cell(fields.rho[k]).cell(fields.phi[k]).cell(fields.e_field[k]);
        csv.end_row();
    }
}

void write_scaling_csv(const std::filesystem::path& path, const ScalingReport& report) {
    CsvWriter csv(path, {"workers", "t_total", "t_mover", "speedup", "pe", "nc", "runtime_ratio"});
    for (const auto& r : report.rows) {
        csv.cell(r.workers).cell(r.t_total).cell(r.t_mover).cell(r.speedup).cell(r.pe);
        csv.cell(r.nc).cell(r.runtime_ratio);
        csv.end_row();
    }
}

} // namespace cellpic
