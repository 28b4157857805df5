#include "cellpic/mover.hpp"

#include "cellpic/error.hpp"
#include "cellpic/scheduler.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace cellpic {

double kick_factor(const SpeciesDef& sp, const Grid1D& grid, const PhysicalConstants& consts) {
    return sp.charge_c / sp.mass_kg * consts.dt_s * consts.dt_s / grid.dx_m;
}

void push_velocity_cells(CellSortedStore& store, std::size_t isp, const ParticleField& ep, double factor,
                         int begin, int end) {
    for (int j = begin; j < end; ++j) {
        CellParticles& c = store.cell(isp, j);
        const std::vector<double>& e = ep.at(isp, j);
        for (std::size_t i = 0; i < c.count; ++i) c.vx[i] += factor * e[i];
    }
}

void push_velocity(CellSortedStore& store, std::size_t isp, const ParticleField& ep, const Grid1D& grid,
                   const PhysicalConstants& consts) {
    const SpeciesDef& sp = store.species(isp);
    if (!sp.charged) {
        throw ContractViolation("push_velocity called on neutral species '" + sp.name + "'");
    }
    push_velocity_cells(store, isp, ep, kick_factor(sp, grid, consts), 0, store.cell_count());
}

void push_position_cells(CellSortedStore& store, std::size_t isp, int begin, int end) {
    const SpeciesDef& sp = store.species(isp);
    const double nstep = static_cast<double>(sp.nstep);
    for (int j = begin; j < end; ++j) {
        CellParticles& c = store.cell(isp, j);
        for (std::size_t i = 0; i < c.count; ++i) c.x[i] += nstep * c.vx[i];
        if (sp.track_transverse) {
            for (std::size_t i = 0; i < c.count; ++i) c.yp[i] += nstep * c.vy[i];
        }
    }
}

void push_position(CellSortedStore& store, std::size_t isp) {
    push_position_cells(store, isp, 0, store.cell_count());
}

void extract_emigrants(CellSortedStore& store, int begin, int end, std::vector<Emigrant>& out) {
    const std::int64_t nc = store.global_nc();
    for (int j = begin; j < end; ++j) {
        const int global = store.first_cell() + j;
        for (std::size_t isp = 0; isp < store.species_count(); ++isp) {
            CellParticles& c = store.cell(isp, j);
            std::size_t kept = 0;
            for (std::size_t i = 0; i < c.count; ++i) {
                const double x = c.x[i];
                if (x >= 0.0 && x < 1.0) {
                    if (kept != i) c.set(kept, c.get(i));
                    ++kept;
                    continue;
                }
                if (!std::isfinite(x) || std::abs(x) >= static_cast<double>(nc) + 1.0) {
                    throw CflViolation("species '" + store.species(isp).name + "' in cell " +
                                       std::to_string(global) + " moved further than the domain in one step");
                }
                double shift = std::floor(x);
                double offset = x - shift;
                if (offset >= 1.0) { // x just below an integer
                    offset = 0.0;
                    shift += 1.0;
                }
                const auto cells = static_cast<std::int64_t>(shift);
                if (cells == 0) {
                    ParticleRecord p = c.get(i);
                    p.x = offset;
                    c.set(kept++, p);
                    continue;
                }
                if (cells >= nc || cells <= -nc) {
                    throw CflViolation("species '" + store.species(isp).name + "' in cell " +
                                       std::to_string(global) + " crossed " + std::to_string(cells) +
                                       " cells in one step (nc = " + std::to_string(nc) + ")");
                }
                Emigrant e;
                e.species = static_cast<int>(isp);
                e.source_cell = global;
                e.dest_cell = static_cast<int>(((global + cells) % nc + nc) % nc);
                e.particle = c.get(i);
                e.particle.x = offset;
                out.push_back(e);
            }
            c.count = kept;
        }
    }
}

void insert_immigrants(CellSortedStore& store, std::span<const Emigrant> incoming) {
    for (const Emigrant& e : incoming) {
        const int local = e.dest_cell - store.first_cell();
        if (local < 0 || local >= store.cell_count()) {
            throw ContractViolation("insert_immigrants: cell " + std::to_string(e.dest_cell) +
                                    " is not held by this store");
        }
        store.push_back(static_cast<std::size_t>(e.species), local, e.particle);
    }
}

std::size_t resort(CellSortedStore& store, const Grid1D& grid) {
    if (store.global_nc() != grid.nc) throw ContractViolation("resort: store and grid disagree on nc");
    std::vector<Emigrant> moving;
    extract_emigrants(store, 0, store.cell_count(), moving);
    insert_immigrants(store, moving);
    return moving.size();
}

namespace {

struct BlockRange {
    int begin;
    int end;
};

std::vector<BlockRange> split_blocks(int cells, std::size_t grainsize) {
    std::vector<BlockRange> blocks;
    const auto g = static_cast<int>(std::min<std::size_t>(grainsize, static_cast<std::size_t>(INT32_MAX)));
    for (int b = 0; b < cells; b += g) blocks.push_back({b, std::min(cells, b + g)});
    return blocks;
}

/// One task per (species, block); returns when all have finished.
template <class Body>
void for_species_blocks(Scheduler& scheduler, const CellSortedStore& store, std::size_t grainsize,
                        const std::string& tag, bool (*selected)(const SpeciesDef&), Body body) {
    if (grainsize == 0) throw ContractViolation("grainsize must be >= 1");
    const std::vector<BlockRange> blocks = split_blocks(store.cell_count(), grainsize);
    std::vector<TaskHandle> handles;
    for (std::size_t isp = 0; isp < store.species_count(); ++isp) {
        if (!selected(store.species(isp))) continue;
        for (const BlockRange& b : blocks) {
            handles.push_back(scheduler.submit({[=] { body(isp, b.begin, b.end); }, {}, 0, tag}));
        }
    }
    scheduler.wait(std::span<const TaskHandle>(handles));
}

bool moves_and_charged(const SpeciesDef& sp) { return sp.active_mover && sp.charged; }
bool moves(const SpeciesDef& sp) { return sp.active_mover; }

} // namespace

void mover_phase(CellSortedStore& store, std::span<const double> e_field, const Grid1D& grid,
                 const PhysicalConstants& consts, Scheduler& scheduler, std::size_t grainsize,
                 PhaseTimers* timers) {
    ParticleField ep;
    shape_like(ep, store);
    {
        ScopedPhase phase(timers, "gather");
        for_species_blocks(scheduler, store, grainsize, "gather", moves_and_charged,
                           [&](std::size_t isp, int b, int e) { gather_cells(e_field, store, isp, b, e, ep); });
    }
    {
        ScopedPhase phase(timers, "mover");
        for_species_blocks(scheduler, store, grainsize, "mover", moves, [&](std::size_t isp, int b, int e) {
            const SpeciesDef& sp = store.species(isp);
            if (sp.charged) push_velocity_cells(store, isp, ep, kick_factor(sp, grid, consts), b, e);
            push_position_cells(store, isp, b, e);
        });
    }
}

std::size_t resort_phase(CellSortedStore& store, Scheduler& scheduler, std::size_t grainsize,
                         PhaseTimers* timers) {
    ScopedPhase phase(timers, "resort");
    if (grainsize == 0) throw ContractViolation("grainsize must be >= 1");
    const std::vector<BlockRange> blocks = split_blocks(store.cell_count(), grainsize);
    std::vector<std::vector<Emigrant>> per_block(blocks.size());
    std::vector<TaskHandle> handles;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        handles.push_back(scheduler.submit(
            {[&, k] { extract_emigrants(store, blocks[k].begin, blocks[k].end, per_block[k]); }, {}, 0, "resort"}));
    }
    scheduler.wait(std::span<const TaskHandle>(handles));
    std::size_t moved = 0;
    for (const auto& list : per_block) {
        insert_immigrants(store, list);
        moved += list.size();
    }
    return moved;
}

} // namespace cellpic
