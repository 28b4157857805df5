#include "cellpic/layout_lab.hpp"

#include "cellpic/csv.hpp"
#include "cellpic/error.hpp"
#include "cellpic/fields.hpp"
#include "cellpic/metrics.hpp"
#include "cellpic/mover.hpp"
#include "cellpic/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cellpic {

LayoutVariant variant_of(const LayoutStore& store) {
    switch (store.index()) {
    case 0: return LayoutVariant::cell_sorted;
    case 1: return LayoutVariant::vector_of_structs;
    default: return LayoutVariant::array_of_structs;
    }
}

namespace {

const std::vector<SpeciesDef>& species_of(const LayoutStore& store) {
    return std::visit(
        [](const auto& s) -> const std::vector<SpeciesDef>& {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, CellSortedStore>) {
                return s.species_list();
            } else {
                return s.species;
            }
        },
        store);
}

int nc_of(const LayoutStore& store) {
    return std::visit(
        [](const auto& s) {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, CellSortedStore>) {
                return s.global_nc();
            } else {
                return s.nc;
            }
        },
        store);
}

TaggedParticle tag(const ParticleRecord& p, int cell) { return {p.x, p.yp, p.vx, p.vy, p.vz, cell}; }
ParticleRecord untag(const TaggedParticle& t) { return {t.x, t.yp, t.vx, t.vy, t.vz}; }

// Same arithmetic as extract_emigrants: returns the destination cell and
// rewrites x as the offset inside it.
int wrap_particle(double& x, int cell, int nc, const std::string& species) {
    if (x >= 0.0 && x < 1.0) return cell;
    if (!std::isfinite(x) || std::abs(x) >= static_cast<double>(nc) + 1.0) {
        throw CflViolation("species '" + species + "' moved further than the domain in one step");
    }
    double shift = std::floor(x);
    double offset = x - shift;
    if (offset >= 1.0) {
        offset = 0.0;
        shift += 1.0;
    }
    const auto cells = static_cast<std::int64_t>(shift);
    if (cells >= nc || cells <= -nc) {
        throw CflViolation("species '" + species + "' crossed " + std::to_string(cells) + " cells in one step");
    }
    x = offset;
    return static_cast<int>(((cell + cells) % nc + nc) % nc);
}

struct KernelCoeffs {
    bool active = false;
    bool kick = false;
    double factor = 0.0;
    double nstep = 1.0;
    bool yp = false;
};

KernelCoeffs coeffs(const SpeciesDef& sp, const Grid1D& grid, const PhysicalConstants& consts) {
    KernelCoeffs k;
    k.active = sp.active_mover;
    k.kick = sp.charged;
    k.factor = sp.charged ? kick_factor(sp, grid, consts) : 0.0;
    k.nstep = static_cast<double>(sp.nstep);
    k.yp = sp.track_transverse;
    return k;
}

inline void move_one(double& x, double& yp, double& vx, double vy, double e_lo, double e_hi,
                     const KernelCoeffs& k) {
    if (k.kick) vx += k.factor * interpolate(e_lo, e_hi, x);
    x += k.nstep * vx;
    if (k.yp) yp += k.nstep * vy;
}

} // namespace

LayoutStore convert_layout(const CellSortedStore& store, LayoutVariant target) {
    if (store.first_cell() != 0 || store.cell_count() != store.global_nc()) {
        throw ContractViolation("convert_layout: store does not cover the whole mesh");
    }
    if (!store.is_sorted()) throw ContractViolation("convert_layout: store is not resorted");
    const int nc = store.global_nc();
    switch (target) {
    case LayoutVariant::cell_sorted: return store;
    case LayoutVariant::vector_of_structs: {
        VectorOfStructsStore v{store.species_list(), nc, {}};
        v.particles.resize(store.species_count());
        for (std::size_t isp = 0; isp < store.species_count(); ++isp) {
            v.particles[isp].reserve(store.total(isp));
            for (int j = 0; j < nc; ++j) {
                const CellParticles& c = store.cell(isp, j);
                for (std::size_t i = 0; i < c.count; ++i) v.particles[isp].push_back(tag(c.get(i), j));
            }
        }
        return v;
    }
    case LayoutVariant::array_of_structs: {
        ArrayOfStructsStore a{store.species_list(), nc, {}, {}};
        a.particles.resize(store.species_count());
        a.offsets.resize(store.species_count());
        for (std::size_t isp = 0; isp < store.species_count(); ++isp) {
            auto& parts = a.particles[isp];
            auto& off = a.offsets[isp];
            parts.reserve(store.total(isp));
            off.assign(static_cast<std::size_t>(nc) + 1, 0);
            for (int j = 0; j < nc; ++j) {
                off[static_cast<std::size_t>(j)] = parts.size();
                const CellParticles& c = store.cell(isp, j);
                for (std::size_t i = 0; i < c.count; ++i) parts.push_back(c.get(i));
            }
            off[static_cast<std::size_t>(nc)] = parts.size();
        }
        return a;
    }
    }
    throw ContractViolation("convert_layout: unknown layout");
}

CellSortedStore to_cell_sorted(const LayoutStore& store) {
    if (const auto* cs = std::get_if<CellSortedStore>(&store)) return *cs;
    const auto& species = species_of(store);
    const int nc = nc_of(store);
    CellSortedStore out(species, nc, 0, nc, 0);
    if (const auto* v = std::get_if<VectorOfStructsStore>(&store)) {
        for (std::size_t isp = 0; isp < species.size(); ++isp) {
            for (const TaggedParticle& t : v->particles[isp]) out.push_back(isp, t.cell, untag(t));
        }
    } else {
        const auto& a = std::get<ArrayOfStructsStore>(store);
        for (std::size_t isp = 0; isp < species.size(); ++isp) {
            for (int j = 0; j < nc; ++j) {
                for (std::size_t i = a.offsets[isp][static_cast<std::size_t>(j)];
                     i < a.offsets[isp][static_cast<std::size_t>(j) + 1]; ++i) {
                    out.push_back(isp, j, a.particles[isp][i]);
                }
            }
        }
    }
    return out;
}

void mover_kernel(LayoutStore& store, std::span<const double> e_field, const Grid1D& grid,
                  const PhysicalConstants& consts) {
    const int nc = nc_of(store);
    if (nc != grid.nc || e_field.size() != static_cast<std::size_t>(nc) + 1) {
        throw SizeError("mover_kernel: field size does not match the mesh");
    }
    const double* a = e_field.data();
    if (auto* cs = std::get_if<CellSortedStore>(&store)) {
        for (std::size_t isp = 0; isp < cs->species_count(); ++isp) {
            const KernelCoeffs k = coeffs(cs->species(isp), grid, consts);
            if (!k.active) continue;
            for (int j = 0; j < nc; ++j) {
                CellParticles& c = cs->cell(isp, j);
                double dummy = 0.0;
                for (std::size_t i = 0; i < c.count; ++i) {
                    double& yp = k.yp ? c.yp[i] : dummy;
                    move_one(c.x[i], yp, c.vx[i], c.vy[i], a[j], a[j + 1], k);
                }
            }
        }
    } else if (auto* v = std::get_if<VectorOfStructsStore>(&store)) {
        for (std::size_t isp = 0; isp < v->species.size(); ++isp) {
            const KernelCoeffs k = coeffs(v->species[isp], grid, consts);
            if (!k.active) continue;
            for (TaggedParticle& p : v->particles[isp]) {
                move_one(p.x, p.yp, p.vx, p.vy, a[p.cell], a[p.cell + 1], k);
            }
        }
    } else {
        auto& s = std::get<ArrayOfStructsStore>(store);
        for (std::size_t isp = 0; isp < s.species.size(); ++isp) {
            const KernelCoeffs k = coeffs(s.species[isp], grid, consts);
            if (!k.active) continue;
            auto& parts = s.particles[isp];
            const auto& off = s.offsets[isp];
            for (int j = 0; j < nc; ++j) {
                for (std::size_t i = off[static_cast<std::size_t>(j)]; i < off[static_cast<std::size_t>(j) + 1]; ++i) {
                    ParticleRecord& p = parts[i];
                    move_one(p.x, p.yp, p.vx, p.vy, a[j], a[j + 1], k);
                }
            }
        }
    }
}

void layout_resort(LayoutStore& store) {
    if (auto* cs = std::get_if<CellSortedStore>(&store)) {
        std::vector<Emigrant> moving;
        extract_emigrants(*cs, 0, cs->cell_count(), moving);
        insert_immigrants(*cs, moving);
    } else if (auto* v = std::get_if<VectorOfStructsStore>(&store)) {
        for (std::size_t isp = 0; isp < v->species.size(); ++isp) {
            for (TaggedParticle& p : v->particles[isp]) {
                p.cell = wrap_particle(p.x, p.cell, v->nc, v->species[isp].name);
            }
        }
    } else {
        auto& s = std::get<ArrayOfStructsStore>(store);
        const auto nc = static_cast<std::size_t>(s.nc);
        for (std::size_t isp = 0; isp < s.species.size(); ++isp) {
            auto& parts = s.particles[isp];
            auto& off = s.offsets[isp];
            // Stayers keep their order; movers follow in source-cell order.
            std::vector<std::vector<ParticleRecord>> buckets(nc);
            std::vector<std::pair<int, ParticleRecord>> movers;
            for (std::size_t j = 0; j < nc; ++j) {
                for (std::size_t i = off[j]; i < off[j + 1]; ++i) {
                    ParticleRecord p = parts[i];
                    const int dest = wrap_particle(p.x, static_cast<int>(j), s.nc, s.species[isp].name);
                    if (dest == static_cast<int>(j)) {
                        buckets[j].push_back(p);
                    } else {
                        movers.emplace_back(dest, p);
                    }
                }
            }
            for (const auto& [dest, p] : movers) buckets[static_cast<std::size_t>(dest)].push_back(p);
            parts.clear();
            for (std::size_t j = 0; j < nc; ++j) {
                off[j] = parts.size();
                parts.insert(parts.end(), buckets[j].begin(), buckets[j].end());
            }
            off[nc] = parts.size();
        }
    }
}

std::vector<std::vector<FlatParticle>> canonical_particles(const LayoutStore& store) {
    const CellSortedStore cs = to_cell_sorted(store);
    std::vector<std::vector<FlatParticle>> out(cs.species_count());
    for (std::size_t isp = 0; isp < cs.species_count(); ++isp) {
        auto& list = out[isp];
        list.reserve(cs.total(isp));
        for (int j = 0; j < cs.cell_count(); ++j) {
            const CellParticles& c = cs.cell(isp, j);
            for (std::size_t i = 0; i < c.count; ++i) list.push_back({cs.first_cell() + j, c.get(i)});
        }
        std::sort(list.begin(), list.end());
    }
    return out;
}

std::vector<double> canonical_density(const LayoutStore& store, const Grid1D& grid) {
    const auto flat = canonical_particles(store);
    CellSortedStore ordered(species_of(store), grid.nc, 0, grid.nc, 0);
    for (std::size_t isp = 0; isp < flat.size(); ++isp) {
        for (const FlatParticle& f : flat[isp]) ordered.push_back(isp, f.cell, f.p);
    }
    return deposit_charge(ordered, grid, FieldBoundary::periodic());
}

std::vector<std::uint64_t> simulate_layout(LayoutStore& store, const Grid1D& grid, const PhysicalConstants& consts,
                                           int steps, int smoother_passes) {
    std::vector<std::uint64_t> history;
    history.reserve(static_cast<std::size_t>(std::max(steps, 0)));
    for (int step = 0; step < steps; ++step) {
        std::vector<double> rho = canonical_density(store, grid);
        if (smoother_passes > 0) rho = smooth_density(rho, smoother_passes);
        history.push_back(fingerprint(rho));
        const std::vector<double> phi = solve_poisson(rho, grid, consts, FieldBoundary::periodic());
        const std::vector<double> e = compute_efield(phi, grid, FieldBoundary::periodic());
        mover_kernel(store, e, grid, consts);
        layout_resort(store);
    }
    return history;
}

std::vector<std::size_t> skewed_counts(int nc, std::size_t total) {
    if (nc < 1) throw SizeError("skewed_counts: need at least one cell");
    const auto n = static_cast<std::size_t>(nc);
    std::vector<std::size_t> counts(n, 0);
    const std::size_t hot_cells = n == 1 ? 1 : std::max<std::size_t>(1, n / 10);
    const std::size_t cold_cells = n - hot_cells;
    std::size_t hot_total = cold_cells == 0 ? total : (total * 9 + 5) / 10;
    const std::size_t cold_total = total - hot_total;
    auto spread = [&](std::size_t first, std::size_t cells, std::size_t amount) {
        for (std::size_t k = 0; k < cells; ++k) {
            counts[first + k] = amount / cells + (k < amount % cells ? 1 : 0);
        }
    };
    spread(0, hot_cells, hot_total);
    if (cold_cells > 0) spread(hot_cells, cold_cells, cold_total);
    return counts;
}

double median(std::vector<double> values) {
    if (values.empty()) throw SizeError("median of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = 0.5 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

double quantile(std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

CellSortedStore skewed_store(const RunConfig& cfg) {
    const int nc = cfg.grid.nc;
    CellSortedStore store(cfg.species, nc, 0, nc, 0);
    const std::size_t per_species = static_cast<std::size_t>(cfg.ppc0) * static_cast<std::size_t>(nc);
    const std::vector<std::size_t> counts = skewed_counts(nc, per_species);
    for (std::size_t isp = 0; isp < cfg.species.size(); ++isp) {
        const SpeciesDef& sp = cfg.species[isp];
        const double sigma = thermal_velocity_grid(sp, cfg.grid, cfg.consts);
        for (int j = 0; j < nc; ++j) {
            CounterRng rng(cfg.seed, StreamPurpose::bench, static_cast<std::uint32_t>(isp), static_cast<std::uint32_t>(j));
            for (std::size_t i = 0; i < counts[static_cast<std::size_t>(j)]; ++i) {
                ParticleRecord p;
                p.x = rng.uniform();
                p.vx = sigma * rng.normal();
                p.vy = sigma * rng.normal();
                p.vz = sigma * rng.normal();
                if (sp.track_transverse) p.yp = rng.uniform();
                store.push_back(isp, j, p);
            }
        }
    }
    return store;
}

std::vector<double> bench_field(const Grid1D& grid) {
    std::vector<double> e(static_cast<std::size_t>(grid.nc) + 1);
    for (std::size_t k = 0; k < e.size(); ++k) {
        e[k] = 1e3 * std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / grid.nc);
    }
    return e;
}

std::size_t moving_particles(const CellSortedStore& store) {
    std::size_t n = 0;
    for (std::size_t isp = 0; isp < store.species_count(); ++isp) {
        if (store.species(isp).active_mover) n += store.total(isp);
    }
    return n;
}

} // namespace

double interquartile_range(std::vector<double> values) {
    if (values.empty()) throw SizeError("interquartile range of an empty sample");
    std::sort(values.begin(), values.end());
    return quantile(values, 0.75) - quantile(values, 0.25);
}

std::vector<LayoutTiming> bench_layouts(const RunConfig& cfg, const LayoutBenchOptions& options) {
    if (options.repetitions < 3) throw ConfigError("bench_layouts needs at least 3 repetitions");
    if (options.steps_per_repetition < 1) throw ConfigError("bench_layouts needs at least 1 step per repetition");
    if (options.warmup_repetitions < 0) throw ConfigError("warm-up repetitions must be >= 0");
    const std::vector<double> e = bench_field(cfg.grid);

    struct BenchCase {
        std::string name;
        CellSortedStore store;
    };
    std::vector<BenchCase> scenarios;
    scenarios.push_back({"uniform", init_plasma(cfg)});
    scenarios.push_back({"skewed", skewed_store(cfg)});

    std::vector<LayoutTiming> rows;
    for (const BenchCase& sc : scenarios) {
        const std::size_t particles = moving_particles(sc.store);
        for (LayoutVariant layout : options.layouts) {
            LayoutStore store = convert_layout(sc.store, layout);
            std::vector<double> samples;
            for (int rep = 0; rep < options.warmup_repetitions + options.repetitions; ++rep) {
                double seconds = 0.0;
                for (int s = 0; s < options.steps_per_repetition; ++s) {
                    Stopwatch watch;
                    mover_kernel(store, e, cfg.grid, cfg.consts);
                    seconds += watch.seconds();
                    layout_resort(store);
                }
                if (rep >= options.warmup_repetitions && particles > 0) {
                    samples.push_back(seconds * 1e9 /
                                      (static_cast<double>(particles) * options.steps_per_repetition));
                }
            }
            LayoutTiming row;
            row.layout = layout;
            row.scenario = sc.name;
            row.ppc_total = particles;
            if (!samples.empty()) {
                row.ns_per_particle_median = median(samples);
                row.ns_per_particle_iqr = interquartile_range(samples);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

void write_layout_csv(const std::filesystem::path& path, std::span<const LayoutTiming> rows) {
    CsvWriter csv(path, {"layout", "scenario", "ppc_total", "ns_per_particle_median", "ns_per_particle_iqr"});
    for (const auto& r : rows) {
        csv.cell(std::string_view(to_string(r.layout)))
            .cell(std::string_view(r.scenario))
            .cell(static_cast<std::uint64_t>(r.ppc_total))
            .cell(r.ns_per_particle_median)
            .cell(r.ns_per_particle_iqr);
        csv.end_row();
    }
}

} // namespace cellpic
