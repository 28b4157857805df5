#include "cellpic/collisions.hpp"

#include "cellpic/error.hpp"
#include "cellpic/scheduler.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace cellpic {

void CollisionRates::validate() const {
    const double values[] = {rate_ionization_m3s, rate_elastic_m3s, rate_excitation_m3s,
                             excitation_threshold_ev, ionization_threshold_ev};
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) throw ConfigError("collision rates and thresholds must be finite and >= 0");
    }
}

void CollisionSetup::validate(const std::vector<SpeciesDef>& species) const {
    rates.validate();
    const int n = static_cast<int>(species.size());
    const int idx[] = {roles.electron, roles.ion, roles.neutral};
    for (int i : idx) {
        if (i < 0 || i >= n) throw ConfigError("collision roles must name existing species");
    }
    if (roles.electron == roles.ion || roles.electron == roles.neutral || roles.ion == roles.neutral) {
        throw ConfigError("collision roles must be distinct species");
    }
    const auto& e = species[static_cast<std::size_t>(roles.electron)];
    const auto& ion = species[static_cast<std::size_t>(roles.ion)];
    const auto& neu = species[static_cast<std::size_t>(roles.neutral)];
    if (neu.charge_c != 0.0) throw ConfigError("collision neutral species must be uncharged");
    if (e.charge_c >= 0.0) throw ConfigError("collision electron species must be negatively charged");
    if (rates.rate_ionization_m3s > 0.0) {
        if (e.weight_m2 != ion.weight_m2 || e.weight_m2 != neu.weight_m2) {
            throw ConfigError("ionization requires equal macro weights for electron, ion and neutral");
        }
        if (ion.charge_c + e.charge_c != 0.0) {
            throw ConfigError("ionization requires ion charge equal to minus the electron charge");
        }
    }
}

CollisionTally& CollisionTally::operator+=(const CollisionTally& o) {
    elastic += o.elastic;
    excitation += o.excitation;
    ionization += o.ionization;
    suppressed += o.suppressed;
    return *this;
}

double process_probability(double target_density_m3, double rate_m3s, double dt_s) {
    return -std::expm1(-target_density_m3 * rate_m3s * dt_s);
}

CollisionProbabilities collision_probabilities(double neutral_density_m3, const CollisionRates& rates,
                                               double dt_s) {
    CollisionProbabilities p;
    double dt = dt_s;
    for (;;) {
        p.elastic = process_probability(neutral_density_m3, rates.rate_elastic_m3s, dt);
        p.excitation = process_probability(neutral_density_m3, rates.rate_excitation_m3s, dt);
        p.ionization = process_probability(neutral_density_m3, rates.rate_ionization_m3s, dt);
        if (p.sum() < kMaxCombinedProbability) return p;
        if (p.substeps >= (1 << 30)) throw ContractViolation("collision step split did not converge");
        dt *= 0.5;
        p.substeps *= 2;
    }
}

double neutral_density(const CellSortedStore& store, const CollisionSetup& setup, const Grid1D& grid,
                       int local_cell) {
    const auto isp = static_cast<std::size_t>(setup.roles.neutral);
    const double w = store.species(isp).weight_m2;
    return static_cast<double>(store.np(isp, local_cell)) * w / grid.dx_m;
}

double kinetic_energy_ev(const SpeciesDef& sp, const ParticleRecord& p, const Grid1D& grid,
                         const PhysicalConstants& consts) {
    const double scale = grid.dx_m / consts.dt_s;
    const double v2 = (p.vx * p.vx + p.vy * p.vy + p.vz * p.vz) * scale * scale;
    return 0.5 * sp.mass_kg * v2 / units::elementary_charge;
}

namespace {

// Energy in eV per unit squared grid speed.
double energy_per_v2(const SpeciesDef& sp, const Grid1D& grid, const PhysicalConstants& consts) {
    const double scale = grid.dx_m / consts.dt_s;
    return 0.5 * sp.mass_kg * scale * scale / units::elementary_charge;
}

void set_isotropic(ParticleRecord& p, double speed, CounterRng& rng) {
    const double mu = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    p.vx = speed * s * std::cos(phi);
    p.vy = speed * s * std::sin(phi);
    p.vz = speed * mu;
}

double speed_of(const ParticleRecord& p) { return std::sqrt(p.vx * p.vx + p.vy * p.vy + p.vz * p.vz); }

} // namespace

CollisionTally collide_cell(CellSortedStore& store, int local_cell, const CollisionSetup& setup,
                            const Grid1D& grid, const PhysicalConstants& consts, CounterRng& rng) {
    CollisionTally tally;
    if (!setup.enabled) return tally;
    const auto ie = static_cast<std::size_t>(setup.roles.electron);
    const auto ii = static_cast<std::size_t>(setup.roles.ion);
    const auto in = static_cast<std::size_t>(setup.roles.neutral);
    const std::size_t n_electrons = store.np(ie, local_cell);
    if (n_electrons == 0) return tally;

    const auto& rates = setup.rates;
    const CollisionProbabilities first =
        collision_probabilities(neutral_density(store, setup, grid, local_cell), rates, consts.dt_s);
    if (first.sum() == 0.0) return tally;
    const double dt_sub = consts.dt_s / first.substeps;
    const double c_e = energy_per_v2(store.species(ie), grid, consts);

    for (int sub = 0; sub < first.substeps; ++sub) {
        const double n_neutral = neutral_density(store, setup, grid, local_cell);
        const double p_el = process_probability(n_neutral, rates.rate_elastic_m3s, dt_sub);
        const double p_ex = process_probability(n_neutral, rates.rate_excitation_m3s, dt_sub);
        const double p_ion = process_probability(n_neutral, rates.rate_ionization_m3s, dt_sub);
        // Only electrons present at the start of the step are projectiles.
        for (std::size_t i = 0; i < n_electrons; ++i) {
            const double u = rng.uniform();
            auto& ec = store.cell(ie, local_cell);
            ParticleRecord e = ec.get(i);
            if (u < p_el) {
                set_isotropic(e, speed_of(e), rng);
                ec.set(i, e);
                ++tally.elastic;
            } else if (u < p_el + p_ex) {
                const double energy = std::max(0.0, c_e * (e.vx * e.vx + e.vy * e.vy + e.vz * e.vz) -
                                                        rates.excitation_threshold_ev);
                set_isotropic(e, std::sqrt(energy / c_e), rng);
                ec.set(i, e);
                ++tally.excitation;
            } else if (u < p_el + p_ex + p_ion) {
                const std::size_t nn = store.np(in, local_cell);
                if (nn == 0) {
                    ++tally.suppressed;
                    continue;
                }
                auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(nn));
                if (pick >= nn) pick = nn - 1;
                const ParticleRecord neutral = store.cell(in, local_cell).get(pick);
                store.swap_remove(in, local_cell, pick);
                ParticleRecord ion = neutral;
                if (!store.species(in).track_transverse) ion.yp = 0.0;
                store.push_back(ii, local_cell, ion);

                const double energy = c_e * (e.vx * e.vx + e.vy * e.vy + e.vz * e.vz);
                const double share = std::max(0.0, energy - rates.ionization_threshold_ev) * 0.5;
                const double speed = std::sqrt(share / c_e);
                set_isotropic(e, speed, rng);
                ParticleRecord born{e.x, e.yp, 0.0, 0.0, 0.0};
                set_isotropic(born, speed, rng);
                store.cell(ie, local_cell).set(i, e);
                store.push_back(ie, local_cell, born);
                ++tally.ionization;
            }
        }
    }
    return tally;
}

CounterRng collision_stream(std::uint64_t seed, std::int64_t step, int global_cell) {
    const auto s = static_cast<std::uint64_t>(step);
    return CounterRng(seed, StreamPurpose::collision, static_cast<std::uint32_t>(s),
                      static_cast<std::uint32_t>(global_cell), static_cast<std::uint32_t>(s >> 32));
}

CollisionTally collide_cells(CellSortedStore& store, int begin, int end, const CollisionSetup& setup,
                             const Grid1D& grid, const PhysicalConstants& consts, std::uint64_t seed,
                             std::int64_t step) {
    CollisionTally tally;
    for (int j = begin; j < end; ++j) {
        CounterRng rng = collision_stream(seed, step, store.first_cell() + j);
        tally += collide_cell(store, j, setup, grid, consts, rng);
    }
    return tally;
}

CollisionTally collision_phase(CellSortedStore& store, const CollisionSetup& setup, const Grid1D& grid,
                               const PhysicalConstants& consts, Scheduler& scheduler,
                               std::size_t grainsize, std::uint64_t seed, std::int64_t step) {
    if (!setup.enabled || store.cell_count() == 0) return {};
    if (grainsize == 0) throw ContractViolation("grainsize must be positive");
    const auto nc = static_cast<std::size_t>(store.cell_count());
    std::vector<CollisionTally> partial((nc + grainsize - 1) / grainsize);
    scheduler.parallel_for_blocks(
        0, nc, grainsize,
        [&](std::size_t b, std::size_t e) {
            partial[b / grainsize] = collide_cells(store, static_cast<int>(b), static_cast<int>(e), setup, grid,
                                                   consts, seed, step);
        },
        0, "collide");
    CollisionTally total;
    for (const auto& t : partial) total += t;
    return total;
}

} // namespace cellpic
