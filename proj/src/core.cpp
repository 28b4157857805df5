#include "cellpic/core.hpp"

#include "cellpic/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace cellpic {

const char* to_string(LayoutVariant v) {
    switch (v) {
    case LayoutVariant::cell_sorted:
        return "cell_sorted";
    case LayoutVariant::vector_of_structs:
        return "vector_of_structs";
    case LayoutVariant::array_of_structs:
        return "array_of_structs";
    }
    return "unknown";
}

LayoutVariant parse_layout(const std::string& name) {
    if (name == "cell_sorted") return LayoutVariant::cell_sorted;
    if (name == "vector_of_structs" || name == "vos") return LayoutVariant::vector_of_structs;
    if (name == "array_of_structs" || name == "aos") return LayoutVariant::array_of_structs;
    throw ConfigError("unknown layout '" + name + "'");
}

Grid1D Grid1D::make(int nc, double length_m) {
    Grid1D g;
    g.nc = nc;
    g.length_m = length_m;
    g.dx_m = nc > 0 ? length_m / nc : 0.0;
    g.validate();
    return g;
}

void Grid1D::validate() const {
    if (nc < 2) {
        throw ConfigError("grid needs at least 2 cells, got " + std::to_string(nc));
    }
    if (!(dx_m > 0.0) || !(length_m > 0.0)) {
        throw ConfigError("grid cell width and length must be positive");
    }
    if (std::abs(dx_m * nc - length_m) > 1e-12 * length_m) {
        throw ConfigError("grid dx * nc does not match the domain length");
    }
}

void PhysicalConstants::validate() const {
    if (!(epsilon0 > 0.0)) throw ConfigError("epsilon0 must be positive");
    if (!(dt_s > 0.0)) throw ConfigError("dt_s must be positive");
}

SpeciesDef make_species(std::string name, double charge_c, double mass_kg, int nstep) {
    SpeciesDef sp;
    sp.name = std::move(name);
    sp.charge_c = charge_c;
    sp.mass_kg = mass_kg;
    sp.nstep = nstep;
    sp.charged = charge_c != 0.0;
    return sp;
}

void SpeciesDef::validate() const {
    if (!(mass_kg > 0.0)) throw ConfigError("species '" + name + "': mass must be positive");
    if (nstep < 1) throw ConfigError("species '" + name + "': nstep must be >= 1");
    if (charged != (charge_c != 0.0)) {
        throw ConfigError("species '" + name + "': charged flag disagrees with charge");
    }
    if (temperature_ev < 0.0) throw ConfigError("species '" + name + "': negative temperature");
    if (density_m3 < 0.0) throw ConfigError("species '" + name + "': negative density");
}

void CellParticles::reserve_slots(std::size_t slots, bool with_yp) {
    if (slots <= capacity()) return;
    x.resize(slots, 0.0);
    vx.resize(slots, 0.0);
    vy.resize(slots, 0.0);
    vz.resize(slots, 0.0);
    if (with_yp) yp.resize(slots, 0.0);
}

ParticleRecord CellParticles::get(std::size_t i) const {
    return {x[i], yp.empty() ? 0.0 : yp[i], vx[i], vy[i], vz[i]};
}

void CellParticles::set(std::size_t i, const ParticleRecord& p) {
    x[i] = p.x;
    if (!yp.empty()) yp[i] = p.yp;
    vx[i] = p.vx;
    vy[i] = p.vy;
    vz[i] = p.vz;
}

CellSortedStore::CellSortedStore(std::vector<SpeciesDef> species, int global_nc, int first_cell,
                                 int cell_count, std::size_t initial_capacity)
    : species_(std::move(species)), global_nc_(global_nc), first_cell_(first_cell), cell_count_(cell_count) {
    cells_.resize(species_.size());
    for (std::size_t isp = 0; isp < species_.size(); ++isp) {
        cells_[isp].resize(static_cast<std::size_t>(cell_count));
        for (auto& c : cells_[isp]) {
            c.reserve_slots(initial_capacity, species_[isp].track_transverse);
        }
    }
}

void CellSortedStore::push_back(std::size_t isp, int j, const ParticleRecord& p) {
    CellParticles& c = cell(isp, j);
    if (c.count == c.capacity()) {
        c.reserve_slots(std::max<std::size_t>(2 * c.capacity(), 1), species_[isp].track_transverse);
    }
    c.set(c.count, p);
    ++c.count;
}

void CellSortedStore::swap_remove(std::size_t isp, int j, std::size_t i) {
    CellParticles& c = cell(isp, j);
    const std::size_t last = c.count - 1;
    if (i != last) c.set(i, c.get(last));
    c.count = last;
}

void CellSortedStore::truncate(std::size_t isp, int j, std::size_t n) {
    CellParticles& c = cell(isp, j);
    c.count = std::min(c.count, n);
}

std::size_t CellSortedStore::total(std::size_t isp) const {
    std::size_t n = 0;
    for (const auto& c : cells_.at(isp)) n += c.count;
    return n;
}

std::size_t CellSortedStore::total() const {
    std::size_t n = 0;
    for (std::size_t isp = 0; isp < species_.size(); ++isp) n += total(isp);
    return n;
}

bool CellSortedStore::is_sorted() const {
    for (const auto& per_species : cells_) {
        for (const auto& c : per_species) {
            for (std::size_t i = 0; i < c.count; ++i) {
                if (!(c.x[i] >= 0.0 && c.x[i] < 1.0)) return false;
            }
        }
    }
    return true;
}

bool CellSortedStore::operator==(const CellSortedStore& other) const {
    if (global_nc_ != other.global_nc_ || first_cell_ != other.first_cell_ ||
        cell_count_ != other.cell_count_ || species_.size() != other.species_.size()) {
        return false;
    }
    for (std::size_t isp = 0; isp < species_.size(); ++isp) {
        for (int j = 0; j < cell_count_; ++j) {
            const auto& a = cell(isp, j);
            const auto& b = other.cell(isp, j);
            if (a.count != b.count) return false;
            for (std::size_t i = 0; i < a.count; ++i) {
                const ParticleRecord pa = a.get(i);
                const ParticleRecord pb = b.get(i);
                if (std::memcmp(&pa, &pb, sizeof(ParticleRecord)) != 0) return false;
            }
        }
    }
    return true;
}

double thermal_velocity_grid(const SpeciesDef& sp, const Grid1D& grid, const PhysicalConstants& c) {
    const double v = std::sqrt(sp.temperature_ev * units::elementary_charge / sp.mass_kg);
    return to_grid_velocity(v, grid, c);
}

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t h) {
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fingerprint(std::span<const double> values) {
    return fnv1a(std::as_bytes(values));
}

} // namespace cellpic
