#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cellpic {

namespace units {
inline constexpr double elementary_charge = 1.602176634e-19; // C
inline constexpr double epsilon0 = 8.8541878128e-12;         // F/m
inline constexpr double electron_mass = 9.1093837015e-31;    // kg
} // namespace units

/// Uniform 1D mesh of `nc` cells over [0, length_m).
struct Grid1D {
    int nc = 0;
    double length_m = 0.0;
    double dx_m = 0.0;

    static Grid1D make(int nc, double length_m);
    void validate() const;
    int node_count() const { return nc + 1; }
};

/// Boundary treatment of the field solve. Particles always wrap
/// periodically; the potential may be periodic or pinned at both ends.
struct FieldBoundary {
    enum class Kind { periodic, dirichlet };
    Kind kind = Kind::periodic;
    double phi_left = 0.0;
    double phi_right = 0.0;

    static FieldBoundary periodic() { return {}; }
    static FieldBoundary dirichlet(double left, double right) {
        return {Kind::dirichlet, left, right};
    }
    bool is_periodic() const { return kind == Kind::periodic; }
};

/// Particle memory layouts compared by the layout lab.
enum class LayoutVariant { cell_sorted, vector_of_structs, array_of_structs };

const char* to_string(LayoutVariant v);
LayoutVariant parse_layout(const std::string& name);

/// Vacuum permittivity and base time step.
struct PhysicalConstants {
    double epsilon0 = units::epsilon0;
    double dt_s = 0.0;

    void validate() const;
};

/// Physical and bookkeeping parameters of one particle species.
struct SpeciesDef {
    std::string name;
    double charge_c = 0.0;
    double mass_kg = 0.0;
    int nstep = 1;                 // position subcycle multiplier
    bool charged = false;          // always charge_c != 0
    bool active_mover = true;      // species participates in the mover
    bool track_transverse = false; // allocate and push yp
    double temperature_ev = 0.0;   // initial load
    double density_m3 = 0.0;       // initial load
    double weight_m2 = 0.0;        // physical particles per macro-particle per unit area

    void validate() const;
};

/// Build a species and derive `charged` from the charge.
SpeciesDef make_species(std::string name, double charge_c, double mass_kg, int nstep = 1);

/// One macro-particle. Position `x` is the offset inside its cell in units
/// of dx; velocities are in dx per base time step.
struct ParticleRecord {
    double x = 0.0;
    double yp = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double vz = 0.0;

    bool operator==(const ParticleRecord&) const = default;
};

/// Particles of one species in one cell. Arrays are sized to the slot
/// capacity; only the first `count` entries are live.
struct CellParticles {
    std::vector<double> x;
    std::vector<double> yp; // empty unless the species tracks yp
    std::vector<double> vx;
    std::vector<double> vy;
    std::vector<double> vz;
    std::size_t count = 0;

    std::size_t capacity() const { return x.size(); }
    void reserve_slots(std::size_t slots, bool with_yp);
    ParticleRecord get(std::size_t i) const;
    void set(std::size_t i, const ParticleRecord& p);
};

/// "Natural sorting" storage: particle arrays per species per cell with
/// free space in every cell, so that spatial neighbours are memory
/// neighbours. A store may cover a sub-range of the global mesh
/// (`first_cell`), which is how decomposed runs hold their subdomain.
class CellSortedStore {
public:
    CellSortedStore() = default;
    CellSortedStore(std::vector<SpeciesDef> species, int global_nc, int first_cell, int cell_count,
                    std::size_t initial_capacity);

    std::size_t species_count() const { return species_.size(); }
    const SpeciesDef& species(std::size_t isp) const { return species_.at(isp); }
    const std::vector<SpeciesDef>& species_list() const { return species_; }

    int cell_count() const { return cell_count_; }
    int first_cell() const { return first_cell_; }
    int global_nc() const { return global_nc_; }

    CellParticles& cell(std::size_t isp, int j) { return cells_[isp][static_cast<std::size_t>(j)]; }
    const CellParticles& cell(std::size_t isp, int j) const {
        return cells_[isp][static_cast<std::size_t>(j)];
    }

    std::size_t np(std::size_t isp, int j) const { return cell(isp, j).count; }
    std::size_t cap(std::size_t isp, int j) const { return cell(isp, j).capacity(); }

    /// Append a particle, doubling the cell capacity when full.
    void push_back(std::size_t isp, int j, const ParticleRecord& p);

    /// Remove particle i by moving the last live particle into its slot.
    void swap_remove(std::size_t isp, int j, std::size_t i);

    /// Drop everything after the first `n` particles of a cell.
    void truncate(std::size_t isp, int j, std::size_t n);

    std::size_t total(std::size_t isp) const;
    std::size_t total() const;

    /// True when every live x lies in [0, 1).
    bool is_sorted() const;

    bool operator==(const CellSortedStore& other) const;

private:
    std::vector<SpeciesDef> species_;
    int global_nc_ = 0;
    int first_cell_ = 0;
    int cell_count_ = 0;
    std::vector<std::vector<CellParticles>> cells_;
};

/// Σ_j np[isp][j].
inline std::size_t store_total(const CellSortedStore& store, std::size_t isp) {
    return store.total(isp);
}

/// Velocity in grid units (dx per Δt) for a physical speed in m/s.
inline double to_grid_velocity(double v_ms, const Grid1D& grid, const PhysicalConstants& c) {
    return v_ms * c.dt_s / grid.dx_m;
}
inline double to_physical_velocity(double v_grid, const Grid1D& grid, const PhysicalConstants& c) {
    return v_grid * grid.dx_m / c.dt_s;
}

/// Thermal velocity sqrt(kT/m) in grid units.
double thermal_velocity_grid(const SpeciesDef& sp, const Grid1D& grid, const PhysicalConstants& c);

/// FNV-1a over raw bytes; used for bitwise fingerprints of field arrays.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fingerprint(std::span<const double> values);

} // namespace cellpic
