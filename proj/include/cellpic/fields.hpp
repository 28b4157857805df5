#pragma once

#include "cellpic/core.hpp"

#include <span>
#include <vector>

namespace cellpic {

class Scheduler;

/// Node-centred grid quantities, nc + 1 entries each. For periodic
/// problems node nc is the image of node 0.
struct FieldState {
    std::vector<double> rho;     // C/m^3
    std::vector<double> phi;     // V
    std::vector<double> e_field; // V/m
    double subtracted_mean_rho = 0.0;

    FieldState() = default;
    explicit FieldState(int nc)
        : rho(static_cast<std::size_t>(nc) + 1, 0.0), phi(rho.size(), 0.0), e_field(rho.size(), 0.0) {}
};

/// Charge a store deposits on the nodes it touches (global nodes
/// first_cell .. first_cell + cell_count). The two end entries hold only
/// this store's share of nodes shared with neighbouring subdomains.
struct DensityPiece {
    int first_node = 0;
    std::vector<double> values;
};

/// Per-cell CIC partial sums, already multiplied by q w / dx and summed
/// over species: `left[j]` lands on node j, `right[j]` on node j + 1.
struct DepositPartials {
    std::vector<double> left;
    std::vector<double> right;

    explicit DepositPartials(int cells = 0)
        : left(static_cast<std::size_t>(cells), 0.0), right(static_cast<std::size_t>(cells), 0.0) {}
};

/// Fill partials for local cells [begin, end). Throws ContractViolation if
/// any particle offset lies outside [0, 1).
void accumulate_partials(const CellSortedStore& store, const Grid1D& grid, int begin, int end,
                         DepositPartials& out);

DensityPiece assemble_piece(const CellSortedStore& store, const DepositPartials& partials);

/// Local deposit of one store, optionally parallel over cell blocks.
DensityPiece deposit_piece(const CellSortedStore& store, const Grid1D& grid);
DensityPiece deposit_piece(const CellSortedStore& store, const Grid1D& grid, Scheduler& scheduler,
                           std::size_t grainsize);

/// Cloud-in-cell charge density of a store that covers the whole mesh.
/// Periodic: the two shares of node 0 / node nc are summed. Dirichlet: the
/// end nodes own half a cell, so their density is doubled.
std::vector<double> deposit_charge(const CellSortedStore& store, const Grid1D& grid,
                                   FieldBoundary bc = FieldBoundary::periodic());

/// Binomial 1-2-1 filter over the periodic ring of nodes 0..nc-1.
std::vector<double> smooth_density(std::span<const double> rho, int passes = 1);

/// Solve (phi[j-1] - 2 phi[j] + phi[j+1]) / dx^2 = -rho[j] / eps0 exactly.
/// Periodic problems have the mean charge removed (reported through
/// `subtracted_mean`) and the potential gauge-fixed to zero mean.
std::vector<double> solve_poisson(std::span<const double> rho, const Grid1D& grid,
                                  const PhysicalConstants& consts, FieldBoundary bc,
                                  double* subtracted_mean = nullptr);

/// max_j |A phi + rho / eps0| over the nodes the discrete operator covers.
double poisson_residual(std::span<const double> phi, std::span<const double> rho, const Grid1D& grid,
                        const PhysicalConstants& consts, FieldBoundary bc);

/// E = -dphi/dx: central differences inside, one-sided second order at
/// Dirichlet walls, periodic wrap otherwise.
std::vector<double> compute_efield(std::span<const double> phi, const Grid1D& grid, FieldBoundary bc);

/// Linear interpolation of the node field at a cell offset. Written as
/// a[j] + x (a[j+1] - a[j]) so that a uniform field is reproduced bitwise.
inline double interpolate(double left, double right, double x) {
    return left + x * (right - left);
}

/// Field at each particle, indexed [species][cell][particle].
struct ParticleField {
    std::vector<std::vector<std::vector<double>>> values;

    std::vector<double>& at(std::size_t isp, int j) { return values[isp][static_cast<std::size_t>(j)]; }
    const std::vector<double>& at(std::size_t isp, int j) const {
        return values[isp][static_cast<std::size_t>(j)];
    }
};

/// Size `out` to match the live particle counts of `store`.
void shape_like(ParticleField& out, const CellSortedStore& store);

/// Gather one species over local cells [begin, end) into a pre-shaped field.
void gather_cells(std::span<const double> e_field, const CellSortedStore& store, std::size_t isp,
                  int begin, int end, ParticleField& out);

/// Gather the node field at every particle of every species.
ParticleField gather_field(std::span<const double> e_field, const CellSortedStore& store);

} // namespace cellpic
