#include "cellpic/fields.hpp"

#include "cellpic/error.hpp"
#include "cellpic/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cellpic {

void accumulate_partials(const CellSortedStore& store, const Grid1D& grid, int begin, int end,
                         DepositPartials& out) {
    for (int j = begin; j < end; ++j) {
        double left = 0.0;
        double right = 0.0;
        for (std::size_t isp = 0; isp < store.species_count(); ++isp) {
            const SpeciesDef& sp = store.species(isp);
            if (!sp.charged) continue;
            const CellParticles& c = store.cell(isp, j);
            double sum_left = 0.0;
            double sum_right = 0.0;
            for (std::size_t i = 0; i < c.count; ++i) {
                const double x = c.x[i];
                if (!(x >= 0.0 && x < 1.0)) {
                    throw ContractViolation("deposit_charge: species '" + sp.name + "' cell " +
                                            std::to_string(store.first_cell() + j) +
                                            " holds an offset outside [0,1); resort first");
                }
                sum_left += 1.0 - x;
                sum_right += x;
            }
            const double scale = sp.charge_c * sp.weight_m2 / grid.dx_m;
            left += scale * sum_left;
            right += scale * sum_right;
        }
        out.left[static_cast<std::size_t>(j)] = left;
        out.right[static_cast<std::size_t>(j)] = right;
    }
}

DensityPiece assemble_piece(const CellSortedStore& store, const DepositPartials& partials) {
    const auto n = static_cast<std::size_t>(store.cell_count());
    DensityPiece piece;
    piece.first_node = store.first_cell();
    piece.values.assign(n + 1, 0.0);
    if (n == 0) return piece;
    piece.values[0] = partials.left[0];
    for (std::size_t k = 1; k < n; ++k) {
        piece.values[k] = partials.right[k - 1] + partials.left[k];
    }
    piece.values[n] = partials.right[n - 1];
    return piece;
}

DensityPiece deposit_piece(const CellSortedStore& store, const Grid1D& grid) {
    DepositPartials partials(store.cell_count());
    accumulate_partials(store, grid, 0, store.cell_count(), partials);
    return assemble_piece(store, partials);
}

DensityPiece deposit_piece(const CellSortedStore& store, const Grid1D& grid, Scheduler& scheduler,
                           std::size_t grainsize) {
    DepositPartials partials(store.cell_count());
    scheduler.parallel_for_blocks(
        0, static_cast<std::size_t>(store.cell_count()), grainsize,
        [&](std::size_t b, std::size_t e) {
            accumulate_partials(store, grid, static_cast<int>(b), static_cast<int>(e), partials);
        },
        0, "deposit");
    return assemble_piece(store, partials);
}

std::vector<double> deposit_charge(const CellSortedStore& store, const Grid1D& grid, FieldBoundary bc) {
    if (store.first_cell() != 0 || store.cell_count() != grid.nc) {
        throw ContractViolation("deposit_charge: store does not cover the whole mesh");
    }
    DensityPiece piece = deposit_piece(store, grid);
    std::vector<double> rho = std::move(piece.values);
    const auto n = static_cast<std::size_t>(grid.nc);
    if (bc.is_periodic()) {
        const double seam = rho[n] + rho[0];
        rho[0] = seam;
        rho[n] = seam;
    } else {
        rho[0] *= 2.0;
        rho[n] *= 2.0;
    }
    return rho;
}

std::vector<double> smooth_density(std::span<const double> rho, int passes) {
    if (rho.size() < 3) throw SizeError("smooth_density: need at least 2 cells");
    const std::size_t n = rho.size() - 1; // ring of nodes 0..n-1
    std::vector<double> cur(rho.begin(), rho.end());
    std::vector<double> next(rho.size());
    for (int p = 0; p < passes; ++p) {
        for (std::size_t j = 0; j < n; ++j) {
            const double lo = cur[j == 0 ? n - 1 : j - 1];
            const double hi = cur[j + 1 == n ? 0 : j + 1];
            next[j] = 0.25 * lo + 0.5 * cur[j] + 0.25 * hi;
        }
        next[n] = next[0];
        std::swap(cur, next);
    }
    return cur;
}

namespace {

/// Thomas elimination for the constant-coefficient system
/// x[i-1] - 2 x[i] + x[i+1] = d[i], i = 0..m-1, with x[-1] = x[m] = 0.
std::vector<double> solve_laplacian_tridiagonal(std::vector<double> d) {
    const std::size_t m = d.size();
    std::vector<double> c_prime(m);
    // a = c = 1, b = -2
    c_prime[0] = 1.0 / -2.0;
    d[0] = d[0] / -2.0;
    for (std::size_t i = 1; i < m; ++i) {
        const double denom = -2.0 - c_prime[i - 1];
        c_prime[i] = 1.0 / denom;
        d[i] = (d[i] - d[i - 1]) / denom;
    }
    for (std::size_t i = m - 1; i-- > 0;) {
        d[i] -= c_prime[i] * d[i + 1];
    }
    return d;
}

} // namespace

std::vector<double> solve_poisson(std::span<const double> rho, const Grid1D& grid,
                                  const PhysicalConstants& consts, FieldBoundary bc, double* subtracted_mean) {
    const int nc = grid.nc;
    if (nc < 3) throw SizeError("solve_poisson: need at least 3 cells, got " + std::to_string(nc));
    if (rho.size() != static_cast<std::size_t>(nc) + 1) {
        throw ContractViolation("solve_poisson: rho must have nc + 1 nodes");
    }
    const auto n = static_cast<std::size_t>(nc);
    const double scale = grid.dx_m * grid.dx_m / consts.epsilon0;
    std::vector<double> phi(n + 1, 0.0);

    if (bc.is_periodic()) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += rho[j];
        mean /= static_cast<double>(n);
        if (subtracted_mean != nullptr) *subtracted_mean = mean;

        // The singular periodic system has rank n - 1 and its rows sum to
        // zero once the mean charge is removed: fixing phi[0] = 0 and
        // dropping row 0 leaves a Dirichlet problem on nodes 1..n-1.
        std::vector<double> d(n - 1);
        for (std::size_t j = 1; j < n; ++j) d[j - 1] = -(rho[j] - mean) * scale;
        const std::vector<double> inner = solve_laplacian_tridiagonal(std::move(d));
        for (std::size_t j = 1; j < n; ++j) phi[j] = inner[j - 1];

        double phi_mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) phi_mean += phi[j];
        phi_mean /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) phi[j] -= phi_mean;
        phi[n] = phi[0];
    } else {
        if (subtracted_mean != nullptr) *subtracted_mean = 0.0;
        std::vector<double> d(n - 1);
        for (std::size_t j = 1; j < n; ++j) d[j - 1] = -rho[j] * scale;
        d.front() -= bc.phi_left;
        d.back() -= bc.phi_right;
        const std::vector<double> inner = solve_laplacian_tridiagonal(std::move(d));
        phi[0] = bc.phi_left;
        for (std::size_t j = 1; j < n; ++j) phi[j] = inner[j - 1];
        phi[n] = bc.phi_right;
    }
    return phi;
}

double poisson_residual(std::span<const double> phi, std::span<const double> rho, const Grid1D& grid,
                        const PhysicalConstants& consts, FieldBoundary bc) {
    const auto n = static_cast<std::size_t>(grid.nc);
    const double inv_dx2 = 1.0 / (grid.dx_m * grid.dx_m);
    double worst = 0.0;
    if (bc.is_periodic()) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += rho[j];
        mean /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double lo = phi[j == 0 ? n - 1 : j - 1];
            const double hi = phi[j + 1 == n ? 0 : j + 1];
            const double r = (lo - 2.0 * phi[j] + hi) * inv_dx2 + (rho[j] - mean) / consts.epsilon0;
            worst = std::max(worst, std::abs(r));
        }
    } else {
        for (std::size_t j = 1; j < n; ++j) {
            const double r = (phi[j - 1] - 2.0 * phi[j] + phi[j + 1]) * inv_dx2 + rho[j] / consts.epsilon0;
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

std::vector<double> compute_efield(std::span<const double> phi, const Grid1D& grid, FieldBoundary bc) {
    const auto n = static_cast<std::size_t>(grid.nc);
    if (phi.size() != n + 1) throw ContractViolation("compute_efield: phi must have nc + 1 nodes");
    const double inv_2dx = 1.0 / (2.0 * grid.dx_m);
    std::vector<double> e(n + 1, 0.0);
    if (bc.is_periodic()) {
        for (std::size_t j = 0; j < n; ++j) {
            const double lo = phi[j == 0 ? n - 1 : j - 1];
            const double hi = phi[j + 1 == n ? 0 : j + 1];
            e[j] = -(hi - lo) * inv_2dx;
        }
        e[n] = e[0];
    } else {
        for (std::size_t j = 1; j < n; ++j) e[j] = -(phi[j + 1] - phi[j - 1]) * inv_2dx;
        e[0] = -(-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) * inv_2dx;
        e[n] = -(3.0 * phi[n] - 4.0 * phi[n - 1] + phi[n - 2]) * inv_2dx;
    }
    return e;
}

void shape_like(ParticleField& out, const CellSortedStore& store) {
    out.values.resize(store.species_count());
    for (std::size_t isp = 0; isp < store.species_count(); ++isp) {
        out.values[isp].resize(static_cast<std::size_t>(store.cell_count()));
        for (int j = 0; j < store.cell_count(); ++j) out.at(isp, j).resize(store.np(isp, j));
    }
}

void gather_cells(std::span<const double> e_field, const CellSortedStore& store, std::size_t isp, int begin,
                  int end, ParticleField& out) {
    for (int j = begin; j < end; ++j) {
        const auto node = static_cast<std::size_t>(store.first_cell() + j);
        const double e_left = e_field[node];
        const double e_right = e_field[node + 1];
        const CellParticles& c = store.cell(isp, j);
        std::vector<double>& dst = out.at(isp, j);
        for (std::size_t i = 0; i < c.count; ++i) dst[i] = interpolate(e_left, e_right, c.x[i]);
    }
}

ParticleField gather_field(std::span<const double> e_field, const CellSortedStore& store) {
    ParticleField out;
    shape_like(out, store);
    for (std::size_t isp = 0; isp < store.species_count(); ++isp) {
        gather_cells(e_field, store, isp, 0, store.cell_count(), out);
    }
    return out;
}

} // namespace cellpic
