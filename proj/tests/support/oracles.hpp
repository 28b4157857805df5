#pragma once

// Independent reference implementations used only by the tests. None of
// these call into the library's numerical kernels.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace oracle {

/// Forward-Euler neutral depletion with a constant electron density:
/// n_{k+1} = n_k - dt * n_e * R * n_k. Returns n_k / n_0 for k = 0..steps.
inline std::vector<double> depletion_fixed_electrons(double ne, double rate, double dt, int steps) {
    std::vector<double> f(static_cast<std::size_t>(steps) + 1);
    f[0] = 1.0;
    for (int k = 0; k < steps; ++k) f[k + 1] = f[k] - dt * ne * rate * f[k];
    return f;
}

/// Forward-Euler depletion when every ionization adds an electron:
/// n_e = n_e0 + (n_0 - n). Returns n_k / n_0.
inline std::vector<double> depletion_growing_electrons(double n0, double ne0, double rate, double dt, int steps) {
    std::vector<double> f(static_cast<std::size_t>(steps) + 1);
    double n = n0;
    f[0] = 1.0;
    for (int k = 0; k < steps; ++k) {
        const double ne = ne0 + (n0 - n);
        n -= dt * ne * rate * n;
        f[k + 1] = n / n0;
    }
    return f;
}

/// First index at which the sequence drops to or below `level`; -1 if never.
inline int first_crossing(const std::vector<double>& f, double level) {
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (f[k] <= level) return static_cast<int>(k);
    }
    return -1;
}

/// Cloud-in-cell scatter of point charges on a periodic mesh, one particle
/// at a time. Positions are global, in cells.
inline std::vector<double> cic_scatter_periodic(const std::vector<double>& pos, const std::vector<double>& charge,
                                                int nc, double dx) {
    std::vector<double> rho(static_cast<std::size_t>(nc) + 1, 0.0);
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const double g = std::floor(pos[i]);
        const double f = pos[i] - g;
        const int j = static_cast<int>(g) % nc;
        rho[static_cast<std::size_t>(j)] += charge[i] * (1.0 - f) / dx;
        rho[static_cast<std::size_t>((j + 1) % nc)] += charge[i] * f / dx;
    }
    rho[static_cast<std::size_t>(nc)] = rho[0];
    return rho;
}

/// Dense Gaussian elimination with partial pivoting; a is row-major n x n.
inline std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
        }
        for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double m = a[r * n + c] / a[c * n + c];
            for (std::size_t k = c; k < n; ++k) a[r * n + k] -= m * a[c * n + k];
            b[r] -= m * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k];
        x[r] = s / a[r * n + r];
    }
    return x;
}

/// Potential on nodes 0..nc for phi'' = -rho/eps0 with pinned ends, from a
/// dense system over the interior nodes.
inline std::vector<double> dirichlet_potential(const std::vector<double>& rho, double dx, double eps0,
                                               double left, double right) {
    const std::size_t nc = rho.size() - 1;
    const std::size_t n = nc - 1;
    std::vector<double> a(n * n, 0.0), b(n);
    for (std::size_t r = 0; r < n; ++r) {
        a[r * n + r] = -2.0;
        if (r > 0) a[r * n + r - 1] = 1.0;
        if (r + 1 < n) a[r * n + r + 1] = 1.0;
        b[r] = -rho[r + 1] * dx * dx / eps0;
    }
    b[0] -= left;
    b[n - 1] -= right;
    const std::vector<double> inner = dense_solve(a, b);
    std::vector<double> phi(nc + 1);
    phi[0] = left;
    phi[nc] = right;
    for (std::size_t r = 0; r < n; ++r) phi[r + 1] = inner[r];
    return phi;
}

/// Standard deviation of a Binomial(n, p) count.
inline double binomial_sigma(double n, double p) { return std::sqrt(n * p * (1.0 - p)); }

/// -expm1(-x) from its Taylor series, for small x.
inline double one_minus_exp_series(double x) {
    double term = x, sum = 0.0;
    for (int k = 1; k < 30; ++k) {
        sum += term;
        term *= -x / (k + 1);
    }
    return sum;
}

} // namespace oracle
