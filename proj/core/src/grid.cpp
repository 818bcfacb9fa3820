#include "crossdiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace crossdiff {

namespace {

void require_size(const Grid& grid, const Field& f, const char* name) {
    if (f.size() != grid.node_count())
        throw std::invalid_argument(std::string(name) + ": field size " +
                                    std::to_string(f.size()) +
                                    " does not match grid node count " +
                                    std::to_string(grid.node_count()));
}

// out = (d .* x) - tau * Lap x, fused to avoid a scratch field.
void apply_helmholtz(const Grid& g, const Field& d, double tau, const Field& x,
                     Field& out) {
    const int n = g.n;
    const double ih2 = 1.0 / (g.h * g.h);
    if (g.dim == 1) {
        for (int j = 0; j < n; ++j) {
            const double xl = (j == 0) ? x[j] : x[j - 1];
            const double xr = (j == n - 1) ? x[j] : x[j + 1];
            out[j] = d[j] * x[j] - tau * ((xl - 2.0 * x[j] + xr) * ih2);
        }
        return;
    }
    for (int iy = 0; iy < n; ++iy) {
        const int row = iy * n;
        for (int ix = 0; ix < n; ++ix) {
            const int j = row + ix;
            const double c = x[j];
            const double xl = (ix == 0) ? c : x[j - 1];
            const double xr = (ix == n - 1) ? c : x[j + 1];
            const double yd = (iy == 0) ? c : x[j - n];
            const double yu = (iy == n - 1) ? c : x[j + n];
            const double lap = (xl + xr + yd + yu - 4.0 * c) * ih2;
            out[j] = d[j] * c - tau * lap;
        }
    }
}

// Diagonal of (D_d - tau Lap); boundary rows lose the reflected neighbour.
Field helmholtz_diagonal(const Grid& g, const Field& d, double tau) {
    const int n = g.n;
    const double ih2 = 1.0 / (g.h * g.h);
    Field diag(g.node_count());
    if (g.dim == 1) {
        for (int j = 0; j < n; ++j) {
            const int neighbours = (j == 0 || j == n - 1) ? 1 : 2;
            diag[j] = d[j] + tau * neighbours * ih2;
        }
        return diag;
    }
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            int neighbours = 4;
            if (ix == 0 || ix == n - 1) --neighbours;
            if (iy == 0 || iy == n - 1) --neighbours;
            diag[iy * n + ix] = d[iy * n + ix] + tau * neighbours * ih2;
        }
    return diag;
}

double dot(const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Field& a) { return std::sqrt(dot(a, a)); }

// Residual norm used for the convergence contract: ||scale .* r||_2, where
// scale rescales the transformed residual back to the original system.
double scaled_norm(const Field& r, const Field* scale) {
    if (!scale) return norm2(r);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double v = (*scale)[i] * r[i];
        s += v * v;
    }
    return std::sqrt(s);
}

// Direct tridiagonal solve of (D_d - tau Lap) x = b in 1D.  The matrix is
// an M-matrix with strictly dominant columns, so LU without pivoting is
// stable; for b >= 0 every intermediate value is a sum of nonnegatives and
// the computed solution is nonnegative exactly.
Field thomas_spd_solve(const Grid& g, const Field& d, double tau,
                       const Field& b, const char* who) {
    const int n = g.n;
    const double t = tau / (g.h * g.h);
    Field pivot(n), y(n), x(n);
    pivot[0] = d[0] + t;
    y[0] = b[0];
    for (int j = 1; j < n; ++j) {
        const double w = t / pivot[j - 1];
        const double diag = d[j] + ((j == n - 1) ? t : 2.0 * t);
        pivot[j] = diag - w * t;
        if (!(pivot[j] > 0.0))
            throw std::runtime_error(std::string(who) +
                                     ": lost positive definiteness");
        y[j] = b[j] + w * y[j - 1];
    }
    x[n - 1] = y[n - 1] / pivot[n - 1];
    for (int j = n - 2; j >= 0; --j) x[j] = (y[j] + t * x[j + 1]) / pivot[j];
    return x;
}

// Solve (D_d - tau Lap) x = b: direct in 1D, Jacobi preconditioned CG in 2D.
// CG convergence is declared when ||scale .* (b - M x)||_2 <= tol_abs; the
// true residual is refreshed periodically to keep the recurrence honest.
Field cg_spd_solve(const Grid& g, const Field& d, double tau, const Field& b,
                   const Field* scale, double tol_abs, const char* who) {
    if (g.dim == 1) return thomas_spd_solve(g, d, tau, b, who);
    const std::size_t nc = g.node_count();
    Field x(nc, 0.0);
    if (scaled_norm(b, scale) <= tol_abs) return x;

    const Field diag = helmholtz_diagonal(g, d, tau);
    Field r = b;
    Field z(nc), p(nc), q(nc);
    for (std::size_t i = 0; i < nc; ++i) z[i] = r[i] / diag[i];
    p = z;
    double rz = dot(r, z);
    const std::size_t max_iter = 10 * nc;

    for (std::size_t it = 1; it <= max_iter; ++it) {
        apply_helmholtz(g, d, tau, p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0))
            throw std::runtime_error(std::string(who) +
                                     ": lost positive definiteness in CG");
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < nc; ++i) x[i] += alpha * p[i];
        if (it % 50 == 0) {
            apply_helmholtz(g, d, tau, x, q);  // refresh true residual
            for (std::size_t i = 0; i < nc; ++i) r[i] = b[i] - q[i];
        } else {
            for (std::size_t i = 0; i < nc; ++i) r[i] -= alpha * q[i];
        }
        if (scaled_norm(r, scale) <= tol_abs) {
            apply_helmholtz(g, d, tau, x, q);
            for (std::size_t i = 0; i < nc; ++i) r[i] = b[i] - q[i];
            if (scaled_norm(r, scale) <= tol_abs) return x;
        }
        const double rz_new = [&] {
            for (std::size_t i = 0; i < nc; ++i) z[i] = r[i] / diag[i];
            return dot(r, z);
        }();
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < nc; ++i) p[i] = z[i] + beta * p[i];
    }
    throw std::runtime_error(std::string(who) +
                             ": CG failed to reach tolerance within " +
                             std::to_string(max_iter) + " iterations");
}

}  // namespace

std::size_t Grid::node_count() const {
    std::size_t c = static_cast<std::size_t>(n);
    return dim == 1 ? c : c * c;
}

double Grid::volume() const { return dim == 1 ? length : length * length; }

Grid build_grid(int dim, int n, double length) {
    if (dim != 1 && dim != 2)
        throw std::invalid_argument("build_grid: dim must be 1 or 2, got " +
                                    std::to_string(dim));
    if (n < 2)
        throw std::invalid_argument("build_grid: n must be at least 2, got " +
                                    std::to_string(n));
    if (!(length > 0.0) || !std::isfinite(length))
        throw std::invalid_argument("build_grid: length must be positive");
    Grid g;
    g.dim = dim;
    g.n = n;
    g.length = length;
    g.h = length / n;
    g.weight = (dim == 1) ? g.h : g.h * g.h;
    return g;
}

Field apply_laplacian(const Grid& grid, const Field& f) {
    require_size(grid, f, "apply_laplacian");
    // Reuse the fused kernel: (0 .* x) - (-1) * Lap x = Lap x.
    Field out(grid.node_count());
    Field d(grid.node_count(), 0.0);
    apply_helmholtz(grid, d, -1.0, f, out);
    return out;
}

std::pair<Field, double> laplacian_eigenmode(const Grid& grid, int k_index) {
    const int n = grid.n;
    const double pi = std::acos(-1.0);
    auto axis_mode = [&](int k, int idx) {
        return std::cos(k * pi * (2.0 * idx + 1.0) / (2.0 * n));
    };
    auto axis_eigenvalue = [&](int k) {
        const double s = std::sin(k * pi / (2.0 * n));
        return -4.0 / (grid.h * grid.h) * s * s;
    };
    // Unit-normalised 1D factor: constant mode has sum n, others n/2.
    auto axis_scale = [&](int k) {
        const double sum_sq = (k == 0) ? n : n / 2.0;
        return 1.0 / std::sqrt(grid.h * sum_sq);
    };

    Field mode(grid.node_count());
    double lambda = 0.0;
    if (grid.dim == 1) {
        if (k_index < 0 || k_index >= n)
            throw std::invalid_argument("laplacian_eigenmode: k out of range");
        const double s = axis_scale(k_index);
        for (int j = 0; j < n; ++j) mode[j] = s * axis_mode(k_index, j);
        lambda = axis_eigenvalue(k_index);
    } else {
        if (k_index < 0 || k_index >= n * n)
            throw std::invalid_argument("laplacian_eigenmode: k out of range");
        const int kx = k_index / n;
        const int ky = k_index % n;
        const double s = axis_scale(kx) * axis_scale(ky);
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                mode[iy * n + ix] = s * axis_mode(kx, ix) * axis_mode(ky, iy);
        lambda = axis_eigenvalue(kx) + axis_eigenvalue(ky);
    }
    return {std::move(mode), lambda};
}

double laplacian_top_eigenvalue(const Grid& grid) {
    const double pi = std::acos(-1.0);
    const double s = std::sin((grid.n - 1) * pi / (2.0 * grid.n));
    return grid.dim * 4.0 / (grid.h * grid.h) * s * s;
}

double lp_norm(const Grid& grid, const Field& f, double p) {
    require_size(grid, f, "lp_norm");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0))
        throw std::invalid_argument("lp_norm: p must be >= 1 or infinity");
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    if (m == 0.0) return 0.0;
    double s = 0.0;
    if (p == 2.0) {
        for (double v : f) {
            const double t = v / m;
            s += t * t;
        }
    } else {
        for (double v : f) s += std::pow(std::abs(v) / m, p);
    }
    return m * std::pow(grid.weight * s, 1.0 / p);
}

double integrate(const Grid& grid, const Field& f) {
    require_size(grid, f, "integrate");
    double s = 0.0;
    for (double v : f) s += v;
    return grid.weight * s;
}

double inner(const Grid& grid, const Field& f, const Field& g) {
    require_size(grid, f, "inner");
    require_size(grid, g, "inner");
    return grid.weight * dot(f, g);
}

Field solve_dual_helmholtz(const Grid& grid, const Field& a, double tau,
                           const Field& rhs) {
    require_size(grid, a, "solve_dual_helmholtz (coefficient)");
    require_size(grid, rhs, "solve_dual_helmholtz (rhs)");
    if (!(tau > 0.0))
        throw std::invalid_argument("solve_dual_helmholtz: tau must be > 0");
    const std::size_t nc = grid.node_count();
    Field d(nc), b(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        if (!(a[i] > 0.0) || !std::isfinite(a[i]))
            throw std::invalid_argument(
                "solve_dual_helmholtz: coefficient must be positive and finite");
        d[i] = 1.0 / a[i];
        b[i] = rhs[i] * d[i];
    }
    // Residual of the original system is a .* (transformed residual).
    const double tol = 0.5e-12 * norm2(rhs);
    return cg_spd_solve(grid, d, tau, b, &a, tol, "solve_dual_helmholtz");
}

Field solve_primal_helmholtz(const Grid& grid, const Field& a, const Field& c,
                             double tau, const Field& rhs) {
    require_size(grid, a, "solve_primal_helmholtz (a)");
    require_size(grid, c, "solve_primal_helmholtz (c)");
    require_size(grid, rhs, "solve_primal_helmholtz (rhs)");
    if (!(tau > 0.0))
        throw std::invalid_argument("solve_primal_helmholtz: tau must be > 0");
    const std::size_t nc = grid.node_count();
    Field d(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        if (!(a[i] > 0.0) || !std::isfinite(a[i]))
            throw std::invalid_argument(
                "solve_primal_helmholtz: a must be positive and finite");
        if (!(c[i] >= 1.0 - 1e-12) || !std::isfinite(c[i]))
            throw std::invalid_argument(
                "solve_primal_helmholtz: c must be >= 1 and finite");
        d[i] = c[i] / a[i];
    }
    // With w = a .* u the transformed residual equals the original one.
    const double tol = 0.9e-12 * norm2(rhs);
    Field w =
        cg_spd_solve(grid, d, tau, rhs, nullptr, tol, "solve_primal_helmholtz");
    for (std::size_t i = 0; i < nc; ++i) w[i] /= a[i];
    return w;
}

}  // namespace crossdiff
