#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace crossdiff {

/// Scalar nodal field stored flat; 2D fields are row-major with the x index
/// fastest (node (ix, iy) lives at iy*n + ix).
using Field = std::vector<double>;

/// Uniform cell-centered grid on (0,length)^dim with homogeneous Neumann
/// boundary conditions realised through reflecting ghost cells.  Node j sits
/// at (j + 1/2) h per axis.
struct Grid {
    int dim = 1;
    int n = 2;            // nodes per axis
    double length = 1.0;
    double h = 0.5;       // length / n
    double weight = 0.5;  // quadrature weight per node, h^dim

    std::size_t node_count() const;
    double volume() const;  // length^dim
};

/// Validates dim in {1,2}, n >= 2, length > 0.  Throws std::invalid_argument.
Grid build_grid(int dim, int n, double length);

/// Five-point (three-point in 1D) Laplacian with reflecting ghost cells.
/// The resulting matrix is symmetric and negative semidefinite, and constants
/// are mapped to exactly zero.
Field apply_laplacian(const Grid& grid, const Field& f);

/// k-th Neumann eigenmode of the discrete Laplacian, normalised to unit
/// weighted L2 norm, together with its (nonpositive) eigenvalue.  In 1D
/// 0 <= k < n; in 2D modes are tensor products indexed k = kx*n + ky with
/// 0 <= kx,ky < n.
std::pair<Field, double> laplacian_eigenmode(const Grid& grid, int k_index);

/// Largest Laplacian eigenvalue magnitude on the grid: (4 dim / h^2) sin^2 of
/// the top mode angle.  Handy for picking time steps in estimator sweeps.
double laplacian_top_eigenvalue(const Grid& grid);

/// Weighted l^p norm, 1 <= p <= infinity (use INFINITY for the max norm).
double lp_norm(const Grid& grid, const Field& f, double p);

/// Weighted sum, i.e. the midpoint quadrature of f over the domain.
double integrate(const Grid& grid, const Field& f);

/// Weighted l^2 inner product.
double inner(const Grid& grid, const Field& f, const Field& g);

/// Solves (Id - tau D_a Lap) psi = rhs, the one-step backward dual operator
/// with frozen coefficient field a > 0.  Internally rewritten as the SPD
/// system (D_{1/a} - tau Lap) psi = D_{1/a} rhs and solved by Jacobi
/// preconditioned conjugate gradients until the residual of the original
/// system is below 1e-12 * ||rhs||_2.  Throws std::runtime_error if the
/// iteration cap (10x node count) is hit.
Field solve_dual_helmholtz(const Grid& grid, const Field& a, double tau,
                           const Field& rhs);

/// Solves (D_c - tau Lap D_a) u = rhs with a > 0, c >= 1, via the
/// substitution w = D_a u which yields the SPD system
/// (D_{c/a} - tau Lap) w = rhs.  The system matrix is an M-matrix, so
/// rhs >= 0 implies u >= 0 up to solver tolerance.  Residual contract and
/// failure mode as in solve_dual_helmholtz.
Field solve_primal_helmholtz(const Grid& grid, const Field& a, const Field& c,
                             double tau, const Field& rhs);

}  // namespace crossdiff
