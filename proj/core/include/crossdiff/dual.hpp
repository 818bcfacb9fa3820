#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossdiff/grid.hpp"
#include "crossdiff/report.hpp"

namespace crossdiff {

/// Backward dual scheme data for
///   (Psi^{k+1} - Psi^k)/tau + a^{k+1} Lap Psi^k = F^{k+1},  Psi^N = 0,
/// where coeff[k-1] = a^k and forcing[k-1] = F^k for k = 1..N, and every
/// coefficient value lies in the declared band [coeff_lower, coeff_upper].
struct DualProblem {
    Grid grid;
    double tau = 0.0;
    int steps = 0;
    double coeff_lower = 0.0;
    double coeff_upper = 0.0;
    std::vector<Field> coeff;
    std::vector<Field> forcing;
};

/// Validates sizes, finiteness and the coefficient band.  Throws
/// std::invalid_argument on violation.
DualProblem make_dual_problem(Grid grid, double tau, std::vector<Field> coeff,
                              std::vector<Field> forcing, double lower,
                              double upper);

/// Convenience wrapper for a constant coefficient m > 0.
DualProblem make_constant_coefficient_problem(Grid grid, double m, double tau,
                                              std::vector<Field> forcing);

struct DualSolution {
    std::vector<Field> psi;      // k = 0..N, psi[N] = 0
    std::vector<Field> lap_psi;  // Lap psi^k, k = 0..N-1
};

/// Solve the dual scheme backwards from Psi^N = 0; each step is one
/// solve_dual_helmholtz call, so rhs >= 0 propagates to Psi >= 0 when the
/// forcing is nonpositive (M-matrix comparison).
DualSolution solve_dual(const DualProblem& problem);

/// (sum_k tau ||Lap Psi^k||_p^p)^(1/p) / (sum_k tau ||F^k||_p^p)^(1/p),
/// 1 < p < infinity.  Throws on identically zero forcing.
double regularity_ratio(const DualSolution& solution,
                        const DualProblem& problem, double p);

/// (sum over steps of tau * ||field||_p^p)^(1/p): the l^p-in-time,
/// L^p-in-space norm used in all regularity quotients.
double space_time_lp_norm(const Grid& grid, const std::vector<Field>& fields,
                          double tau, double p);

/// Exact discrete constant at p = 2 for a constant coefficient m: K = 1/m
/// (proved by the energy identity, valid uniformly in tau and N).
KValue exact_k_p2(double m);

/// Lower-bound estimation of the maximal regularity constant K_{m,p} on a
/// given grid/step/horizon.  Methods:
///   eigenmode     sweeps single Laplacian modes, both as a one-step impulse
///                 and as a constant-in-time forcing over all N steps
///   random        seeded i.i.d. forcings, trials of them, max ratio
///   power         l^p operator-norm power iteration (dual-exponent maps,
///                 alternating with the adjoint recursion), 20 restarts
///   dense_oracle  assembles the full forcing-to-Laplacian matrix
///                 (node_count * steps <= 4096) and maximises the ratio by
///                 multi-start iteration; at p = 2 the norm is computed from
///                 the spectrum of M^T M
/// Trials run concurrently with per-trial seeds; the aggregation is
/// deterministic for a fixed seed.
RegularityEstimate estimate_K(const Grid& grid, double m, double p, double tau,
                              int steps, const std::string& method,
                              int trials = 64, std::uint64_t seed = 1);

/// bar_D = K / (1 - (b-a)/2 * K); requires (b-a)/2 * K < 1 (throws otherwise).
double bar_D(double a, double b, double p, double k_half_sum);

/// Check the perturbed-coefficient estimates on one dual problem:
///   imp_laplace   space-time L^p norm of Lap Psi <= bar_D * forcing norm
///   imp_dt        ||Psi^0||_p <= (1 + b bar_D) (N tau)^(1/p') * forcing norm
///   psi_k_printed per-k bound with factor (1 + bar_D) ((N-k) tau |Omega|)^(1/p')
///   psi_k_derived per-k bound with factor (1 + b bar_D) ((N-k) tau)^(1/p')
/// The first two are certified when k_half_sum is exact (p = 2); the per-k
/// rows are informational.
EstimateReport verify_perturbation(const DualProblem& problem, double p,
                                   const KValue& k_half_sum);

/// Aggregate verify_perturbation over seeded random trials (coefficients
/// i.i.d. uniform in [lower, upper], forcings uniform in [-1, 1]); records
/// keep the worst margin over all trials.
EstimateReport run_perturbation_trials(const Grid& grid, double lower,
                                       double upper, double tau, int steps,
                                       double p, const KValue& k_half_sum,
                                       int trials, std::uint64_t seed);

/// Dense interpolation check on a small problem (node_count * steps <= 4096):
/// estimates K at exponents {p, q, r, p'} from the assembled matrix and
/// verifies K_r <= K_p^theta K_q^(1-theta) and K_p = K_{p'} within 2%,
/// where 1/r = theta/p + (1-theta)/q.  Also cross-checks the matrix-free
/// power method against the dense spectral norm at p = 2.
EstimateReport verify_interpolation(const Grid& grid, double m, double tau,
                                    int steps, double p, double q, double r);

/// Dense matrix of the linear map (F^1..F^N) -> (Lap Psi^0..Lap Psi^{N-1})
/// for a constant coefficient, stacked by time step then node.  Row-major.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    double operator()(int r, int c) const { return a[r * cols + c]; }
};

DenseMatrix assemble_dual_matrix(const Grid& grid, double m, double tau,
                                 int steps);

/// l^p -> l^p operator norm of a dense matrix by multi-start dual-exponent
/// power iteration (the p = 2 case reduces to the classical power method).
double dense_operator_p_norm(const DenseMatrix& m, double p, int restarts = 20,
                             std::uint64_t seed = 1);

/// Spectral norm via the symmetric eigenproblem of M^T M (exact up to
/// rounding for moderate sizes).
double dense_spectral_norm(const DenseMatrix& m);

}  // namespace crossdiff
