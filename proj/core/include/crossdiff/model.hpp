#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crossdiff/grid.hpp"
#include "crossdiff/report.hpp"

namespace crossdiff {

/// State of all species at one spatial point, componentwise >= 0.
using Point = std::vector<double>;

/// Per-species nodal fields; state[i] lives on one shared grid.
using SpeciesState = std::vector<Field>;

/// Tiny dense square matrix, row-major, for per-point Jacobians/Hessians.
struct SquareMatrix {
    int n = 0;
    std::vector<double> a;

    SquareMatrix() = default;
    explicit SquareMatrix(int size) : n(size), a(size * size, 0.0) {}
    double& operator()(int i, int j) { return a[i * n + j]; }
    double operator()(int i, int j) const { return a[i * n + j]; }
};

/// Smallest eigenvalue of the symmetric part of m, by cyclic Jacobi sweeps.
double min_symmetric_eigenvalue(const SquareMatrix& m);

/// Cross-diffusion reaction system in Laplace form,
///   d_t u_i - Lap(p_i(U) u_i) = R_i(U),
/// with the reaction split R_i(U) = gain_i(U) - u_i * loss_i(U), both parts
/// nonnegative on the nonnegative orthant.  The entropy members describe a
/// convex nonnegative H whose Hessian against the diffusion Jacobian is
/// positive semidefinite (the dissipative structure the monitors rely on).
struct ModelSpec {
    std::string name;
    int species = 1;

    std::function<double(int, const Point&)> pressure;  // p_i(U) > 0
    std::function<double(int, const Point&)> gain;      // r_i^+(U) >= 0
    std::function<double(int, const Point&)> loss;      // r_i^-(U) >= 0

    std::function<double(const Point&)> entropy;                   // H(U)
    std::function<Point(const Point&)> entropy_gradient;           // interior
    std::function<SquareMatrix(const Point&)> entropy_hessian;     // interior
    // DA(U)[i][j] = d(p_i(U) u_i)/du_j, the Jacobian of U -> (p_i u_i)_i.
    std::function<SquareMatrix(const Point&)> diffusion_jacobian;  // interior
    // Optional diagonal floor f_i(u_i) with D2H * DA >= diag(f); empty when
    // no convenient closed form exists (the check is then skipped).
    std::vector<std::function<double(double)>> uniform_floor;

    double mass_constant = 0.0;     // C_R: sum_i R_i <= C_R (1 + sum_i u_i)
    double entropy_constant = 0.0;  // C_H: grad H . R <= C_H (1 + sum u + H)
    double pressure_lower = 0.0;    // a
    double pressure_upper = std::numeric_limits<double>::infinity();  // b

    bool bounded() const;
    double reaction(int i, const Point& u) const;
    Point a_map(const Point& u) const;  // A(U) = (p_i(U) u_i)_i
};

/// Construct one of the built-in models by name:
///   scalar_heat           p1 = m, R = 0                        (params: m)
///   skt                   linear pressures, logistic reactions (d1,d2,a11,
///                         a12,a21,a22,g1,g2,r11,r12,r21,r22)
///   skt_concave           p1 = d1 + v^alpha, p2 = d2 + u^beta, power entropy
///                         (d1,d2,alpha,beta; rejects alpha*beta > 1)
///   bounded_quadratic     p1 = d1 + v/(1+v), logistic reactions (d1,d2)
///   bounded_superquadratic  same pressures, R_u = u(1 - u log(1+u) - v)
/// Unknown names or invalid parameters throw std::invalid_argument.
ModelSpec builtin_model(const std::string& name,
                        const std::map<std::string, double>& params = {});

struct ModelEval {
    Point pressures;
    Point reactions;
    double entropy = 0.0;
    std::optional<Point> entropy_gradient;
    std::optional<SquareMatrix> entropy_hessian;
    std::optional<SquareMatrix> diffusion_jacobian;
};

/// Evaluate the model at one point.  Derivatives require a strictly interior
/// point (all u_i > 0); requesting them on the boundary throws.  Negative or
/// non-finite input always throws.
ModelEval eval_model_at(const ModelSpec& model, const Point& u,
                        bool with_derivatives = true);

/// Invert A(U) = (p_i(U) u_i) by damped Newton, ||A(result) - w|| <= 1e-10
/// relative.  Zero components of w map to zero components of the result.
/// Throws std::runtime_error when the iteration stalls (A is assumed to be a
/// homeomorphism of the nonnegative orthant).
Point invert_A(const ModelSpec& model, const Point& w);

/// Sample the structural hypotheses (nonnegativity, pressure bounds, mass
/// control, entropy convexity/dissipativity/compatibility, uniform floor,
/// quasi-positivity) at log-uniform random points in (1e-6, box_size]^I and
/// report worst-case margins with witnesses.
StructureReport check_structure(const ModelSpec& model, int sample_count = 10000,
                                double box_size = 1e3,
                                std::uint64_t seed = 12345);

/// Track max |R(U)|_2 / (1 + |U|_2^p) over nested magnitude shells; a
/// decreasing tail is consistent with |R(U)| = o(|U|^p) at infinity.
GrowthReport check_reaction_growth(const ModelSpec& model, double p,
                                   int sample_count = 10000,
                                   std::uint64_t seed = 12345);

}  // namespace crossdiff
