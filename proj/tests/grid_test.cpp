#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "crossdiff/grid.hpp"

using namespace crossdiff;

namespace {

std::mt19937_64 rng_at(std::uint64_t seed) { return std::mt19937_64(seed); }

double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Field random_field(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    Field f(n);
    for (double& v : f) v = lo + (hi - lo) * unit(rng);
    return f;
}

// Dense Gaussian elimination oracle, independent of the library solver.
std::vector<double> dense_solve(std::vector<std::vector<double>> a,
                                std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return x;
}

// Column-by-column assembly of any linear field operator.
std::vector<std::vector<double>> assemble(
    const Grid& g, const std::function<Field(const Field&)>& op) {
    const std::size_t n = g.node_count();
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t c = 0; c < n; ++c) {
        Field e(n, 0.0);
        e[c] = 1.0;
        const Field col = op(e);
        for (std::size_t r = 0; r < n; ++r) m[r][c] = col[r];
    }
    return m;
}

}  // namespace

TEST_CASE("two-node stencil is exact") {
    const Grid g = build_grid(1, 2, 1.0);
    CHECK(g.h == 0.5);
    CHECK(g.node_count() == 2);
    const Field lap = apply_laplacian(g, {1.0, 0.0});
    CHECK(lap[0] == -4.0);
    CHECK(lap[1] == 4.0);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(build_grid(3, 4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1, 1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1, 4, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1, 4, 0.0), std::invalid_argument);
}

TEST_CASE("eigenmodes satisfy the stencil identity exactly") {
    for (const Grid& g : {build_grid(1, 17, 1.0), build_grid(2, 5, 2.0)}) {
        const double top = laplacian_top_eigenvalue(g);  // magnitude
        double stiffest = 0.0;
        for (int k = 0; k < static_cast<int>(g.node_count()); ++k) {
            const auto [mode, lambda] = laplacian_eigenmode(g, k);
            CHECK(lambda <= 1e-12);
            CHECK(lambda >= -top * (1.0 + 1e-12));
            stiffest = std::max(stiffest, -lambda);
            const Field lap = apply_laplacian(g, mode);
            double err = 0.0, scale = 0.0;
            for (std::size_t j = 0; j < mode.size(); ++j) {
                err = std::max(err, std::abs(lap[j] - lambda * mode[j]));
                scale = std::max(scale, std::abs(mode[j]));
            }
            CHECK(err <= 1e-12 * (4.0 / (g.h * g.h)) * scale);
        }
        CHECK(stiffest == doctest::Approx(top).epsilon(1e-12));
    }
}

TEST_CASE("eigenmodes are orthonormal in the weighted inner product") {
    const Grid g = build_grid(2, 4, 1.0);
    const int nc = static_cast<int>(g.node_count());
    for (int a = 0; a < nc; ++a)
        for (int b = a; b < nc; ++b) {
            const double ip = inner(g, laplacian_eigenmode(g, a).first,
                                    laplacian_eigenmode(g, b).first);
            CHECK(std::abs(ip - (a == b ? 1.0 : 0.0)) <= 1e-12);
        }
}

TEST_CASE("laplacian is symmetric, conservative, negative semidefinite") {
    for (const Grid& g : {build_grid(1, 13, 1.5), build_grid(2, 6, 1.0)}) {
        auto rng = rng_at(42);
        for (int trial = 0; trial < 20; ++trial) {
            const Field f = random_field(rng, g.node_count(), -1.0, 1.0);
            const Field w = random_field(rng, g.node_count(), -1.0, 1.0);
            const Field lf = apply_laplacian(g, f);
            const Field lw = apply_laplacian(g, w);
            const double scale = lp_norm(g, f, 2.0) * lp_norm(g, lw, 2.0) +
                                 lp_norm(g, w, 2.0) * lp_norm(g, lf, 2.0);
            CHECK(std::abs(inner(g, lf, w) - inner(g, f, lw)) <=
                  1e-13 * std::max(1.0, scale));

            double l1 = 0.0;
            for (double v : f) l1 += std::abs(v);
            CHECK(std::abs(integrate(g, lf)) <=
                  1e-12 * (4.0 / (g.h * g.h)) * g.weight * l1);

            CHECK(inner(g, f, lf) <= 1e-12 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("dual helmholtz solve matches a dense oracle") {
    const Grid g = build_grid(1, 6, 1.0);
    const double tau = 0.37;
    auto rng = rng_at(7);
    const Field a = random_field(rng, g.node_count(), 0.5, 3.0);
    const Field rhs = random_field(rng, g.node_count(), -2.0, 2.0);

    // Operator x -> x - tau * a .* Lap x assembled densely.
    auto m = assemble(g, [&](const Field& x) {
        Field out = apply_laplacian(g, x);
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] = x[j] - tau * a[j] * out[j];
        return out;
    });
    const std::vector<double> expect =
        dense_solve(m, std::vector<double>(rhs.begin(), rhs.end()));

    const Field psi = solve_dual_helmholtz(g, a, tau, rhs);
    for (std::size_t j = 0; j < psi.size(); ++j)
        CHECK(psi[j] == doctest::Approx(expect[j]).epsilon(1e-10));
}

TEST_CASE("dual helmholtz residual contract") {
    for (const Grid& g : {build_grid(1, 64, 1.0), build_grid(2, 12, 1.0)}) {
        auto rng = rng_at(11);
        for (int trial = 0; trial < 10; ++trial) {
            const double tau = 0.001 + 0.05 * unit(rng);
            const Field a = random_field(rng, g.node_count(), 0.5, 4.0);
            const Field rhs = random_field(rng, g.node_count(), -1.0, 1.0);
            const Field psi = solve_dual_helmholtz(g, a, tau, rhs);
            const Field lap = apply_laplacian(g, psi);
            Field res(psi.size());
            for (std::size_t j = 0; j < res.size(); ++j)
                res[j] = psi[j] - tau * a[j] * lap[j] - rhs[j];
            CHECK(lp_norm(g, res, 2.0) <= 5e-12 * lp_norm(g, rhs, 2.0));
        }
    }
}

TEST_CASE("dual helmholtz zero rhs gives zero") {
    const Grid g = build_grid(1, 8, 1.0);
    const Field psi =
        solve_dual_helmholtz(g, Field(8, 1.0), 0.1, Field(8, 0.0));
    for (double v : psi) CHECK(v == 0.0);
}

TEST_CASE("dual helmholtz preserves sign (M-matrix)") {
    const Grid g = build_grid(1, 32, 1.0);
    auto rng = rng_at(123);
    for (int trial = 0; trial < 100; ++trial) {
        const double tau = 0.001 + unit(rng);
        const Field a = random_field(rng, g.node_count(), 0.25, 5.0);
        Field rhs = random_field(rng, g.node_count(), 0.0, 1.0);
        double mx = 0.0;
        for (double v : rhs) mx = std::max(mx, v);
        const Field psi = solve_dual_helmholtz(g, a, tau, rhs);
        for (double v : psi) CHECK(v >= -1e-12 * mx);
    }
}

TEST_CASE("constant-coefficient solve is self-adjoint") {
    const Grid g = build_grid(1, 24, 1.0);
    const Field a(g.node_count(), 1.7);
    const double tau = 0.08;
    auto rng = rng_at(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Field f = random_field(rng, g.node_count(), -1.0, 1.0);
        const Field w = random_field(rng, g.node_count(), -1.0, 1.0);
        const Field sf = solve_dual_helmholtz(g, a, tau, f);
        const Field sw = solve_dual_helmholtz(g, a, tau, w);
        CHECK(std::abs(inner(g, sf, w) - inner(g, f, sw)) <= 1e-11);
    }
}

TEST_CASE("primal helmholtz solve matches a dense oracle and stays positive") {
    const Grid g = build_grid(1, 6, 1.0);
    const double tau = 0.21;
    auto rng = rng_at(19);
    const Field a = random_field(rng, g.node_count(), 0.5, 2.5);
    const Field c = random_field(rng, g.node_count(), 1.0, 1.8);
    const Field rhs = random_field(rng, g.node_count(), 0.0, 2.0);

    // Operator u -> c .* u - tau * Lap(a .* u).
    auto m = assemble(g, [&](const Field& x) {
        Field ax(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) ax[j] = a[j] * x[j];
        Field out = apply_laplacian(g, ax);
        for (std::size_t j = 0; j < x.size(); ++j)
            out[j] = c[j] * x[j] - tau * out[j];
        return out;
    });
    const std::vector<double> expect =
        dense_solve(m, std::vector<double>(rhs.begin(), rhs.end()));

    const Field u = solve_primal_helmholtz(g, a, c, tau, rhs);
    for (std::size_t j = 0; j < u.size(); ++j) {
        CHECK(u[j] == doctest::Approx(expect[j]).epsilon(1e-10));
        CHECK(u[j] >= -1e-14);
    }
}

TEST_CASE("primal helmholtz conserves mass when c = 1") {
    const Grid g = build_grid(2, 8, 1.0);
    auto rng = rng_at(77);
    const Field a = random_field(rng, g.node_count(), 0.5, 3.0);
    const Field rhs = random_field(rng, g.node_count(), 0.0, 1.0);
    const Field u =
        solve_primal_helmholtz(g, a, Field(g.node_count(), 1.0), 0.05, rhs);
    CHECK(std::abs(integrate(g, u) - integrate(g, rhs)) <=
          1e-11 * integrate(g, rhs));
}

TEST_CASE("norms and integrals on constant fields") {
    const Grid g = build_grid(2, 8, 2.0);
    const Field f(g.node_count(), 3.0);
    CHECK(integrate(g, f) == doctest::Approx(3.0 * 4.0).epsilon(1e-14));
    CHECK(lp_norm(g, f, 2.0) ==
          doctest::Approx(3.0 * 2.0).epsilon(1e-14));
    CHECK(lp_norm(g, f, 3.0) ==
          doctest::Approx(3.0 * std::pow(4.0, 1.0 / 3.0)).epsilon(1e-14));
    Field g1(g.node_count(), 0.0);
    g1[5] = -7.0;
    CHECK(lp_norm(g, g1, std::numeric_limits<double>::infinity()) == 7.0);
}

TEST_CASE("lp_norm rejects bad exponents") {
    const Grid g = build_grid(1, 4, 1.0);
    CHECK_THROWS_AS(lp_norm(g, Field(4, 1.0), 0.5), std::invalid_argument);
}
