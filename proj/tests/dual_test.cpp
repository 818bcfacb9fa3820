#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "crossdiff/dual.hpp"
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

std::vector<Field> random_forcing(std::mt19937_64& rng, std::size_t n,
                                  int steps, double lo, double hi) {
    std::vector<Field> f(steps);
    for (Field& g : f) g = random_field(rng, n, lo, hi);
    return f;
}

}  // namespace

TEST_CASE("problem validation") {
    const Grid g = build_grid(1, 4, 1.0);
    CHECK_THROWS_AS(
        make_constant_coefficient_problem(g, -1.0, 0.1, {Field(4, 0.0)}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        make_constant_coefficient_problem(g, 1.0, 0.0, {Field(4, 0.0)}),
        std::invalid_argument);
    CHECK_THROWS_AS(make_dual_problem(g, 0.1, {Field(4, 0.5)}, {Field(4, 0.0)},
                                      1.0, 2.0),
                    std::invalid_argument);  // coefficient leaves the band
    CHECK_THROWS_AS(make_dual_problem(g, 0.1, {}, {}, 1.0, 2.0),
                    std::invalid_argument);
}

TEST_CASE("zero forcing gives the zero solution") {
    const Grid g = build_grid(1, 8, 1.0);
    const DualProblem problem = make_constant_coefficient_problem(
        g, 2.0, 0.1, std::vector<Field>(5, Field(8, 0.0)));
    const DualSolution sol = solve_dual(problem);
    for (const Field& psi : sol.psi)
        for (double v : psi) CHECK(v == 0.0);
}

TEST_CASE("spatially constant forcing telescopes exactly") {
    const Grid g = build_grid(1, 12, 1.0);
    const double tau = 0.07;
    const int steps = 6;
    const std::vector<double> c = {0.4, -1.2, 0.9, 2.0, -0.3, 0.55};
    std::vector<Field> forcing(steps);
    for (int k = 0; k < steps; ++k) forcing[k].assign(g.node_count(), c[k]);
    const DualProblem problem =
        make_constant_coefficient_problem(g, 1.3, tau, forcing);
    const DualSolution sol = solve_dual(problem);
    for (int k = 0; k <= steps; ++k) {
        double expect = 0.0;
        for (int j = k; j < steps; ++j) expect -= tau * c[j];
        for (double v : sol.psi[k])
            CHECK(v == doctest::Approx(expect).epsilon(1e-13).scale(1.0));
    }
    for (const Field& lap : sol.lap_psi)
        for (double v : lap) CHECK(std::abs(v) <= 1e-10);
}

TEST_CASE("single-step eigenmode impulse has a closed form") {
    const Grid g = build_grid(1, 16, 1.0);
    const double tau = 0.02, m = 1.5, f = 0.8;
    for (int k : {1, 5, 15}) {
        const auto [mode, lambda] = laplacian_eigenmode(g, k);
        std::vector<Field> forcing(1, mode);
        for (double& v : forcing[0]) v *= f;
        const DualProblem problem =
            make_constant_coefficient_problem(g, m, tau, forcing);
        const DualSolution sol = solve_dual(problem);
        const double coeff = -tau * f / (1.0 - m * lambda * tau);
        for (std::size_t j = 0; j < mode.size(); ++j) {
            CHECK(sol.psi[0][j] ==
                  doctest::Approx(coeff * mode[j]).epsilon(1e-12).scale(1e-3));
            CHECK(sol.lap_psi[0][j] == doctest::Approx(lambda * coeff * mode[j])
                                           .epsilon(1e-10)
                                           .scale(1e-3));
        }
    }
}

TEST_CASE("multi-step eigenmode recursion has a scalar closed form") {
    const Grid g = build_grid(1, 10, 1.0);
    const double tau = 0.3, m = 0.7;
    const int steps = 5;
    const auto [mode, lambda] = laplacian_eigenmode(g, 7);
    auto rng = rng_at(3);
    std::vector<double> fh(steps);
    std::vector<Field> forcing(steps, mode);
    for (int k = 0; k < steps; ++k) {
        fh[k] = 2.0 * unit(rng) - 1.0;
        for (double& v : forcing[k]) v *= fh[k];
    }
    const DualProblem problem =
        make_constant_coefficient_problem(g, m, tau, forcing);
    const DualSolution sol = solve_dual(problem);

    std::vector<double> coeffs(steps + 1, 0.0);
    for (int k = steps - 1; k >= 0; --k)
        coeffs[k] = (coeffs[k + 1] - tau * fh[k]) / (1.0 - m * lambda * tau);
    for (int k = 0; k <= steps; ++k)
        for (std::size_t j = 0; j < mode.size(); ++j)
            CHECK(sol.psi[k][j] == doctest::Approx(coeffs[k] * mode[j])
                                       .epsilon(1e-11)
                                       .scale(1e-3));
}

TEST_CASE("p = 2 regularity ratio never exceeds 1/m") {
    auto rng = rng_at(17);
    const Grid g = build_grid(1, 24, 1.0);
    for (double m : {0.5, 1.0, 3.0}) {
        for (int trial = 0; trial < 20; ++trial) {
            const int steps = 1 + static_cast<int>(unit(rng) * 8);
            const double tau = 0.01 + 0.4 * unit(rng);
            const DualProblem problem = make_constant_coefficient_problem(
                g, m, tau,
                random_forcing(rng, g.node_count(), steps, -1.0, 1.0));
            const double ratio =
                regularity_ratio(solve_dual(problem), problem, 2.0);
            CHECK(ratio <= 1.0 / m + 1e-9);
        }
    }
}

TEST_CASE("nonpositive forcing gives nonnegative dual states") {
    auto rng = rng_at(29);
    const Grid g = build_grid(1, 16, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int steps = 1 + static_cast<int>(unit(rng) * 6);
        const double tau = 0.01 + unit(rng);
        std::vector<Field> coeff(steps), forcing(steps);
        double mx = 0.0;
        for (int k = 0; k < steps; ++k) {
            coeff[k] = random_field(rng, g.node_count(), 0.5, 2.5);
            forcing[k] = random_field(rng, g.node_count(), -1.0, 0.0);
            for (double v : forcing[k]) mx = std::max(mx, std::abs(v));
        }
        const DualProblem problem =
            make_dual_problem(g, tau, coeff, forcing, 0.5, 2.5);
        const DualSolution sol = solve_dual(problem);
        for (const Field& psi : sol.psi)
            for (double v : psi) CHECK(v >= -1e-12 * mx);
    }
}

TEST_CASE("exact discrete duality pairing telescopes to zero") {
    auto rng = rng_at(41);
    const Grid g = build_grid(1, 20, 1.0);
    const double tau = 0.05;
    const int steps = 8;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Field> coeff(steps), forcing(steps);
        for (int k = 0; k < steps; ++k) {
            coeff[k] = random_field(rng, g.node_count(), 1.0, 2.0);
            forcing[k] = random_field(rng, g.node_count(), -1.0, 1.0);
        }
        const DualProblem problem =
            make_dual_problem(g, tau, coeff, forcing, 1.0, 2.0);
        const DualSolution sol = solve_dual(problem);

        // Homogeneous primal scheme sharing the coefficients:
        // u^k - tau Lap(a^k u^k) = u^{k-1}.
        Field u = random_field(rng, g.node_count(), 0.0, 2.0);
        const Field u0 = u;
        const Field ones(g.node_count(), 1.0);
        double pairing = 0.0;
        for (int k = 1; k <= steps; ++k) {
            u = solve_primal_helmholtz(g, coeff[k - 1], ones, tau, u);
            pairing += tau * inner(g, u, forcing[k - 1]);
        }
        pairing += inner(g, u0, sol.psi[0]);
        CHECK(std::abs(pairing) <= 1e-11 * std::max(1.0, std::abs(pairing) +
                                                             inner(g, u0, u0)));
    }
}

TEST_CASE("coefficient-step rescaling identity") {
    auto rng = rng_at(53);
    const Grid g = build_grid(1, 16, 1.0);
    const double tau = 0.04;
    const int steps = 6;
    for (double m : {0.5, 2.0, 4.0}) {
        for (int trial = 0; trial < 10; ++trial) {
            const std::vector<Field> forcing =
                random_forcing(rng, g.node_count(), steps, -1.0, 1.0);
            const DualProblem pm =
                make_constant_coefficient_problem(g, m, tau, forcing);
            const DualProblem p1 =
                make_constant_coefficient_problem(g, 1.0, m * tau, forcing);
            const double rm = regularity_ratio(solve_dual(pm), pm, 2.0);
            const double r1 = regularity_ratio(solve_dual(p1), p1, 2.0);
            CHECK(std::abs(rm - r1 / m) <= 1e-12 * rm);
        }
    }
}

TEST_CASE("estimate_K input validation and method dispatch") {
    const Grid g = build_grid(1, 8, 1.0);
    CHECK_THROWS_AS(estimate_K(g, 1.0, 1.0, 0.1, 2, "random"),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_K(g, 0.0, 2.0, 0.1, 2, "random"),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_K(g, 1.0, 2.0, 0.1, 2, "bogus"),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_K(g, 1.0, 2.0, 0.1, 0, "random"),
                    std::invalid_argument);
}

TEST_CASE("estimators agree and respect the p = 2 bound") {
    const Grid g = build_grid(1, 8, 1.0);
    const double m = 2.0, tau = 0.25;
    const int steps = 4;
    const RegularityEstimate eig = estimate_K(g, m, 2.0, tau, steps, "eigenmode");
    const RegularityEstimate rnd =
        estimate_K(g, m, 2.0, tau, steps, "random", 32, 5);
    const RegularityEstimate pow2 = estimate_K(g, m, 2.0, tau, steps, "power");
    const RegularityEstimate dense =
        estimate_K(g, m, 2.0, tau, steps, "dense_oracle");
    const double exact = exact_k_p2(m).value;

    // All are lower bounds; the operator norm dominates every sampled ratio.
    for (const RegularityEstimate* est : {&eig, &rnd, &pow2, &dense}) {
        CHECK(est->k_hat <= exact + 1e-9);
        CHECK(est->k_hat > 0.0);
    }
    CHECK(eig.k_hat <= dense.k_hat + 1e-9);
    CHECK(rnd.k_hat <= dense.k_hat + 1e-9);
    CHECK(std::abs(pow2.k_hat - dense.k_hat) <= 1e-8 * dense.k_hat);
}

TEST_CASE("random estimation is deterministic for a fixed seed") {
    const Grid g = build_grid(1, 12, 1.0);
    const RegularityEstimate a = estimate_K(g, 1.0, 2.5, 0.1, 4, "random", 16, 99);
    const RegularityEstimate b = estimate_K(g, 1.0, 2.5, 0.1, 4, "random", 16, 99);
    CHECK(a.k_hat == b.k_hat);
    REQUIRE(a.trial_log.size() == b.trial_log.size());
    for (std::size_t i = 0; i < a.trial_log.size(); ++i)
        CHECK(a.trial_log[i].ratio == b.trial_log[i].ratio);
}

TEST_CASE("eigenmode estimate is horizon stable") {
    const Grid g = build_grid(1, 16, 1.0);
    const double tau = 0.05;
    const RegularityEstimate short_run =
        estimate_K(g, 1.0, 2.0, tau, 8, "eigenmode");
    const RegularityEstimate long_run =
        estimate_K(g, 1.0, 2.0, tau, 16, "eigenmode");
    CHECK(std::abs(long_run.k_hat - short_run.k_hat) <=
          0.01 * short_run.k_hat);
}

TEST_CASE("bar_D formula and oscillation gate") {
    CHECK(bar_D(1.0, 1.0, 2.0, 0.5) == doctest::Approx(0.5));
    // (b-a)/2 = 0.5, K = 1 -> bar_D = 1 / (1 - 0.5).
    CHECK(bar_D(1.0, 2.0, 2.0, 1.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(bar_D(1.0, 3.0, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(bar_D(-1.0, 1.0, 2.0, 0.5), std::invalid_argument);
}

TEST_CASE("perturbation records on a constant-coefficient problem") {
    auto rng = rng_at(71);
    const Grid g = build_grid(1, 16, 1.0);
    const double tau = 0.05;
    const int steps = 8;
    const DualProblem problem = make_constant_coefficient_problem(
        g, 1.5, tau, random_forcing(rng, g.node_count(), steps, -1.0, 1.0));
    const EstimateReport rep = verify_perturbation(problem, 2.0, exact_k_p2(1.5));
    REQUIRE(rep.records.size() == 4);
    CHECK(rep.records[0].id == "imp_laplace");
    CHECK(rep.records[1].id == "imp_dt");
    CHECK(rep.records[2].id == "psi_k_printed");
    CHECK(rep.records[3].id == "psi_k_derived");
    CHECK(rep.records[0].certified);
    CHECK(rep.records[1].certified);
    CHECK_FALSE(rep.records[2].certified);
    CHECK(rep.certified_pass());
    CHECK(rep.all_pass());
}

TEST_CASE("perturbation trials are deterministic and aggregate worst margins") {
    const Grid g = build_grid(1, 12, 1.0);
    const KValue k = exact_k_p2(1.5);
    const EstimateReport a =
        run_perturbation_trials(g, 1.0, 2.0, 0.1, 6, 2.0, k, 12, 2025);
    const EstimateReport b =
        run_perturbation_trials(g, 1.0, 2.0, 0.1, 6, 2.0, k, 12, 2025);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].lhs == b.records[i].lhs);
        CHECK(a.records[i].margin == b.records[i].margin);
    }
    CHECK(a.certified_pass());

    const EstimateReport single =
        run_perturbation_trials(g, 1.0, 2.0, 0.1, 6, 2.0, k, 1, 2025);
    // More trials can only shrink the worst margin.
    for (std::size_t i = 0; i < a.records.size(); ++i)
        CHECK(a.records[i].margin <= single.records[i].margin + 1e-15);
}

TEST_CASE("space_time_lp_norm basics") {
    const Grid g = build_grid(1, 4, 1.0);
    const std::vector<Field> fields(3, Field(4, 2.0));
    // (3 * tau * |Omega| * 2^p)^(1/p) with tau = 0.5.
    CHECK(space_time_lp_norm(g, fields, 0.5, 2.0) ==
          doctest::Approx(2.0 * std::sqrt(1.5)).epsilon(1e-14));
    CHECK(space_time_lp_norm(g, {}, 0.5, 2.0) == 0.0);
    CHECK_THROWS_AS(space_time_lp_norm(g, fields, 0.5, 1.0),
                    std::invalid_argument);
}

TEST_CASE("dense assembly matches the solver map") {
    const Grid g = build_grid(1, 5, 1.0);
    const double m = 1.2, tau = 0.15;
    const int steps = 3;
    const DenseMatrix mat = assemble_dual_matrix(g, m, tau, steps);
    REQUIRE(mat.rows == 15);
    REQUIRE(mat.cols == 15);

    auto rng = rng_at(83);
    const std::vector<Field> forcing =
        random_forcing(rng, g.node_count(), steps, -1.0, 1.0);
    const DualProblem problem =
        make_constant_coefficient_problem(g, m, tau, forcing);
    const DualSolution sol = solve_dual(problem);
    for (int k = 0; k < steps; ++k)
        for (int j = 0; j < 5; ++j) {
            double s = 0.0;
            for (int kk = 0; kk < steps; ++kk)
                for (int jj = 0; jj < 5; ++jj)
                    s += mat(k * 5 + j, kk * 5 + jj) * forcing[kk][jj];
            CHECK(s == doctest::Approx(sol.lap_psi[k][j])
                           .epsilon(1e-9)
                           .scale(1e-2));
        }
    CHECK_THROWS_AS(assemble_dual_matrix(build_grid(1, 2049, 1.0), 1.0, 0.1, 3),
                    std::invalid_argument);
}

TEST_CASE("interpolation suite on a tiny problem") {
    const Grid g = build_grid(1, 6, 1.0);
    const EstimateReport rep = verify_interpolation(g, 1.0, 0.2, 3, 2.0, 6.0, 3.0);
    REQUIRE(rep.records.size() == 3);
    CHECK(rep.records[0].id == "interpolation");
    CHECK(rep.records[1].id == "conjugate_exponent");
    CHECK(rep.records[2].id == "power_vs_dense_p2");
    for (const InequalityRecord& r : rep.records) CHECK(r.pass);
    CHECK_THROWS_AS(verify_interpolation(g, 1.0, 0.2, 3, 3.0, 2.0, 6.0),
                    std::invalid_argument);
}
