#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "crossdiff/dual.hpp"
#include "crossdiff/estimates.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"

using namespace crossdiff;

namespace {

SpeciesState perturbed_constant(const Grid& g, int species, double base) {
    SpeciesState state(species, Field(g.node_count()));
    for (int i = 0; i < species; ++i)
        for (std::size_t j = 0; j < g.node_count(); ++j)
            state[i][j] =
                base * (1.0 + 0.2 * std::sin(2.0 * (j + 1) * (i + 1)));
    return state;
}

const InequalityRecord& record(const EstimateReport& rep,
                               const std::string& id) {
    for (const InequalityRecord& r : rep.records)
        if (r.id == id) return r;
    REQUIRE_MESSAGE(false, "missing record ", id);
    static InequalityRecord dummy;
    return dummy;
}

}  // namespace

TEST_CASE("condition check gates on the oscillation") {
    const ConditionCheck ok = condition_check(1.0, 2.0, {2.0 / 3.0, "exact_p2"});
    CHECK(ok.oscillation == doctest::Approx(1.0 / 3.0));
    CHECK(ok.admissible);
    const ConditionCheck bad = condition_check(1.0, 4.0, {2.0 / 5.0 + 0.4, "user"});
    CHECK_FALSE(bad.admissible);
    CHECK_THROWS_AS(condition_check(2.0, 1.0, {0.5, "user"}),
                    std::invalid_argument);
    CHECK_THROWS_AS(condition_check(0.0, 1.0, {0.5, "user"}),
                    std::invalid_argument);
    CHECK_THROWS_AS(condition_check(1.0, 2.0, {-0.5, "user"}),
                    std::invalid_argument);
}

TEST_CASE("discrete duality estimate certifies at p = 2") {
    const Grid g = build_grid(1, 32, 1.0);
    const ModelSpec model = builtin_model("bounded_quadratic");
    const SpeciesState u0 = perturbed_constant(g, 2, 0.5);
    const double tau = 1.0 / 32.0;
    const KValue k = exact_k_p2((model.pressure_lower + model.pressure_upper) / 2.0);
    const EstimateReport rep =
        verify_discrete_duality(g, model, tau, 32, u0, 2.0, k);
    CHECK(rep.id == "duality");
    CHECK(rep.constant_c == doctest::Approx(model.mass_constant));

    const InequalityRecord& dual = record(rep, "duality");
    CHECK(dual.certified);
    CHECK(dual.pass);
    CHECK(dual.lhs > 0.0);
    CHECK(dual.lhs <= dual.rhs);

    const InequalityRecord& band = record(rep, "coefficient_band");
    CHECK(band.pass);
    CHECK(band.lhs <= band.rhs);  // max band violation vs rounding slack

    const InequalityRecord& vrec = record(rep, "v_transform");
    CHECK(vrec.pass);

    CHECK(rep.certified_pass());
    CHECK(rep.all_pass());
}

TEST_CASE("duality rhs grows with the constant estimate") {
    const Grid g = build_grid(1, 16, 1.0);
    const ModelSpec model = builtin_model("bounded_quadratic");
    const SpeciesState u0 = perturbed_constant(g, 2, 0.5);
    const double tau = 1.0 / 16.0;
    const EstimateReport small = verify_discrete_duality(
        g, model, tau, 8, u0, 2.0, exact_k_p2(1.75));
    const EstimateReport large = verify_discrete_duality(
        g, model, tau, 8, u0, 2.0, KValue{0.62, "user"});
    const double lhs_s = record(small, "duality").lhs;
    const double lhs_l = record(large, "duality").lhs;
    CHECK(lhs_s == doctest::Approx(lhs_l).epsilon(1e-12));  // same trajectory
    CHECK(record(large, "duality").rhs > record(small, "duality").rhs);
    CHECK_FALSE(record(large, "duality").certified);  // user-supplied constant
}

TEST_CASE("duality estimate holds away from p = 2") {
    const Grid g = build_grid(1, 24, 1.0);
    const ModelSpec model = builtin_model("bounded_quadratic");
    const SpeciesState u0 = perturbed_constant(g, 2, 0.4);
    const double tau = 1.0 / 24.0;
    const double mid = (model.pressure_lower + model.pressure_upper) / 2.0;
    const KValue k = estimate_K(g, mid, 2.4, tau, 12, "power", 16, 7).k_value();
    const EstimateReport rep =
        verify_discrete_duality(g, model, tau, 12, u0, 2.4, k);
    const InequalityRecord& dual = record(rep, "duality");
    CHECK(dual.pass);
    CHECK_FALSE(dual.certified);
    CHECK(dual.k_method == "power");
    // Nothing is certified away from p = 2 (certified_pass is then vacuous).
    for (const InequalityRecord& r : rep.records) CHECK_FALSE(r.certified);
    CHECK(rep.certified_pass());
}

TEST_CASE("duality preconditions") {
    const Grid g = build_grid(1, 8, 1.0);
    const SpeciesState u0(2, Field(8, 0.5));
    const KValue k = exact_k_p2(1.0);
    // Unbounded pressures are outside the estimate's scope.
    CHECK_THROWS_AS(verify_discrete_duality(g, builtin_model("skt"), 0.01, 4,
                                            u0, 2.0, k),
                    std::invalid_argument);
    const ModelSpec model = builtin_model("bounded_quadratic");
    CHECK_THROWS_AS(verify_discrete_duality(g, model, 0.6, 4, u0, 2.0, k),
                    std::invalid_argument);  // tau C_R > 1/2
    CHECK_THROWS_AS(verify_discrete_duality(g, model, 0.01, 4, u0, 1.0, k),
                    std::invalid_argument);  // p must exceed 1
    // Oscillation condition violated: K too large for the band width.
    CHECK_THROWS_AS(verify_discrete_duality(g, model, 0.01, 4, u0, 2.0,
                                            KValue{2.0, "user"}),
                    std::invalid_argument);
}

TEST_CASE("admissible exponent scan on the band [1, 2]") {
    const Grid g = build_grid(1, 24, 1.0);
    const AdmissiblePResult res =
        find_admissible_p(g, 1.0, 2.0, 1.0 / 24.0, 12, 3.0, 5, 11);
    REQUIRE(res.table.size() == 5);
    CHECK(res.coeff_lower == 1.0);
    CHECK(res.coeff_upper == 2.0);
    CHECK(res.table.front().p == doctest::Approx(2.0));
    CHECK(res.table.back().p == doctest::Approx(3.0));
    // K_{3/2,2} = 2/3 exactly, so the p = 2 row sits at oscillation 1/3.
    CHECK(res.table.front().k_hat <= 2.0 / 3.0 + 1e-9);
    CHECK(res.table.front().oscillation_times_k <= 1.0 / 3.0 + 1e-6);
    CHECK(res.table.front().admissible);
    CHECK(res.p_star >= 2.0);
    for (const AdmissibleRow& row : res.table)
        if (row.admissible) CHECK(row.p <= res.p_star);
    CHECK_THROWS_AS(find_admissible_p(g, 1.0, 2.0, 1.0 / 24.0, 12, 1.5, 5, 1),
                    std::invalid_argument);  // p_max below 2
}

TEST_CASE("growth verdicts separate the bounded models") {
    const Grid g = build_grid(1, 16, 1.0);
    const AdmissiblePResult adm =
        find_admissible_p(g, 1.0, 2.0, 1.0 / 16.0, 8, 2.5, 3, 5);
    REQUIRE(adm.p_star >= 2.0);

    const VerdictReport good =
        growth_vs_estimate(builtin_model("bounded_quadratic"), adm, 4000, 3);
    CHECK(good.applicable);
    CHECK(good.p_star == adm.p_star);
    CHECK(good.growth_decreasing);
    CHECK(good.positive);

    // At p = 2 the u^2 log(1+u) loss is supercritical; scan only p = 2.
    const AdmissiblePResult adm2 =
        find_admissible_p(g, 1.0, 2.0, 1.0 / 16.0, 8, 2.0, 1, 5);
    REQUIRE(adm2.p_star == 2.0);
    const VerdictReport super = growth_vs_estimate(
        builtin_model("bounded_superquadratic"), adm2, 4000, 3);
    CHECK(super.applicable);
    CHECK_FALSE(super.growth_decreasing);
    CHECK_FALSE(super.positive);

    const VerdictReport unbounded =
        growth_vs_estimate(builtin_model("skt"), adm, 4000, 3);
    CHECK_FALSE(unbounded.applicable);
    CHECK_FALSE(unbounded.positive);

    AdmissiblePResult none = adm;
    none.p_star = 0.0;
    const VerdictReport stuck =
        growth_vs_estimate(builtin_model("bounded_quadratic"), none, 4000, 3);
    CHECK_FALSE(stuck.positive);
}
