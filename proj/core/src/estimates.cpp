#include "crossdiff/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crossdiff/dual.hpp"

namespace crossdiff {

ConditionCheck condition_check(double lower, double upper, const KValue& k) {
    if (!(lower > 0.0) || !(upper >= lower))
        throw std::invalid_argument("condition_check: need 0 < lower <= upper");
    if (!(k.value > 0.0))
        throw std::invalid_argument("condition_check: need a positive K");
    ConditionCheck c;
    c.oscillation = 0.5 * (upper - lower) * k.value;
    c.admissible = c.oscillation < 1.0;
    return c;
}

EstimateReport verify_discrete_duality(const Grid& grid, const ModelSpec& model,
                                       double tau, int steps,
                                       const SpeciesState& initial, double p,
                                       const KValue& k_half_sum,
                                       const StepOptions& options) {
    if (!(p > 1.0))
        throw std::invalid_argument("verify_discrete_duality: need p > 1");
    if (!model.bounded())
        throw std::invalid_argument(
            "verify_discrete_duality: model must have bounded pressures");
    const double a = model.pressure_lower;
    const double b = model.pressure_upper;
    const double c = model.mass_constant;
    if (!(tau * c <= 0.5))
        throw std::invalid_argument(
            "verify_discrete_duality: need tau * C_R <= 1/2");
    const double dbar = bar_D(a, b, p, k_half_sum.value);
    const double pc = p / (p - 1.0);

    const Trajectory traj =
        run_rothe(grid, model, tau, steps, initial, options);

    const std::size_t nc = grid.node_count();
    const int s = model.species;

    // Total density u^k and the mixing ratio sum p_i u_i / sum u_i.
    std::vector<Field> total(steps, Field(nc));
    double band_violation = 0.0;
    for (int k = 1; k <= steps; ++k) {
        const SpeciesState& st = traj.states[k];
        for (std::size_t j = 0; j < nc; ++j) {
            Point u(s);
            double sum = 0.0, flux = 0.0;
            for (int i = 0; i < s; ++i) {
                u[i] = std::max(st[i][j], 0.0);
                sum += u[i];
            }
            total[k - 1][j] = sum;
            if (sum > 0.0) {
                for (int i = 0; i < s; ++i)
                    flux += model.pressure(i, u) * u[i];
                const double ratio = flux / sum;
                band_violation = std::max(
                    band_violation,
                    std::max(a - ratio, ratio - b));
            }
        }
    }

    const double lhs = space_time_lp_norm(grid, total, tau, pc);

    Field total0(nc);
    for (std::size_t j = 0; j < nc; ++j) {
        double sum = 0.0;
        for (int i = 0; i < s; ++i) sum += std::max(traj.states[0][i][j], 0.0);
        total0[j] = sum;
    }
    const double u0_norm = lp_norm(grid, total0, pc);
    const double horizon = steps * tau;
    const double damping = 1.0 - c * tau;
    const double rhs = std::pow(damping, -steps) *
                       (u0_norm + c * horizon * std::pow(grid.volume(), 1.0 / pc)) *
                       (1.0 + dbar / damping) * std::pow(horizon, 1.0 / pc);

    EstimateReport report;
    report.id = "duality";
    report.grid = {grid.dim, grid.n, grid.length};
    report.tau = tau;
    report.steps = steps;
    report.coeff_lower = a;
    report.coeff_upper = b;
    report.constant_c = c;

    {
        InequalityRecord rec;
        rec.id = "duality";
        rec.p = p;
        rec.lhs = lhs;
        rec.rhs = rhs;
        rec.margin = rhs - lhs;
        rec.pass = lhs <= rhs * (1.0 + 1e-9) + 1e-300;
        rec.certified = p == 2.0 && k_half_sum.certified();
        rec.k_hat = k_half_sum.value;
        rec.k_method = k_half_sum.method;
        report.records.push_back(rec);
    }
    {
        InequalityRecord rec;
        rec.id = "coefficient_band";
        rec.p = p;
        rec.lhs = band_violation;
        rec.rhs = 1e-12 * std::max(1.0, b);
        rec.margin = rec.rhs - rec.lhs;
        rec.pass = rec.lhs <= rec.rhs;
        rec.certified = false;
        rec.k_hat = k_half_sum.value;
        rec.k_method = k_half_sum.method;
        report.records.push_back(rec);
    }
    {
        // Recompute the left-hand side through v^k = (1 - C tau)^k u^k; the
        // two accumulations must agree to rounding.
        std::vector<Field> v(steps, Field(nc));
        for (int k = 1; k <= steps; ++k) {
            const double factor = std::pow(damping, k);
            for (std::size_t j = 0; j < nc; ++j)
                v[k - 1][j] = factor * total[k - 1][j];
        }
        double acc = 0.0;
        for (int k = 1; k <= steps; ++k) {
            const double n = lp_norm(grid, v[k - 1], pc);
            acc += tau * std::pow(n / std::pow(damping, k), pc);
        }
        const double via_v = std::pow(acc, 1.0 / pc);
        InequalityRecord rec;
        rec.id = "v_transform";
        rec.p = p;
        rec.lhs = std::abs(via_v - lhs);
        rec.rhs = 1e-12 * std::max(1.0, lhs);
        rec.margin = rec.rhs - rec.lhs;
        rec.pass = rec.lhs <= rec.rhs;
        rec.certified = false;
        rec.k_hat = k_half_sum.value;
        rec.k_method = k_half_sum.method;
        report.records.push_back(rec);
    }
    return report;
}

AdmissiblePResult find_admissible_p(const Grid& grid, double lower,
                                    double upper, double tau, int steps,
                                    double p_max, int p_steps,
                                    std::uint64_t seed) {
    if (!(lower > 0.0) || !(upper >= lower))
        throw std::invalid_argument("find_admissible_p: need 0 < lower <= upper");
    if (!(p_max >= 2.0))
        throw std::invalid_argument("find_admissible_p: need p_max >= 2");
    if (p_steps < 1)
        throw std::invalid_argument("find_admissible_p: need p_steps >= 1");

    const double mid = 0.5 * (lower + upper);
    AdmissiblePResult result;
    result.coeff_lower = lower;
    result.coeff_upper = upper;
    result.p_star = 0.0;
    for (int j = 0; j < p_steps; ++j) {
        const double p = p_steps == 1
                             ? 2.0
                             : 2.0 + j * (p_max - 2.0) / (p_steps - 1);
        const RegularityEstimate est =
            estimate_K(grid, mid, p, tau, steps, "power", 20, seed);
        AdmissibleRow row;
        row.p = p;
        row.k_hat = est.k_hat;
        row.oscillation_times_k = 0.5 * (upper - lower) * est.k_hat;
        row.admissible = row.oscillation_times_k < 1.0;
        if (row.admissible) result.p_star = std::max(result.p_star, p);
        result.table.push_back(row);
    }
    return result;
}

VerdictReport growth_vs_estimate(const ModelSpec& model,
                                 const AdmissiblePResult& admissible,
                                 int samples, std::uint64_t seed) {
    VerdictReport verdict;
    verdict.model = model.name;
    verdict.applicable = model.bounded();
    verdict.p_star = admissible.p_star;
    if (verdict.p_star > 0.0) {
        verdict.growth =
            check_reaction_growth(model, verdict.p_star, samples, seed);
        verdict.growth_decreasing = verdict.growth.decreasing;
    }
    verdict.positive = verdict.applicable && verdict.growth_decreasing;
    return verdict;
}

}  // namespace crossdiff
