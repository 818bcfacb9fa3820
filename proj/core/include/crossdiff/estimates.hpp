#pragma once

#include <cstdint>

#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/report.hpp"
#include "crossdiff/rothe.hpp"

namespace crossdiff {

/// Oscillation condition (b - a)/2 * K < 1 gating every perturbed estimate.
struct ConditionCheck {
    double oscillation = 0.0;
    bool admissible = false;
};

ConditionCheck condition_check(double lower, double upper, const KValue& k);

/// Run a Rothe trajectory for a bounded-pressure model and verify the
/// duality estimate on u = sum_i u_i: with C the reaction mass constant,
/// a <= sum_i p_i u_i / sum_i u_i <= b, and bar_D built from K_{(a+b)/2,p},
///
///   (sum_{k=1}^N tau ||u^k||_{p'}^{p'})^{1/p'}
///     <= (1 - C tau)^{-N} (||u^0||_{p'} + C N tau |Omega|^{1/p'})
///        (1 + bar_D / (1 - C tau)) (N tau)^{1/p'}.
///
/// Records:
///   duality           the estimate itself; certified when p = 2 and the
///                     constant is exact
///   coefficient_band  sampled check that the mixing ratio stays in [a, b]
///   v_transform       consistency of the damped substitution
///                     v^k = (1 - C tau)^k u^k used in the proof
/// Requires bounded pressures, tau C <= 1/2 and the oscillation condition.
EstimateReport verify_discrete_duality(const Grid& grid, const ModelSpec& model,
                                       double tau, int steps,
                                       const SpeciesState& initial, double p,
                                       const KValue& k_half_sum,
                                       const StepOptions& options = {});

/// Scan exponents p in [2, p_max] (p_steps points), estimate K_{(a+b)/2,p}
/// with the power method and report for each p whether the oscillation
/// condition holds.  p_star is the largest admissible exponent found.
AdmissiblePResult find_admissible_p(const Grid& grid, double lower,
                                    double upper, double tau, int steps,
                                    double p_max, int p_steps,
                                    std::uint64_t seed = 1);

/// Combine the admissible-exponent scan with the reaction growth probe:
/// the verdict is positive when the pressures are bounded and the sampled
/// growth ratio |R(u)| / (1 + |u|^{p_star}) decays on large shells.
VerdictReport growth_vs_estimate(const ModelSpec& model,
                                 const AdmissiblePResult& admissible,
                                 int samples = 10000, std::uint64_t seed = 1);

}  // namespace crossdiff
