#pragma once

#include <string>
#include <vector>

#include "crossdiff/grid.hpp"

namespace crossdiff {

struct GridSummary {
    int dim = 1;
    int n = 2;
    double length = 1.0;
};

/// Estimated (or exact) regularity constant together with its provenance.
/// method is one of "exact_p2", "eigenmode", "random", "power",
/// "dense_oracle".  Only exact_p2 values may back hard assertions.
struct KValue {
    double value = 0.0;
    std::string method;

    bool certified() const { return method == "exact_p2"; }
};

/// One verified inequality: lhs <= rhs up to the stated slack.  certified
/// records use an exactly known constant and participate in exit codes;
/// the rest are informational and carry their K provenance.
struct InequalityRecord {
    std::string id;
    double p = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs - lhs
    bool pass = false;
    bool certified = false;
    double k_hat = 0.0;
    std::string k_method;
};

struct EstimateReport {
    std::string id;  // perturbation | interpolation | duality
    GridSummary grid;
    double tau = 0.0;
    int steps = 0;
    double coeff_lower = 0.0;
    double coeff_upper = 0.0;
    double constant_c = 0.0;  // reaction mass constant, duality suite only
    int trials = 1;
    std::vector<InequalityRecord> records;

    bool certified_pass() const;
    bool all_pass() const;
};

/// Result of one lower-bound trial inside estimate_K (one forcing, or one
/// eigenmode sweep entry).
struct TrialRecord {
    int index = 0;
    std::string detail;
    double ratio = 0.0;
};

struct RegularityEstimate {
    GridSummary grid;
    double coeff_lower = 0.0;  // equal bounds mean a constant coefficient m
    double coeff_upper = 0.0;
    double p = 2.0;
    double tau = 0.0;
    int steps = 0;
    std::string method;
    int trials = 0;
    double k_hat = 0.0;
    std::vector<TrialRecord> trial_log;

    KValue k_value() const { return {k_hat, method}; }
};

struct HypothesisRecord {
    std::string hypothesis;
    bool pass = false;
    bool skipped = false;
    double margin = 0.0;
    std::vector<double> witness;
    std::string note;
};

struct StructureReport {
    std::string model;
    int samples = 0;
    double box = 0.0;
    std::vector<HypothesisRecord> records;

    bool all_pass() const;
};

struct GrowthShell {
    double radius = 0.0;
    double max_ratio = 0.0;
};

struct GrowthReport {
    std::string model;
    double p = 0.0;
    std::vector<GrowthShell> shells;
    bool decreasing = false;
};

/// Per-step monitor margins for one Rothe trajectory.
struct MonitorReport {
    double tau = 0.0;
    int steps = 0;
    double mass_constant = 0.0;
    double entropy_constant = 0.0;
    bool nonneg_pass = true;
    bool residual_pass = true;
    bool mass_pass = true;
    bool entropy_pass = true;
    bool entropy_checked = true;
    double min_state_value = 0.0;
    double max_residual = 0.0;
    double worst_mass_margin = 0.0;
    int worst_mass_step = 0;
    double worst_entropy_margin = 0.0;
    int worst_entropy_step = 0;
    double min_dissipation = 0.0;
    double duality_total = 0.0;
    std::vector<double> mass_margin;     // index k-1, k = 1..N
    std::vector<double> entropy_margin;  // index k-1, k = 1..N

    bool all_pass() const;
};

struct RefinementRow {
    double tau = 0.0;
    int steps = 0;
    double norm = 0.0;
    double rel_diff = 0.0;  // |norm - previous| / norm, 0 for the first row
};

struct RefinementReport {
    double p = 2.0;
    double horizon = 0.0;
    std::vector<RefinementRow> rows;

    bool differences_decreasing() const;
    double final_rel_diff() const;
};

struct AdmissibleRow {
    double p = 0.0;
    double k_hat = 0.0;
    double oscillation_times_k = 0.0;  // (b - a)/2 * K_hat
    bool admissible = false;
};

struct AdmissiblePResult {
    double coeff_lower = 0.0;
    double coeff_upper = 0.0;
    double p_star = 2.0;
    std::vector<AdmissibleRow> table;
};

struct VerdictReport {
    std::string model;
    bool applicable = false;  // bounded pressures
    double p_star = 0.0;
    bool growth_decreasing = false;
    bool positive = false;  // applicable && growth decays at p_star
    GrowthReport growth;
};

// JSON serialisation (deterministic key order and number formatting).
std::string to_json(const EstimateReport& r);
std::string to_json(const RegularityEstimate& r);
std::string to_json(const StructureReport& r);
std::string to_json(const GrowthReport& r);
std::string to_json(const MonitorReport& r);
std::string to_json(const RefinementReport& r);
std::string to_json(const AdmissiblePResult& r);
std::string to_json(const VerdictReport& r);

// CSV serialisation for sweep plots.
std::string trials_csv(const RegularityEstimate& r);
std::string admissible_csv(const AdmissiblePResult& r);
std::string refinement_csv(const RefinementReport& r);
std::string field_csv(const Field& f);
std::string field_json(const Field& f);

}  // namespace crossdiff
