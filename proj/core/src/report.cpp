#include "crossdiff/report.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

namespace crossdiff {

namespace {

using json = nlohmann::ordered_json;

std::string csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json to_node(const GridSummary& g) {
    return json{{"dim", g.dim}, {"n", g.n}, {"length", g.length}};
}

json to_node(const InequalityRecord& r) {
    return json{{"id", r.id},           {"p", r.p},
                {"lhs", r.lhs},         {"rhs", r.rhs},
                {"margin", r.margin},   {"pass", r.pass},
                {"certified", r.certified}, {"k_hat", r.k_hat},
                {"k_method", r.k_method}};
}

json to_node(const HypothesisRecord& r) {
    json node{{"hypothesis", r.hypothesis}, {"pass", r.pass},
              {"skipped", r.skipped},       {"margin", r.margin},
              {"witness", r.witness}};
    if (!r.note.empty()) node["note"] = r.note;
    return node;
}

json to_node(const GrowthReport& r) {
    json shells = json::array();
    for (const GrowthShell& s : r.shells)
        shells.push_back(json{{"radius", s.radius}, {"max_ratio", s.max_ratio}});
    return json{{"model", r.model},
                {"p", r.p},
                {"shells", shells},
                {"decreasing", r.decreasing}};
}

}  // namespace

bool EstimateReport::certified_pass() const {
    return std::all_of(records.begin(), records.end(),
                       [](const InequalityRecord& r) {
                           return !r.certified || r.pass;
                       });
}

bool EstimateReport::all_pass() const {
    return std::all_of(records.begin(), records.end(),
                       [](const InequalityRecord& r) { return r.pass; });
}

bool StructureReport::all_pass() const {
    return std::all_of(records.begin(), records.end(),
                       [](const HypothesisRecord& r) { return r.pass; });
}

bool MonitorReport::all_pass() const {
    return nonneg_pass && residual_pass && mass_pass && entropy_pass;
}

bool RefinementReport::differences_decreasing() const {
    for (std::size_t i = 2; i < rows.size(); ++i)
        if (rows[i].rel_diff > rows[i - 1].rel_diff * (1.0 + 1e-12))
            return false;
    return rows.size() >= 2;
}

double RefinementReport::final_rel_diff() const {
    return rows.empty() ? 0.0 : rows.back().rel_diff;
}

std::string to_json(const EstimateReport& r) {
    json records = json::array();
    for (const InequalityRecord& rec : r.records) records.push_back(to_node(rec));
    return json{{"id", r.id},
                {"grid", to_node(r.grid)},
                {"tau", r.tau},
                {"steps", r.steps},
                {"coeff_lower", r.coeff_lower},
                {"coeff_upper", r.coeff_upper},
                {"constant_c", r.constant_c},
                {"trials", r.trials},
                {"certified_pass", r.certified_pass()},
                {"all_pass", r.all_pass()},
                {"records", records}}
        .dump(2);
}

std::string to_json(const RegularityEstimate& r) {
    json log = json::array();
    for (const TrialRecord& t : r.trial_log)
        log.push_back(json{{"index", t.index},
                           {"detail", t.detail},
                           {"ratio", t.ratio}});
    return json{{"grid", to_node(r.grid)},
                {"coeff_lower", r.coeff_lower},
                {"coeff_upper", r.coeff_upper},
                {"p", r.p},
                {"tau", r.tau},
                {"steps", r.steps},
                {"method", r.method},
                {"trials", r.trials},
                {"k_hat", r.k_hat},
                {"trial_log", log}}
        .dump(2);
}

std::string to_json(const StructureReport& r) {
    json records = json::array();
    for (const HypothesisRecord& rec : r.records) records.push_back(to_node(rec));
    return json{{"model", r.model},
                {"samples", r.samples},
                {"box", r.box},
                {"all_pass", r.all_pass()},
                {"records", records}}
        .dump(2);
}

std::string to_json(const GrowthReport& r) { return to_node(r).dump(2); }

std::string to_json(const MonitorReport& r) {
    return json{{"tau", r.tau},
                {"steps", r.steps},
                {"mass_constant", r.mass_constant},
                {"entropy_constant", r.entropy_constant},
                {"nonneg_pass", r.nonneg_pass},
                {"residual_pass", r.residual_pass},
                {"mass_pass", r.mass_pass},
                {"entropy_pass", r.entropy_pass},
                {"entropy_checked", r.entropy_checked},
                {"all_pass", r.all_pass()},
                {"min_state_value", r.min_state_value},
                {"max_residual", r.max_residual},
                {"worst_mass_margin", r.worst_mass_margin},
                {"worst_mass_step", r.worst_mass_step},
                {"worst_entropy_margin", r.worst_entropy_margin},
                {"worst_entropy_step", r.worst_entropy_step},
                {"min_dissipation", r.min_dissipation},
                {"duality_total", r.duality_total},
                {"mass_margin", r.mass_margin},
                {"entropy_margin", r.entropy_margin}}
        .dump(2);
}

std::string to_json(const RefinementReport& r) {
    json rows = json::array();
    for (const RefinementRow& row : r.rows)
        rows.push_back(json{{"tau", row.tau},
                            {"steps", row.steps},
                            {"norm", row.norm},
                            {"rel_diff", row.rel_diff}});
    return json{{"p", r.p},
                {"horizon", r.horizon},
                {"differences_decreasing", r.differences_decreasing()},
                {"final_rel_diff", r.final_rel_diff()},
                {"rows", rows}}
        .dump(2);
}

std::string to_json(const AdmissiblePResult& r) {
    json table = json::array();
    for (const AdmissibleRow& row : r.table)
        table.push_back(json{{"p", row.p},
                             {"k_hat", row.k_hat},
                             {"oscillation_times_k", row.oscillation_times_k},
                             {"admissible", row.admissible}});
    return json{{"coeff_lower", r.coeff_lower},
                {"coeff_upper", r.coeff_upper},
                {"p_star", r.p_star},
                {"table", table}}
        .dump(2);
}

std::string to_json(const VerdictReport& r) {
    return json{{"model", r.model},
                {"applicable", r.applicable},
                {"p_star", r.p_star},
                {"growth_decreasing", r.growth_decreasing},
                {"positive", r.positive},
                {"growth", to_node(r.growth)}}
        .dump(2);
}

std::string trials_csv(const RegularityEstimate& r) {
    std::string out = "index,detail,ratio\n";
    for (const TrialRecord& t : r.trial_log) {
        out += std::to_string(t.index);
        out += ',';
        out += t.detail;
        out += ',';
        out += csv_number(t.ratio);
        out += '\n';
    }
    return out;
}

std::string admissible_csv(const AdmissiblePResult& r) {
    std::string out = "p,k_hat,oscillation_times_k,admissible\n";
    for (const AdmissibleRow& row : r.table) {
        out += csv_number(row.p);
        out += ',';
        out += csv_number(row.k_hat);
        out += ',';
        out += csv_number(row.oscillation_times_k);
        out += ',';
        out += row.admissible ? "1" : "0";
        out += '\n';
    }
    return out;
}

std::string refinement_csv(const RefinementReport& r) {
    std::string out = "tau,steps,norm,rel_diff\n";
    for (const RefinementRow& row : r.rows) {
        out += csv_number(row.tau);
        out += ',';
        out += std::to_string(row.steps);
        out += ',';
        out += csv_number(row.norm);
        out += ',';
        out += csv_number(row.rel_diff);
        out += '\n';
    }
    return out;
}

std::string field_csv(const Field& f) {
    std::string out = "node_index,value\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += csv_number(f[i]);
        out += '\n';
    }
    return out;
}

std::string field_json(const Field& f) {
    return nlohmann::ordered_json(f).dump(2);
}

}  // namespace crossdiff
