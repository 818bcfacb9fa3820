// crossdiff: implicit cross-diffusion solver and estimate verifier.
//
// Subcommands:
//   simulate    run the implicit scheme, record and check the monitors
//   estimate-k  lower-bound the maximal regularity constant K_{m,p}
//   verify      check one estimate suite (perturbation, interpolation,
//               duality, structure, verdict)
//   sweep       refinement study over a list of step sizes, or an
//               admissible-exponent table
//
// Exit codes: 0 pass, 1 certified estimate violated, 2 configuration error,
// 3 solver failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crossdiff/dual.hpp"
#include "crossdiff/estimates.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/report.hpp"
#include "crossdiff/rothe.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace crossdiff;

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- output helpers -------------------------------------------------------

// All writes go through a temp file plus rename so readers never observe a
// partially written artifact.
void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct OutputSet {
    fs::path dir;
    bool json_on = true;
    bool csv_on = true;
    bool gnuplot_on = false;
};

OutputSet parse_outputs(const std::string& out_dir,
                        const std::string& formats) {
    OutputSet o;
    o.dir = out_dir;
    o.json_on = o.csv_on = o.gnuplot_on = false;
    std::stringstream ss(formats);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "json")
            o.json_on = true;
        else if (item == "csv")
            o.csv_on = true;
        else if (item == "gnuplot")
            o.gnuplot_on = true;
        else if (!item.empty())
            throw ConfigError("unknown output format '" + item + "'");
    }
    if (!o.json_on && !o.csv_on && !o.gnuplot_on)
        throw ConfigError("no output formats selected");
    return o;
}

// CSV text -> gnuplot .dat (comment header, space separated).
std::string csv_to_dat(const std::string& csv) {
    std::string out;
    bool first = true;
    std::stringstream ss(csv);
    std::string line;
    while (std::getline(ss, line)) {
        std::string converted = line;
        for (char& c : converted)
            if (c == ',') c = ' ';
        if (first) {
            out += "# " + converted + "\n";
            first = false;
        } else {
            out += converted + "\n";
        }
    }
    return out;
}

std::string gnuplot_script(const std::string& dat, const std::string& title,
                           int x_col, int y_col, const std::string& xlabel,
                           const std::string& ylabel, bool logx, bool logy) {
    std::string s;
    s += "set terminal pngcairo size 900,600\n";
    s += "set output '" + title + ".png'\n";
    s += "set xlabel '" + xlabel + "'\n";
    s += "set ylabel '" + ylabel + "'\n";
    if (logx) s += "set logscale x\n";
    if (logy) s += "set logscale y\n";
    s += "set grid\n";
    s += "plot '" + dat + "' using " + std::to_string(x_col) + ":" +
         std::to_string(y_col) + " with linespoints title '" + title + "'\n";
    return s;
}

// ---- option plumbing ------------------------------------------------------

struct CommonOptions {
    std::string model = "scalar_heat";
    double m = 1.0;
    double d1 = 1.0;
    double d2 = 1.0;
    double alpha = 0.75;
    double beta = 0.75;
    std::vector<std::string> params;  // extra key=value model parameters
    int dim = 1;
    int n = 64;
    double length = 1.0;
    double tau = 1.0 / 64.0;
    int steps = 64;
    double horizon = 0.0;  // if > 0, steps = horizon / tau
    std::string u0 = "constant:0.5,0.5";
    std::string out_dir = "out";
    std::string formats = "json,csv";
    std::string step_scheme = "picard";
    double step_tol = 1e-10;
    bool save_states = false;
};

std::map<std::string, double> model_params(const CommonOptions& c) {
    std::map<std::string, double> params;
    if (c.model == "scalar_heat") params["m"] = c.m;
    if (c.model == "skt_concave") {
        params["d1"] = c.d1;
        params["d2"] = c.d2;
        params["alpha"] = c.alpha;
        params["beta"] = c.beta;
    }
    if (c.model == "bounded_quadratic" || c.model == "bounded_superquadratic") {
        params["d1"] = c.d1;
        params["d2"] = c.d2;
    }
    for (const std::string& kv : c.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--param expects key=value, got '" + kv + "'");
        try {
            params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad numeric value in --param '" + kv + "'");
        }
    }
    return params;
}

int resolve_steps(const CommonOptions& c) {
    if (c.horizon > 0.0) {
        const double real = c.horizon / c.tau;
        const int steps = static_cast<int>(std::llround(real));
        if (steps < 1 || std::abs(steps * c.tau - c.horizon) > 1e-9 * c.horizon)
            throw ConfigError("-T must be a whole number of steps of tau");
        return steps;
    }
    return c.steps;
}

SpeciesState build_initial(const Grid& grid, int species,
                           const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest =
        colon == std::string::npos ? std::string() : spec.substr(colon + 1);
    const std::size_t nc = grid.node_count();

    auto parse_list = [&](const std::string& s) {
        std::vector<double> vals;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ','))
            try {
                vals.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("bad number in --u0 '" + s + "'");
            }
        return vals;
    };

    if (kind == "constant") {
        std::vector<double> vals = parse_list(rest);
        if (vals.empty()) throw ConfigError("--u0 constant: needs values");
        if (static_cast<int>(vals.size()) == 1)
            vals.assign(species, vals[0]);
        if (static_cast<int>(vals.size()) != species)
            throw ConfigError("--u0 constant: expected " +
                              std::to_string(species) + " values");
        SpeciesState state(species, Field(nc));
        for (int i = 0; i < species; ++i) {
            if (vals[i] < 0.0)
                throw ConfigError("--u0 values must be nonnegative");
            state[i].assign(nc, vals[i]);
        }
        return state;
    }

    if (kind == "gaussian") {
        const std::vector<double> vals = parse_list(rest);
        if (vals.size() != 3)
            throw ConfigError("--u0 gaussian: expects base,amplitude,width");
        const double base = vals[0], amp = vals[1], width = vals[2];
        if (base < 0.0 || base + std::min(amp, 0.0) < 0.0 || width <= 0.0)
            throw ConfigError("--u0 gaussian: profile must stay nonnegative");
        SpeciesState state(species, Field(nc));
        const double c = grid.length / 2.0;
        for (std::size_t j = 0; j < nc; ++j) {
            double r2 = 0.0;
            if (grid.dim == 1) {
                const double x = (j + 0.5) * grid.h - c;
                r2 = x * x;
            } else {
                const std::size_t ix = j % grid.n, iy = j / grid.n;
                const double x = (ix + 0.5) * grid.h - c;
                const double y = (iy + 0.5) * grid.h - c;
                r2 = x * x + y * y;
            }
            const double v = base + amp * std::exp(-r2 / (2.0 * width * width));
            for (int i = 0; i < species; ++i) state[i][j] = v;
        }
        return state;
    }

    if (kind == "file") {
        std::ifstream in(rest);
        if (!in) throw ConfigError("--u0 file: cannot open " + rest);
        json data;
        try {
            in >> data;
        } catch (const std::exception& e) {
            throw ConfigError(std::string("--u0 file: bad JSON: ") + e.what());
        }
        if (!data.is_array() || static_cast<int>(data.size()) != species)
            throw ConfigError("--u0 file: expected " +
                              std::to_string(species) + " arrays");
        SpeciesState state(species, Field(nc));
        for (int i = 0; i < species; ++i) {
            if (!data[i].is_array() || data[i].size() != nc)
                throw ConfigError("--u0 file: species " + std::to_string(i) +
                                  " needs " + std::to_string(nc) + " values");
            for (std::size_t j = 0; j < nc; ++j) {
                state[i][j] = data[i][j].get<double>();
                if (state[i][j] < 0.0)
                    throw ConfigError("--u0 file: values must be nonnegative");
            }
        }
        return state;
    }

    throw ConfigError("--u0 must be constant:..., gaussian:... or file:...");
}

json config_echo(const CommonOptions& c, int steps) {
    json cfg;
    cfg["model"] = c.model;
    cfg["dim"] = c.dim;
    cfg["n"] = c.n;
    cfg["length"] = c.length;
    cfg["tau"] = c.tau;
    cfg["steps"] = steps;
    cfg["u0"] = c.u0;
    cfg["step_scheme"] = c.step_scheme;
    cfg["step_tol"] = c.step_tol;
    json params;
    for (const auto& [k, v] : model_params(c)) params[k] = v;
    cfg["params"] = params;
    return cfg;
}

void write_manifest(const OutputSet& out, const std::string& command,
                    const json& config, double wall_seconds) {
    json manifest;
    manifest["version"] = kVersion;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["wall_clock_seconds"] = wall_seconds;
    write_file(out.dir / "manifest.json", manifest.dump(2) + "\n");
}

// Apply values from a JSON config file on top of parsed flags; the file is
// authoritative for every key it mentions.
void apply_config_file(const std::string& path, CommonOptions& c) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json cfg;
    try {
        in >> cfg;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    auto get = [&](const char* key, auto& slot) {
        if (cfg.contains(key))
            slot = cfg[key].get<std::decay_t<decltype(slot)>>();
    };
    get("model", c.model);
    get("m", c.m);
    get("d1", c.d1);
    get("d2", c.d2);
    get("alpha", c.alpha);
    get("beta", c.beta);
    get("dim", c.dim);
    get("n", c.n);
    get("length", c.length);
    get("tau", c.tau);
    get("steps", c.steps);
    get("T", c.horizon);
    get("u0", c.u0);
    get("out", c.out_dir);
    get("formats", c.formats);
    get("step_scheme", c.step_scheme);
    get("step_tol", c.step_tol);
    get("save_states", c.save_states);
    if (cfg.contains("params")) {
        for (const auto& [k, v] : cfg["params"].items())
            c.params.push_back(k + "=" + number(v.get<double>()));
    }
}

void add_common_flags(CLI::App* cmd, CommonOptions& c, std::string& config_path) {
    cmd->add_option("--model", c.model,
                    "built-in model (scalar_heat, skt, skt_concave, "
                    "bounded_quadratic, bounded_superquadratic)");
    cmd->add_option("--m", c.m, "scalar_heat pressure constant");
    cmd->add_option("--d1", c.d1, "first diffusion offset");
    cmd->add_option("--d2", c.d2, "second diffusion offset");
    cmd->add_option("--alpha", c.alpha, "skt_concave exponent alpha");
    cmd->add_option("--beta", c.beta, "skt_concave exponent beta");
    cmd->add_option("--param", c.params, "extra model parameter key=value");
    cmd->add_option("--dim", c.dim, "space dimension (1 or 2)");
    cmd->add_option("--n", c.n, "nodes per axis");
    cmd->add_option("--length", c.length, "domain edge length");
    cmd->add_option("--tau", c.tau, "time step");
    cmd->add_option("--steps", c.steps, "number of steps");
    cmd->add_option("-T,--horizon", c.horizon,
                    "time horizon (overrides --steps)");
    cmd->add_option("--u0", c.u0,
                    "initial data: constant:v1[,v2], gaussian:base,amp,width "
                    "or file:path");
    cmd->add_option("--out", c.out_dir, "output directory");
    cmd->add_option("--formats", c.formats,
                    "comma list of output formats: json,csv,gnuplot");
    cmd->add_option("--step-scheme", c.step_scheme,
                    "nonlinear step scheme: picard or newton");
    cmd->add_option("--step-tol", c.step_tol, "relative step residual target");
    cmd->add_flag("--save-states", c.save_states,
                  "write every state field as CSV");
    cmd->add_option("--config", config_path,
                    "JSON config file; overrides any flags it mentions");
}

// ---- subcommand payloads --------------------------------------------------

int run_simulate(const CommonOptions& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const OutputSet out = parse_outputs(c.out_dir, c.formats);
    const Grid grid = build_grid(c.dim, c.n, c.length);
    const ModelSpec model = builtin_model(c.model, model_params(c));
    const int steps = resolve_steps(c);
    const SpeciesState initial = build_initial(grid, model.species, c.u0);
    StepOptions options;
    options.scheme = c.step_scheme;
    options.tolerance = c.step_tol;

    const Trajectory traj = run_rothe(grid, model, c.tau, steps, initial, options);
    const MonitorReport report =
        check_monitors(grid, model, traj, c.tau, options);

    if (out.json_on)
        write_file(out.dir / "monitors.json", to_json(report) + "\n");
    std::string csv = "k,t,mass,entropy,dissipation,duality_partial,residual\n";
    for (int k = 0; k <= steps; ++k) {
        csv += std::to_string(k);
        csv += ',';
        csv += number(k * c.tau);
        csv += ',';
        csv += number(traj.mass[k]);
        csv += ',';
        csv += traj.has_entropy ? number(traj.entropy[k]) : "nan";
        csv += ',';
        csv += k > 0 && traj.has_entropy ? number(traj.dissipation[k - 1])
                                         : "nan";
        csv += ',';
        csv += k > 0 ? number(traj.duality_partial[k - 1]) : "0";
        csv += ',';
        csv += k > 0 ? number(traj.residuals[k - 1]) : "0";
        csv += '\n';
    }
    if (out.csv_on) write_file(out.dir / "monitors.csv", csv);
    if (out.gnuplot_on) {
        write_file(out.dir / "monitors.dat", csv_to_dat(csv));
        write_file(out.dir / "plot_monitors.gp",
                   gnuplot_script("monitors.dat", "mass", 2, 3, "t", "mass",
                                  false, false));
    }
    if (c.save_states || out.csv_on) {
        // Final state is always written; --save-states adds the whole path.
        for (int i = 0; i < model.species; ++i)
            write_file(out.dir / ("state_final_s" + std::to_string(i) + ".csv"),
                       field_csv(traj.states.back()[i]));
    }
    if (c.save_states)
        for (int k = 0; k <= steps; ++k)
            for (int i = 0; i < model.species; ++i)
                write_file(out.dir / ("state_k" + std::to_string(k) + "_s" +
                                      std::to_string(i) + ".csv"),
                           field_csv(traj.states[k][i]));

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest(out, "simulate", config_echo(c, steps), wall);
    std::cout << (report.all_pass() ? "monitors: pass" : "monitors: FAIL")
              << "  min_state=" << report.min_state_value
              << "  max_residual=" << report.max_residual << "\n";
    return report.all_pass() ? 0 : 1;
}

int run_estimate_k(const CommonOptions& c, double p, const std::string& method,
                   int trials, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const OutputSet out = parse_outputs(c.out_dir, c.formats);
    const Grid grid = build_grid(c.dim, c.n, c.length);
    const int steps = resolve_steps(c);
    const RegularityEstimate est =
        estimate_K(grid, c.m, p, c.tau, steps, method, trials, seed);

    if (out.json_on)
        write_file(out.dir / "estimate.json", to_json(est) + "\n");
    if (out.csv_on) write_file(out.dir / "trials.csv", trials_csv(est));
    if (out.gnuplot_on) {
        write_file(out.dir / "trials.dat", csv_to_dat(trials_csv(est)));
        write_file(out.dir / "plot_trials.gp",
                   gnuplot_script("trials.dat", "ratio", 1, 3, "trial",
                                  "ratio", false, false));
    }
    json cfg = config_echo(c, steps);
    cfg["p"] = p;
    cfg["method"] = method;
    cfg["trials"] = trials;
    cfg["seed"] = seed;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest(out, "estimate-k", cfg, wall);
    std::cout << "k_hat = " << number(est.k_hat) << "  (method " << method
              << ", p " << p << ")\n";
    return 0;
}

struct VerifyOptions {
    std::string suite = "perturbation";
    double p = 2.0;
    double q = 6.0;
    double r = 3.0;
    double lower = 1.0;
    double upper = 2.0;
    double khat = 0.0;  // 0: exact at p = 2, power-method estimate otherwise
    std::string method = "power";
    int trials = 64;
    std::uint64_t seed = 1;
    double p_max = 4.0;
    int p_steps = 9;
    int samples = 10000;
};

KValue resolve_k(const Grid& grid, const VerifyOptions& v, double m,
                 double tau, int steps) {
    if (v.khat > 0.0) return {v.khat, "user"};
    if (v.p == 2.0) return exact_k_p2(m);
    return estimate_K(grid, m, v.p, tau, steps, v.method, v.trials, v.seed)
        .k_value();
}

int run_verify(const CommonOptions& c, const VerifyOptions& v) {
    const auto t0 = std::chrono::steady_clock::now();
    const OutputSet out = parse_outputs(c.out_dir, c.formats);
    const Grid grid = build_grid(c.dim, c.n, c.length);
    const int steps = resolve_steps(c);
    json cfg = config_echo(c, steps);
    cfg["suite"] = v.suite;
    cfg["p"] = v.p;
    cfg["seed"] = v.seed;

    int exit_code = 0;
    std::string summary;

    if (v.suite == "perturbation") {
        cfg["lower"] = v.lower;
        cfg["upper"] = v.upper;
        cfg["trials"] = v.trials;
        const KValue k =
            resolve_k(grid, v, 0.5 * (v.lower + v.upper), c.tau, steps);
        const EstimateReport rep = run_perturbation_trials(
            grid, v.lower, v.upper, c.tau, steps, v.p, k, v.trials, v.seed);
        write_file(out.dir / "perturbation.json", to_json(rep) + "\n");
        exit_code = rep.certified_pass() ? 0 : 1;
        summary = rep.all_pass() ? "perturbation: pass" : "perturbation: FAIL";
    } else if (v.suite == "interpolation") {
        cfg["q"] = v.q;
        cfg["r"] = v.r;
        const EstimateReport rep =
            verify_interpolation(grid, c.m, c.tau, steps, v.p, v.q, v.r);
        write_file(out.dir / "interpolation.json", to_json(rep) + "\n");
        exit_code = rep.certified_pass() ? 0 : 1;
        summary =
            rep.all_pass() ? "interpolation: pass" : "interpolation: FAIL";
    } else if (v.suite == "duality") {
        const ModelSpec model = builtin_model(c.model, model_params(c));
        if (!model.bounded())
            throw ConfigError("duality suite needs a bounded-pressure model");
        const SpeciesState initial = build_initial(grid, model.species, c.u0);
        StepOptions options;
        options.scheme = c.step_scheme;
        options.tolerance = c.step_tol;
        const KValue k = resolve_k(
            grid, v, 0.5 * (model.pressure_lower + model.pressure_upper),
            c.tau, steps);
        const EstimateReport rep = verify_discrete_duality(
            grid, model, c.tau, steps, initial, v.p, k, options);
        write_file(out.dir / "duality.json", to_json(rep) + "\n");
        exit_code = rep.certified_pass() ? 0 : 1;
        summary = rep.all_pass() ? "duality: pass" : "duality: FAIL";
    } else if (v.suite == "structure") {
        const ModelSpec model = builtin_model(c.model, model_params(c));
        const StructureReport rep =
            check_structure(model, v.samples, 1e3, v.seed);
        write_file(out.dir / "structure.json", to_json(rep) + "\n");
        exit_code = rep.all_pass() ? 0 : 1;
        summary = rep.all_pass() ? "structure: pass" : "structure: FAIL";
    } else if (v.suite == "verdict") {
        const ModelSpec model = builtin_model(c.model, model_params(c));
        const double lower = model.bounded() ? model.pressure_lower : v.lower;
        const double upper = model.bounded() ? model.pressure_upper : v.upper;
        const AdmissiblePResult adm = find_admissible_p(
            grid, lower, upper, c.tau, steps, v.p_max, v.p_steps, v.seed);
        const VerdictReport rep =
            growth_vs_estimate(model, adm, v.samples, v.seed);
        write_file(out.dir / "admissible.json", to_json(adm) + "\n");
        write_file(out.dir / "verdict.json", to_json(rep) + "\n");
        if (out.csv_on)
            write_file(out.dir / "admissible.csv", admissible_csv(adm));
        summary = rep.positive ? "verdict: positive" : "verdict: not covered";
    } else {
        throw ConfigError("unknown suite '" + v.suite + "'");
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest(out, "verify", cfg, wall);
    std::cout << summary << "\n";
    return exit_code;
}

int run_sweep(const CommonOptions& c, const std::string& kind,
              const std::string& tau_list, double p, double p_max, int p_steps,
              double lower, double upper, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const OutputSet out = parse_outputs(c.out_dir, c.formats);
    const Grid grid = build_grid(c.dim, c.n, c.length);
    json cfg = config_echo(c, c.steps);
    cfg["kind"] = kind;

    if (kind == "refinement") {
        if (!(c.horizon > 0.0)) throw ConfigError("refinement sweep needs -T");
        std::vector<double> taus;
        std::stringstream ss(tau_list);
        std::string item;
        while (std::getline(ss, item, ','))
            try {
                taus.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("bad tau in --tau-list");
            }
        if (taus.empty()) throw ConfigError("--tau-list is empty");
        cfg["tau_list"] = taus;
        cfg["p"] = p;
        const ModelSpec model = builtin_model(c.model, model_params(c));
        const SpeciesState initial = build_initial(grid, model.species, c.u0);
        StepOptions options;
        options.scheme = c.step_scheme;
        options.tolerance = c.step_tol;
        const RefinementReport rep = refinement_study(
            grid, model, c.horizon, taus, initial, p, options);
        if (out.json_on)
            write_file(out.dir / "refinement.json", to_json(rep) + "\n");
        if (out.csv_on)
            write_file(out.dir / "refinement.csv", refinement_csv(rep));
        if (out.gnuplot_on) {
            write_file(out.dir / "refinement.dat",
                       csv_to_dat(refinement_csv(rep)));
            write_file(out.dir / "plot_refinement.gp",
                       gnuplot_script("refinement.dat", "refinement", 1, 4,
                                      "tau", "relative difference", true,
                                      true));
        }
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        write_manifest(out, "sweep", cfg, wall);
        std::cout << (rep.differences_decreasing()
                          ? "refinement: differences decreasing"
                          : "refinement: not settled")
                  << "  final_rel_diff=" << rep.final_rel_diff() << "\n";
        return 0;
    }

    if (kind == "admissible") {
        cfg["p_max"] = p_max;
        cfg["p_steps"] = p_steps;
        cfg["lower"] = lower;
        cfg["upper"] = upper;
        const int steps = resolve_steps(c);
        const AdmissiblePResult rep = find_admissible_p(
            grid, lower, upper, c.tau, steps, p_max, p_steps, seed);
        if (out.json_on)
            write_file(out.dir / "admissible.json", to_json(rep) + "\n");
        if (out.csv_on)
            write_file(out.dir / "admissible.csv", admissible_csv(rep));
        if (out.gnuplot_on) {
            write_file(out.dir / "admissible.dat",
                       csv_to_dat(admissible_csv(rep)));
            write_file(out.dir / "plot_admissible.gp",
                       gnuplot_script("admissible.dat", "oscillation", 1, 3,
                                      "p", "(b-a)/2 * K", false, false));
        }
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        write_manifest(out, "sweep", cfg, wall);
        std::cout << "p_star = " << rep.p_star << "\n";
        return 0;
    }

    throw ConfigError("unknown sweep kind '" + kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"implicit cross-diffusion solver and estimate verifier"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string config_path;

    auto* sim = app.add_subcommand("simulate", "run the implicit scheme");
    add_common_flags(sim, common, config_path);

    auto* est = app.add_subcommand("estimate-k",
                                   "estimate the regularity constant");
    add_common_flags(est, common, config_path);
    double est_p = 2.0;
    std::string est_method = "eigenmode";
    int est_trials = 64;
    std::uint64_t est_seed = 1;
    est->add_option("--p", est_p, "exponent p in (1, infinity)");
    est->add_option("--method", est_method,
                    "eigenmode, random, power or dense_oracle");
    est->add_option("--trials", est_trials, "random trials");
    est->add_option("--seed", est_seed, "random seed");

    auto* ver = app.add_subcommand("verify", "verify one estimate suite");
    add_common_flags(ver, common, config_path);
    VerifyOptions vopt;
    ver->add_option("--suite", vopt.suite,
                    "perturbation, interpolation, duality, structure or "
                    "verdict");
    ver->add_option("--p", vopt.p, "exponent p");
    ver->add_option("--q", vopt.q, "interpolation endpoint q");
    ver->add_option("--r", vopt.r, "interpolation midpoint r");
    ver->add_option("--lower", vopt.lower, "coefficient lower bound");
    ver->add_option("--upper", vopt.upper, "coefficient upper bound");
    ver->add_option("--khat", vopt.khat,
                    "use this K instead of estimating it");
    ver->add_option("--method", vopt.method, "K estimation method");
    ver->add_option("--trials", vopt.trials, "trial count");
    ver->add_option("--seed", vopt.seed, "random seed");
    ver->add_option("--p-max", vopt.p_max, "verdict: largest exponent");
    ver->add_option("--p-steps", vopt.p_steps, "verdict: exponent grid size");
    ver->add_option("--samples", vopt.samples, "structure sample count");

    auto* swp = app.add_subcommand("sweep", "refinement or admissible sweep");
    add_common_flags(swp, common, config_path);
    std::string sweep_kind = "refinement";
    std::string tau_list;
    double sweep_p = 2.0, sweep_pmax = 4.0, sweep_lower = 1.0, sweep_upper = 2.0;
    int sweep_psteps = 9;
    std::uint64_t sweep_seed = 1;
    swp->add_option("--kind", sweep_kind, "refinement or admissible");
    swp->add_option("--tau-list", tau_list, "comma list of step sizes");
    swp->add_option("--p", sweep_p, "norm exponent");
    swp->add_option("--p-max", sweep_pmax, "largest exponent");
    swp->add_option("--p-steps", sweep_psteps, "exponent grid size");
    swp->add_option("--lower", sweep_lower, "coefficient lower bound");
    swp->add_option("--upper", sweep_upper, "coefficient upper bound");
    swp->add_option("--seed", sweep_seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        apply_config_file(config_path, common);
        if (sim->parsed()) return run_simulate(common);
        if (est->parsed())
            return run_estimate_k(common, est_p, est_method, est_trials,
                                  est_seed);
        if (ver->parsed()) return run_verify(common, vopt);
        if (swp->parsed())
            return run_sweep(common, sweep_kind, tau_list, sweep_p, sweep_pmax,
                             sweep_psteps, sweep_lower, sweep_upper,
                             sweep_seed);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    }
}
