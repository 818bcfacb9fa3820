#include "crossdiff/rothe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include "crossdiff/dual.hpp"

namespace crossdiff {

namespace {

Point point_at(const SpeciesState& state, std::size_t node) {
    Point u(state.size());
    // Clamp roundoff negatives so model callbacks only ever see the
    // nonnegative orthant they are defined on.
    for (std::size_t i = 0; i < state.size(); ++i)
        u[i] = std::max(state[i][node], 0.0);
    return u;
}

void require_state_shape(const Grid& grid, const ModelSpec& model,
                         const SpeciesState& state, const char* who) {
    if (static_cast<int>(state.size()) != model.species)
        throw std::invalid_argument(std::string(who) +
                                    ": species count mismatch");
    for (const Field& f : state)
        if (f.size() != grid.node_count())
            throw std::invalid_argument(std::string(who) +
                                        ": field size mismatch");
}

double stacked_l2(const Grid& grid, const SpeciesState& fields) {
    double s = 0.0;
    for (const Field& f : fields) {
        const double n = lp_norm(grid, f, 2.0);
        s += n * n;
    }
    return std::sqrt(s);
}

// Residual blocks of the implicit system at state v.
struct ResidualBlocks {
    SpeciesState time_term;  // (v - prev)/tau
    SpeciesState lap_term;   // Lap(p_i(v) v_i)
    SpeciesState reaction;   // r_i^+(v) - v_i r_i^-(v)
    SpeciesState residual;   // time_term - lap_term - reaction
};

ResidualBlocks residual_blocks(const Grid& grid, const ModelSpec& model,
                               double tau, const SpeciesState& prev,
                               const SpeciesState& next) {
    const std::size_t nc = grid.node_count();
    const int s = model.species;
    ResidualBlocks blocks;
    blocks.time_term.assign(s, Field(nc));
    blocks.lap_term.assign(s, Field(nc));
    blocks.reaction.assign(s, Field(nc));
    blocks.residual.assign(s, Field(nc));

    SpeciesState flux(s, Field(nc));
    for (std::size_t j = 0; j < nc; ++j) {
        const Point u = point_at(next, j);
        for (int i = 0; i < s; ++i) {
            flux[i][j] = model.pressure(i, u) * next[i][j];
            blocks.reaction[i][j] = model.reaction(i, u);
            blocks.time_term[i][j] = (next[i][j] - prev[i][j]) / tau;
        }
    }
    for (int i = 0; i < s; ++i) {
        blocks.lap_term[i] = apply_laplacian(grid, flux[i]);
        for (std::size_t j = 0; j < nc; ++j)
            blocks.residual[i][j] = blocks.time_term[i][j] -
                                    blocks.lap_term[i][j] -
                                    blocks.reaction[i][j];
    }
    return blocks;
}

double relative_residual(const Grid& grid, double tau,
                         const SpeciesState& prev, const ResidualBlocks& blocks) {
    SpeciesState prev_rate(prev.size());
    for (std::size_t i = 0; i < prev.size(); ++i) {
        prev_rate[i] = prev[i];
        for (double& v : prev_rate[i]) v /= tau;
    }
    const double scale =
        std::max({stacked_l2(grid, prev_rate), stacked_l2(grid, blocks.lap_term),
                  stacked_l2(grid, blocks.reaction), 1e-300});
    return stacked_l2(grid, blocks.residual) / scale;
}

// ---- Picard iteration -----------------------------------------------------

// Freeze pressures and reaction factors at the iterate; the gain r_i^+ goes
// to the right-hand side and the loss factor multiplies the unknown, so each
// species system stays an M-matrix and the sweep preserves nonnegativity.
SpeciesState picard_sweep(const Grid& grid, const ModelSpec& model, double tau,
                          const SpeciesState& prev, const SpeciesState& iterate) {
    const std::size_t nc = grid.node_count();
    const int s = model.species;
    SpeciesState a(s, Field(nc)), c(s, Field(nc)), rhs(s, Field(nc));
    for (std::size_t j = 0; j < nc; ++j) {
        const Point u = point_at(iterate, j);
        for (int i = 0; i < s; ++i) {
            a[i][j] = model.pressure(i, u);
            c[i][j] = 1.0 + tau * model.loss(i, u);
            rhs[i][j] = prev[i][j] + tau * model.gain(i, u);
        }
    }
    SpeciesState next(s);
    for (int i = 0; i < s; ++i)
        next[i] = solve_primal_helmholtz(grid, a[i], c[i], tau, rhs[i]);
    return next;
}

StepResult picard_step(const Grid& grid, const ModelSpec& model, double tau,
                       const SpeciesState& prev, const StepOptions& options) {
    SpeciesState v = prev;
    double omega = 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < options.max_outer; ++outer) {
        const ResidualBlocks blocks =
            residual_blocks(grid, model, tau, prev, v);
        const double rho = relative_residual(grid, tau, prev, blocks);
        if (rho <= options.tolerance) return {std::move(v), rho, outer};
        // Mild transient growth is normal for the frozen-coefficient map;
        // damp only on a clear blow-up and recover once sweeps improve again.
        if (rho > 1.5 * best) {
            if (omega > 1.0 / 16.0) omega *= 0.5;
        } else if (rho < best) {
            omega = std::min(1.0, 2.0 * omega);
        }
        best = std::min(best, rho);

        const SpeciesState sweep = picard_sweep(grid, model, tau, prev, v);
        // Convex combination keeps nonnegativity.
        for (int i = 0; i < model.species; ++i)
            for (std::size_t j = 0; j < grid.node_count(); ++j)
                v[i][j] = (1.0 - omega) * v[i][j] + omega * sweep[i][j];
    }
    const ResidualBlocks blocks = residual_blocks(grid, model, tau, prev, v);
    const double rho = relative_residual(grid, tau, prev, blocks);
    if (rho <= options.tolerance)
        return {std::move(v), rho, options.max_outer};
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", rho);
    throw std::runtime_error(
        std::string("rothe_step: picard iteration stalled at relative "
                    "residual ") +
        buf);
}

// ---- Newton iteration -----------------------------------------------------

std::vector<double> stack_state(const SpeciesState& s) {
    std::vector<double> x;
    for (const Field& f : s) x.insert(x.end(), f.begin(), f.end());
    return x;
}

SpeciesState unstack_state(const std::vector<double>& x, int species,
                           std::size_t nc) {
    SpeciesState s(species, Field(nc));
    for (int i = 0; i < species; ++i)
        std::copy(x.begin() + i * nc, x.begin() + (i + 1) * nc, s[i].begin());
    return s;
}

double plain_l2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

StepResult newton_step(const Grid& grid, const ModelSpec& model, double tau,
                       const SpeciesState& prev, const StepOptions& options) {
    const std::size_t nc = grid.node_count();
    const int s = model.species;
    const std::size_t dim = nc * static_cast<std::size_t>(s);

    auto eval_residual = [&](const std::vector<double>& x) {
        const SpeciesState v = unstack_state(x, s, nc);
        return stack_state(
            residual_blocks(grid, model, tau, prev, v).residual);
    };
    auto relative_of = [&](const SpeciesState& v) {
        return relative_residual(grid, tau, prev,
                                 residual_blocks(grid, model, tau, prev, v));
    };

    std::vector<double> x = stack_state(prev);
    double rho = relative_of(prev);
    for (int outer = 0; outer < options.max_outer; ++outer) {
        if (rho <= options.tolerance)
            return {unstack_state(x, s, nc), rho, outer};
        const std::vector<double> g = eval_residual(x);
        const double gnorm = plain_l2(g);
        if (gnorm == 0.0) return {unstack_state(x, s, nc), 0.0, outer};

        // Finite-difference Jacobian action for the Krylov inner solver.
        const double xnorm = plain_l2(x);
        auto jacobian_apply = [&](const std::vector<double>& w) {
            const double wn = plain_l2(w);
            std::vector<double> out(dim, 0.0);
            if (wn == 0.0) return out;
            const double eps = 1e-7 * (1.0 + xnorm) / wn;
            std::vector<double> xp(dim);
            for (std::size_t j = 0; j < dim; ++j) xp[j] = x[j] + eps * w[j];
            const std::vector<double> gp = eval_residual(xp);
            for (std::size_t j = 0; j < dim; ++j)
                out[j] = (gp[j] - g[j]) / eps;
            return out;
        };

        // BiCGStab on J delta = -g, inexact tolerance.
        std::vector<double> delta(dim, 0.0);
        {
            std::vector<double> r(dim);
            for (std::size_t j = 0; j < dim; ++j) r[j] = -g[j];
            const std::vector<double> rhat = r;
            std::vector<double> p(dim, 0.0), vv(dim, 0.0);
            double rho_old = 1.0, alpha = 1.0, om = 1.0;
            const double target = 1e-4 * gnorm;
            bool broke = false;
            for (int it = 0; it < 200; ++it) {
                double rh = 0.0;
                for (std::size_t j = 0; j < dim; ++j) rh += rhat[j] * r[j];
                if (std::abs(rh) < 1e-300) { broke = it == 0; break; }
                const double beta = (rh / rho_old) * (alpha / om);
                for (std::size_t j = 0; j < dim; ++j)
                    p[j] = r[j] + beta * (p[j] - om * vv[j]);
                vv = jacobian_apply(p);
                double rv = 0.0;
                for (std::size_t j = 0; j < dim; ++j) rv += rhat[j] * vv[j];
                if (std::abs(rv) < 1e-300) { broke = true; break; }
                alpha = rh / rv;
                std::vector<double> sres(dim);
                for (std::size_t j = 0; j < dim; ++j)
                    sres[j] = r[j] - alpha * vv[j];
                if (plain_l2(sres) <= target) {
                    for (std::size_t j = 0; j < dim; ++j)
                        delta[j] += alpha * p[j];
                    break;
                }
                const std::vector<double> t = jacobian_apply(sres);
                double ts = 0.0, tt = 0.0;
                for (std::size_t j = 0; j < dim; ++j) {
                    ts += t[j] * sres[j];
                    tt += t[j] * t[j];
                }
                if (tt < 1e-300) { broke = true; break; }
                om = ts / tt;
                for (std::size_t j = 0; j < dim; ++j) {
                    delta[j] += alpha * p[j] + om * sres[j];
                    r[j] = sres[j] - om * t[j];
                }
                if (plain_l2(r) <= target) break;
                rho_old = rh;
            }
            if (broke && plain_l2(delta) == 0.0)
                // Gradient-flow fallback keeps the outer loop moving.
                for (std::size_t j = 0; j < dim; ++j) delta[j] = -tau * g[j];
        }

        // Positivity-preserving damped line search.
        double alpha = std::min(1.0, options.damping);
        for (std::size_t j = 0; j < dim; ++j)
            if (delta[j] < 0.0 && x[j] + alpha * delta[j] < 0.0)
                alpha = std::min(alpha, x[j] / -delta[j]);
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            std::vector<double> xt(dim);
            for (std::size_t j = 0; j < dim; ++j)
                xt[j] = std::max(x[j] + alpha * delta[j], 0.0);
            const double gt = plain_l2(eval_residual(xt));
            if (gt <= (1.0 - 1e-4 * alpha) * gnorm) {
                x = std::move(xt);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw std::runtime_error(
                "rothe_step: newton line search failed at relative residual " +
                std::to_string(rho));
        rho = relative_of(unstack_state(x, s, nc));
    }
    if (rho <= options.tolerance)
        return {unstack_state(x, s, nc), rho, options.max_outer};
    throw std::runtime_error(
        "rothe_step: newton iteration failed to converge, relative residual " +
        std::to_string(rho));
}

}  // namespace

double step_residual(const Grid& grid, const ModelSpec& model, double tau,
                     const SpeciesState& prev, const SpeciesState& next) {
    require_state_shape(grid, model, prev, "step_residual");
    require_state_shape(grid, model, next, "step_residual");
    if (!(tau > 0.0))
        throw std::invalid_argument("step_residual: tau must be positive");
    return relative_residual(grid, tau, prev,
                             residual_blocks(grid, model, tau, prev, next));
}

StepResult rothe_step(const Grid& grid, const ModelSpec& model, double tau,
                      const SpeciesState& prev, const StepOptions& options) {
    require_state_shape(grid, model, prev, "rothe_step");
    if (!(tau > 0.0))
        throw std::invalid_argument("rothe_step: tau must be positive");
    if (options.max_outer < 1 || !(options.tolerance > 0.0))
        throw std::invalid_argument("rothe_step: bad iteration options");
    if (options.scheme == "picard")
        return picard_step(grid, model, tau, prev, options);
    if (options.scheme == "newton")
        return newton_step(grid, model, tau, prev, options);
    throw std::invalid_argument("rothe_step: unknown scheme '" +
                                options.scheme + "'");
}

double entropy_dissipation(const Grid& grid, const ModelSpec& model,
                           const SpeciesState& state) {
    require_state_shape(grid, model, state, "entropy_dissipation");
    if (!model.entropy_gradient)
        throw std::invalid_argument(
            "entropy_dissipation: model has no entropy gradient");
    const std::size_t nc = grid.node_count();
    const int s = model.species;

    // Node fields of dH/du_i and of the flux p_i u_i.  Gradients are
    // evaluated with components floored at 1e-300 so log terms stay finite;
    // faces with zero flux difference contribute nothing either way.
    SpeciesState gradh(s, Field(nc)), flux(s, Field(nc));
    for (std::size_t j = 0; j < nc; ++j) {
        Point u = point_at(state, j);
        Point uf = u;
        for (double& v : uf) v = std::max(v, 1e-300);
        const Point g = model.entropy_gradient(uf);
        for (int i = 0; i < s; ++i) {
            gradh[i][j] = g[i];
            flux[i][j] = model.pressure(i, u) * u[i];
        }
    }

    const double face_scale = std::pow(grid.h, grid.dim - 2);
    double total = 0.0;
    auto face = [&](std::size_t left, std::size_t right) {
        for (int i = 0; i < s; ++i) {
            const double df = flux[i][right] - flux[i][left];
            if (df == 0.0) continue;
            total += face_scale * (gradh[i][right] - gradh[i][left]) * df;
        }
    };
    if (grid.dim == 1) {
        for (int j = 0; j + 1 < grid.n; ++j) face(j, j + 1);
    } else {
        for (int iy = 0; iy < grid.n; ++iy)
            for (int ix = 0; ix + 1 < grid.n; ++ix)
                face(iy * grid.n + ix, iy * grid.n + ix + 1);
        for (int iy = 0; iy + 1 < grid.n; ++iy)
            for (int ix = 0; ix < grid.n; ++ix)
                face(iy * grid.n + ix, (iy + 1) * grid.n + ix);
    }
    return total;
}

Trajectory run_rothe(const Grid& grid, const ModelSpec& model, double tau,
                     int steps, const SpeciesState& initial,
                     const StepOptions& options) {
    require_state_shape(grid, model, initial, "run_rothe");
    if (steps < 1)
        throw std::invalid_argument("run_rothe: steps must be >= 1");
    SpeciesState state = initial;
    for (Field& f : state)
        for (double& v : f) {
            if (v < -1e-12)
                throw std::invalid_argument(
                    "run_rothe: initial state must be nonnegative");
            v = std::max(v, 0.0);
        }

    const std::size_t nc = grid.node_count();
    const int s = model.species;
    Trajectory traj;
    traj.has_entropy = static_cast<bool>(model.entropy) &&
                       static_cast<bool>(model.entropy_gradient);

    auto mass_of = [&](const SpeciesState& u) {
        double m = 0.0;
        for (const Field& f : u) m += integrate(grid, f);
        return m;
    };
    auto entropy_of = [&](const SpeciesState& u) {
        double e = 0.0;
        for (std::size_t j = 0; j < nc; ++j)
            e += model.entropy(point_at(u, j));
        return e * grid.weight;
    };
    auto duality_increment = [&](const SpeciesState& u) {
        double acc = 0.0;
        for (std::size_t j = 0; j < nc; ++j) {
            const Point p = point_at(u, j);
            double flux_sum = 0.0, mass_sum = 0.0;
            for (int i = 0; i < s; ++i) {
                flux_sum += model.pressure(i, p) * p[i];
                mass_sum += p[i];
            }
            acc += flux_sum * mass_sum;
        }
        return tau * acc * grid.weight;
    };

    traj.states.push_back(state);
    traj.mass.push_back(mass_of(state));
    if (traj.has_entropy) traj.entropy.push_back(entropy_of(state));

    double duality = 0.0;
    for (int k = 1; k <= steps; ++k) {
        StepResult step = rothe_step(grid, model, tau, state, options);
        state = std::move(step.state);
        traj.states.push_back(state);
        traj.mass.push_back(mass_of(state));
        if (traj.has_entropy) {
            traj.entropy.push_back(entropy_of(state));
            traj.dissipation.push_back(entropy_dissipation(grid, model, state));
        }
        duality += duality_increment(state);
        traj.duality_partial.push_back(duality);
        traj.residuals.push_back(step.residual);
    }
    return traj;
}

MonitorReport check_monitors(const Grid& grid, const ModelSpec& model,
                             const Trajectory& trajectory, double tau,
                             const StepOptions& options) {
    const int n = static_cast<int>(trajectory.residuals.size());
    if (n < 1 || static_cast<int>(trajectory.states.size()) != n + 1)
        throw std::invalid_argument("check_monitors: malformed trajectory");
    const double cr = model.mass_constant;
    const double ch = model.entropy_constant;
    if (!(tau * cr <= 0.5))
        throw std::invalid_argument(
            "check_monitors: need tau * C_R <= 1/2");
    const bool check_entropy = trajectory.has_entropy;
    if (check_entropy && !(tau * ch <= 0.5))
        throw std::invalid_argument(
            "check_monitors: need tau * C_H <= 1/2");

    const double vol = grid.volume();
    MonitorReport rep;
    rep.tau = tau;
    rep.steps = n;
    rep.mass_constant = cr;
    rep.entropy_constant = ch;
    rep.entropy_checked = check_entropy;
    rep.min_state_value = std::numeric_limits<double>::infinity();
    rep.min_dissipation = check_entropy
                              ? std::numeric_limits<double>::infinity()
                              : 0.0;
    rep.worst_mass_margin = std::numeric_limits<double>::infinity();
    rep.worst_entropy_margin = std::numeric_limits<double>::infinity();

    for (const SpeciesState& st : trajectory.states)
        for (const Field& f : st)
            for (double v : f) rep.min_state_value = std::min(rep.min_state_value, v);
    rep.nonneg_pass = rep.min_state_value >= -1e-12;

    for (double r : trajectory.residuals)
        rep.max_residual = std::max(rep.max_residual, r);
    rep.residual_pass = rep.max_residual <= options.tolerance;

    for (int k = 1; k <= n; ++k) {
        const double rho = trajectory.residuals[k - 1];
        const double slack = 10.0 * rho * vol;
        const double lhs = trajectory.mass[k] * (1.0 - tau * cr);
        const double rhs = trajectory.mass[k - 1] + tau * cr * vol + slack +
                           1e-12 * std::max(1.0, std::abs(trajectory.mass[k]));
        const double margin = rhs - lhs;
        rep.mass_margin.push_back(margin);
        if (margin < rep.worst_mass_margin) {
            rep.worst_mass_margin = margin;
            rep.worst_mass_step = k;
        }
        if (margin < 0.0) rep.mass_pass = false;

        if (check_entropy) {
            const double dk = trajectory.dissipation[k - 1];
            rep.min_dissipation = std::min(rep.min_dissipation, dk);
            const double elhs = trajectory.entropy[k] + tau * dk;
            const double erhs =
                (trajectory.entropy[k - 1] +
                 tau * ch * (vol + trajectory.mass[k])) /
                    (1.0 - tau * ch) +
                10.0 * rho * vol + 1e-12 * std::max(1.0, std::abs(elhs));
            const double emargin = erhs - elhs;
            rep.entropy_margin.push_back(emargin);
            if (emargin < rep.worst_entropy_margin) {
                rep.worst_entropy_margin = emargin;
                rep.worst_entropy_step = k;
            }
            if (emargin < 0.0) rep.entropy_pass = false;
        }
    }
    if (!check_entropy) {
        rep.entropy_pass = true;
        rep.worst_entropy_margin = 0.0;
    }
    if (!trajectory.duality_partial.empty())
        rep.duality_total = trajectory.duality_partial.back();
    return rep;
}

RefinementReport refinement_study(const Grid& grid, const ModelSpec& model,
                                  double horizon,
                                  const std::vector<double>& taus,
                                  const SpeciesState& initial, double p,
                                  const StepOptions& options) {
    if (!(horizon > 0.0))
        throw std::invalid_argument("refinement_study: horizon must be positive");
    if (taus.empty())
        throw std::invalid_argument("refinement_study: need at least one tau");
    if (!(p > 1.0))
        throw std::invalid_argument("refinement_study: need p > 1");

    RefinementReport rep;
    rep.p = p;
    rep.horizon = horizon;
    const std::size_t nc = grid.node_count();
    double previous = 0.0;
    for (std::size_t row = 0; row < taus.size(); ++row) {
        const double tau = taus[row];
        const double steps_real = horizon / tau;
        const int steps = static_cast<int>(std::llround(steps_real));
        if (steps < 1 || std::abs(steps * tau - horizon) > 1e-9 * horizon)
            throw std::invalid_argument(
                "refinement_study: horizon must be a whole number of steps");
        const Trajectory traj =
            run_rothe(grid, model, tau, steps, initial, options);
        std::vector<Field> magnitude(steps, Field(nc));
        for (int k = 1; k <= steps; ++k)
            for (std::size_t j = 0; j < nc; ++j) {
                double m2 = 0.0;
                for (const Field& f : traj.states[k]) m2 += f[j] * f[j];
                magnitude[k - 1][j] = std::sqrt(m2);
            }
        const double norm = space_time_lp_norm(grid, magnitude, tau, p);
        RefinementRow r;
        r.tau = tau;
        r.steps = steps;
        r.norm = norm;
        r.rel_diff = row == 0 ? 0.0
                              : std::abs(norm - previous) /
                                    std::max(norm, 1e-300);
        rep.rows.push_back(r);
        previous = norm;
    }
    return rep;
}

}  // namespace crossdiff
