#include "crossdiff/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "util.hpp"

namespace crossdiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x log x extended by continuity to 0 at x = 0.
double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Entropy density of the bounded models: s log(2s/(1+s)) + (1-s)/2,
// convex, nonnegative, minimum 0 at s = 1, value 1/2 at s = 0.
double bounded_entropy_term(double s) {
    if (s <= 0.0) return 0.5;
    return s * std::log(2.0 * s / (1.0 + s)) + (1.0 - s) / 2.0;
}

double bounded_entropy_slope(double s) {
    return std::log(2.0 * s / (1.0 + s)) + 1.0 / (1.0 + s) - 0.5;
}

double bounded_entropy_curvature(double s) {
    return 1.0 / (s * (1.0 + s) * (1.0 + s));
}

// Power entropy density (s^g - g s + g - 1)/(g(g-1)), g > 0, g != 1;
// nonnegative and convex with curvature s^(g-2).
double power_entropy_term(double s, double g) {
    const double sg = s > 0.0 ? std::pow(s, g) : 0.0;
    return (sg - g * s + g - 1.0) / (g * (g - 1.0));
}

double power_entropy_slope(double s, double g) {
    return (std::pow(s, g - 1.0) - 1.0) / (g - 1.0);
}

class ParamReader {
  public:
    explicit ParamReader(const std::map<std::string, double>& params)
        : params_(params) {}

    double get(const std::string& key, double fallback) {
        used_.push_back(key);
        auto it = params_.find(key);
        return it == params_.end() ? fallback : it->second;
    }

    void finish(const std::string& model) const {
        for (const auto& [key, value] : params_) {
            (void)value;
            if (std::find(used_.begin(), used_.end(), key) == used_.end())
                throw std::invalid_argument("builtin_model: model '" + model +
                                            "' does not accept parameter '" +
                                            key + "'");
        }
    }

  private:
    const std::map<std::string, double>& params_;
    std::vector<std::string> used_;
};

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("builtin_model: ") + what +
                                    " must be positive and finite");
}

void require_nonnegative(double v, const char* what) {
    if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("builtin_model: ") + what +
                                    " must be nonnegative and finite");
}

ModelSpec make_scalar_heat(ParamReader& pr) {
    const double m = pr.get("m", 1.0);
    require_positive(m, "m");
    ModelSpec spec;
    spec.name = "scalar_heat";
    spec.species = 1;
    spec.pressure = [m](int, const Point&) { return m; };
    spec.gain = [](int, const Point&) { return 0.0; };
    spec.loss = [](int, const Point&) { return 0.0; };
    spec.entropy = [](const Point& u) { return 0.5 * u[0] * u[0]; };
    spec.entropy_gradient = [](const Point& u) { return Point{u[0]}; };
    spec.entropy_hessian = [](const Point&) {
        SquareMatrix h(1);
        h(0, 0) = 1.0;
        return h;
    };
    spec.diffusion_jacobian = [m](const Point&) {
        SquareMatrix j(1);
        j(0, 0) = m;
        return j;
    };
    spec.uniform_floor = {[m](double) { return m; }};
    spec.mass_constant = 0.0;
    spec.entropy_constant = 0.0;
    spec.pressure_lower = m;
    spec.pressure_upper = m;
    return spec;
}

ModelSpec make_skt(ParamReader& pr) {
    const double d1 = pr.get("d1", 1.0), d2 = pr.get("d2", 1.0);
    const double a11 = pr.get("a11", 0.0), a12 = pr.get("a12", 1.0);
    const double a21 = pr.get("a21", 1.0), a22 = pr.get("a22", 0.0);
    const double g1 = pr.get("g1", 1.0), g2 = pr.get("g2", 1.0);
    const double r11 = pr.get("r11", 1.0), r12 = pr.get("r12", 1.0);
    const double r21 = pr.get("r21", 1.0), r22 = pr.get("r22", 1.0);
    require_positive(d1, "d1");
    require_positive(d2, "d2");
    require_nonnegative(a11, "a11");
    require_nonnegative(a22, "a22");
    require_positive(a12, "a12");  // entropy weights are (a21, a12)
    require_positive(a21, "a21");
    require_nonnegative(g1, "g1");
    require_nonnegative(g2, "g2");
    require_nonnegative(r11, "r11");
    require_nonnegative(r12, "r12");
    require_nonnegative(r21, "r21");
    require_nonnegative(r22, "r22");

    ModelSpec spec;
    spec.name = "skt";
    spec.species = 2;
    spec.pressure = [=](int i, const Point& u) {
        return i == 0 ? d1 + a11 * u[0] + a12 * u[1]
                      : d2 + a21 * u[0] + a22 * u[1];
    };
    spec.gain = [=](int i, const Point& u) {
        return i == 0 ? g1 * u[0] : g2 * u[1];
    };
    spec.loss = [=](int i, const Point& u) {
        return i == 0 ? r11 * u[0] + r12 * u[1] : r21 * u[0] + r22 * u[1];
    };
    spec.entropy = [=](const Point& u) {
        return a21 * (xlogx(u[0]) - u[0] + 1.0) +
               a12 * (xlogx(u[1]) - u[1] + 1.0);
    };
    spec.entropy_gradient = [=](const Point& u) {
        return Point{a21 * std::log(u[0]), a12 * std::log(u[1])};
    };
    spec.entropy_hessian = [=](const Point& u) {
        SquareMatrix h(2);
        h(0, 0) = a21 / u[0];
        h(1, 1) = a12 / u[1];
        return h;
    };
    spec.diffusion_jacobian = [=](const Point& u) {
        SquareMatrix j(2);
        j(0, 0) = d1 + 2.0 * a11 * u[0] + a12 * u[1];
        j(0, 1) = a12 * u[0];
        j(1, 0) = a21 * u[1];
        j(1, 1) = d2 + a21 * u[0] + 2.0 * a22 * u[1];
        return j;
    };
    spec.mass_constant = std::max(g1, g2);
    // grad H . R <= (g1+g2) H + sum_j u_j (g_j pi_j + sum_i pi_i r_ij / e).
    const double pi1 = a21, pi2 = a12;
    const double col1 = g1 * pi1 + (pi1 * r11 + pi2 * r21) / std::exp(1.0);
    const double col2 = g2 * pi2 + (pi1 * r12 + pi2 * r22) / std::exp(1.0);
    spec.entropy_constant = std::max({g1 + g2, col1, col2});
    spec.pressure_lower = std::min(d1, d2);
    spec.pressure_upper = kInf;
    return spec;
}

ModelSpec make_skt_concave(ParamReader& pr) {
    const double d1 = pr.get("d1", 1.0), d2 = pr.get("d2", 1.0);
    const double alpha = pr.get("alpha", 0.75), beta = pr.get("beta", 0.75);
    require_positive(d1, "d1");
    require_positive(d2, "d2");
    require_positive(alpha, "alpha");
    require_positive(beta, "beta");
    if (alpha * beta > 1.0)
        throw std::invalid_argument(
            "builtin_model: skt_concave requires alpha*beta <= 1");
    if (alpha == 1.0 || beta == 1.0)
        throw std::invalid_argument(
            "builtin_model: skt_concave power entropy needs alpha, beta != 1");

    ModelSpec spec;
    spec.name = "skt_concave";
    spec.species = 2;
    spec.pressure = [=](int i, const Point& u) {
        return i == 0 ? d1 + std::pow(u[1], alpha) : d2 + std::pow(u[0], beta);
    };
    spec.gain = [](int i, const Point& u) { return i == 0 ? u[0] : 0.0; };
    spec.loss = [](int i, const Point& u) {
        return i == 0 ? u[0] + u[1] : 0.0;
    };
    spec.entropy = [=](const Point& u) {
        return power_entropy_term(u[0], beta) + power_entropy_term(u[1], alpha);
    };
    spec.entropy_gradient = [=](const Point& u) {
        return Point{power_entropy_slope(u[0], beta),
                     power_entropy_slope(u[1], alpha)};
    };
    spec.entropy_hessian = [=](const Point& u) {
        SquareMatrix h(2);
        h(0, 0) = std::pow(u[0], beta - 2.0);
        h(1, 1) = std::pow(u[1], alpha - 2.0);
        return h;
    };
    spec.diffusion_jacobian = [=](const Point& u) {
        SquareMatrix j(2);
        j(0, 0) = d1 + std::pow(u[1], alpha);
        j(0, 1) = alpha * std::pow(u[1], alpha - 1.0) * u[0];
        j(1, 0) = beta * std::pow(u[0], beta - 1.0) * u[1];
        j(1, 1) = d2 + std::pow(u[0], beta);
        return j;
    };
    spec.mass_constant = 1.0;
    spec.entropy_constant = 1.0 + 1.0 / std::abs(1.0 - beta);
    spec.pressure_lower = std::min(d1, d2);
    spec.pressure_upper = kInf;
    return spec;
}

ModelSpec make_bounded(ParamReader& pr, bool superquadratic) {
    const double d1 = pr.get("d1", 1.0), d2 = pr.get("d2", 1.0);
    require_positive(d1, "d1");
    require_positive(d2, "d2");

    ModelSpec spec;
    spec.name = superquadratic ? "bounded_superquadratic" : "bounded_quadratic";
    spec.species = 2;
    spec.pressure = [=](int i, const Point& u) {
        return i == 0 ? d1 + u[1] / (1.0 + u[1]) : d2 + u[0] / (1.0 + u[0]);
    };
    spec.gain = [](int i, const Point& u) { return u[i]; };
    spec.loss = [superquadratic](int i, const Point& u) {
        if (i == 0) {
            const double self =
                superquadratic ? u[0] * std::log1p(u[0]) : u[0];
            return self + u[1];
        }
        return u[0] + u[1];
    };
    spec.entropy = [](const Point& u) {
        return bounded_entropy_term(u[0]) + bounded_entropy_term(u[1]);
    };
    spec.entropy_gradient = [](const Point& u) {
        return Point{bounded_entropy_slope(u[0]), bounded_entropy_slope(u[1])};
    };
    spec.entropy_hessian = [](const Point& u) {
        SquareMatrix h(2);
        h(0, 0) = bounded_entropy_curvature(u[0]);
        h(1, 1) = bounded_entropy_curvature(u[1]);
        return h;
    };
    spec.diffusion_jacobian = [=](const Point& u) {
        SquareMatrix j(2);
        const double su = 1.0 + u[0], sv = 1.0 + u[1];
        j(0, 0) = d1 + u[1] / sv;
        j(0, 1) = u[0] / (sv * sv);
        j(1, 0) = u[1] / (su * su);
        j(1, 1) = d2 + u[0] / su;
        return j;
    };
    spec.mass_constant = 1.0;
    spec.entropy_constant = 2.0;
    spec.pressure_lower = std::min(d1, d2);
    spec.pressure_upper = std::max(d1, d2) + 1.0;
    // D2H * DA dominates kappa * a * diag(H'') as long as (1-kappa) a >= 1/4.
    const double a = spec.pressure_lower;
    const double kappa = std::min(0.75, 1.0 - 1.0 / (4.0 * a));
    if (kappa > 0.0) {
        auto floor_fn = [kappa, a](double s) {
            return kappa * a * bounded_entropy_curvature(s);
        };
        spec.uniform_floor = {floor_fn, floor_fn};
    }
    return spec;
}

void require_state(const ModelSpec& model, const Point& u, const char* who) {
    if (static_cast<int>(u.size()) != model.species)
        throw std::invalid_argument(std::string(who) +
                                    ": point size does not match species count");
    for (double v : u)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument(
                std::string(who) + ": state must be nonnegative and finite");
}

Point sample_log_uniform(std::mt19937_64& rng, int species, double lo,
                         double hi) {
    Point u(species);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < species; ++i)
        u[i] = std::exp(llo + (lhi - llo) * detail::uniform01(rng));
    return u;
}

double point_norm2(const Point& u) {
    double s = 0.0;
    for (double v : u) s += v * v;
    return std::sqrt(s);
}

struct WorstCase {
    double margin = kInf;
    Point witness;

    void offer(double m, const Point& u) {
        if (m < margin) {
            margin = m;
            witness = u;
        }
    }
};

HypothesisRecord finish_record(const std::string& name, const WorstCase& w,
                               double scale) {
    HypothesisRecord rec;
    rec.hypothesis = name;
    rec.margin = w.margin;
    rec.witness = w.witness;
    rec.pass = w.margin >= -1e-9 * std::max(1.0, scale);
    return rec;
}

}  // namespace

double min_symmetric_eigenvalue(const SquareMatrix& m) {
    const int n = m.n;
    if (n == 0) throw std::invalid_argument("min_symmetric_eigenvalue: empty");
    std::vector<double> s(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s[i * n + j] = 0.5 * (m(i, j) + m(j, i));
    if (n == 1) return s[0];

    double scale = 0.0;
    for (double v : s) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += s[i * n + j] * s[i * n + j];
        if (std::sqrt(off) <= 1e-15 * scale * n) break;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double apq = s[i * n + j];
                if (apq == 0.0) continue;
                const double app = s[i * n + i], aqq = s[j * n + j];
                const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(theta), t = std::sin(theta);
                for (int k = 0; k < n; ++k) {
                    const double ski = s[k * n + i], skj = s[k * n + j];
                    s[k * n + i] = c * ski - t * skj;
                    s[k * n + j] = t * ski + c * skj;
                }
                for (int k = 0; k < n; ++k) {
                    const double sik = s[i * n + k], sjk = s[j * n + k];
                    s[i * n + k] = c * sik - t * sjk;
                    s[j * n + k] = t * sik + c * sjk;
                }
            }
    }
    double mn = s[0];
    for (int i = 1; i < n; ++i) mn = std::min(mn, s[i * n + i]);
    return mn;
}

bool ModelSpec::bounded() const { return std::isfinite(pressure_upper); }

double ModelSpec::reaction(int i, const Point& u) const {
    return gain(i, u) - u[i] * loss(i, u);
}

Point ModelSpec::a_map(const Point& u) const {
    Point a(species);
    for (int i = 0; i < species; ++i) a[i] = pressure(i, u) * u[i];
    return a;
}

ModelSpec builtin_model(const std::string& name,
                        const std::map<std::string, double>& params) {
    ParamReader pr(params);
    ModelSpec spec;
    if (name == "scalar_heat")
        spec = make_scalar_heat(pr);
    else if (name == "skt")
        spec = make_skt(pr);
    else if (name == "skt_concave")
        spec = make_skt_concave(pr);
    else if (name == "bounded_quadratic")
        spec = make_bounded(pr, false);
    else if (name == "bounded_superquadratic")
        spec = make_bounded(pr, true);
    else
        throw std::invalid_argument("builtin_model: unknown model '" + name +
                                    "'");
    pr.finish(name);
    return spec;
}

ModelEval eval_model_at(const ModelSpec& model, const Point& u,
                        bool with_derivatives) {
    require_state(model, u, "eval_model_at");
    ModelEval ev;
    ev.pressures.resize(model.species);
    ev.reactions.resize(model.species);
    for (int i = 0; i < model.species; ++i) {
        ev.pressures[i] = model.pressure(i, u);
        ev.reactions[i] = model.reaction(i, u);
    }
    if (model.entropy) ev.entropy = model.entropy(u);
    if (!with_derivatives) return ev;

    for (double v : u)
        if (v == 0.0)
            throw std::invalid_argument(
                "eval_model_at: derivatives require a strictly interior point");
    if (model.entropy_gradient) ev.entropy_gradient = model.entropy_gradient(u);
    if (model.entropy_hessian) ev.entropy_hessian = model.entropy_hessian(u);
    if (model.diffusion_jacobian)
        ev.diffusion_jacobian = model.diffusion_jacobian(u);
    return ev;
}

Point invert_A(const ModelSpec& model, const Point& w) {
    require_state(model, w, "invert_A");
    const int ns = model.species;
    std::vector<int> free_idx;
    for (int i = 0; i < ns; ++i)
        if (w[i] > 0.0) free_idx.push_back(i);

    Point x(ns, 0.0);
    if (free_idx.empty()) return x;
    for (int i : free_idx) x[i] = w[i];  // initial guess

    const double wscale = *std::max_element(w.begin(), w.end());
    const int nf = static_cast<int>(free_idx.size());
    auto residual_norm = [&](const Point& p) {
        double r = 0.0;
        const Point a = model.a_map(p);
        for (int i : free_idx) r = std::max(r, std::abs(a[i] - w[i]));
        return r;
    };

    double res = residual_norm(x);
    for (int iter = 0; iter < 100; ++iter) {
        if (res <= 1e-10 * wscale) return x;
        const SquareMatrix ja = model.diffusion_jacobian(x);
        std::vector<double> jf(nf * nf), rhs(nf);
        const Point a = model.a_map(x);
        for (int r = 0; r < nf; ++r) {
            rhs[r] = w[free_idx[r]] - a[free_idx[r]];
            for (int c = 0; c < nf; ++c) {
                const double v = ja(free_idx[r], free_idx[c]);
                if (!std::isfinite(v))
                    throw std::runtime_error(
                        "invert_A: diffusion Jacobian not finite at iterate");
                jf[r * nf + c] = v;
            }
        }
        const std::vector<double> delta = detail::dense_solve(jf, rhs, nf);

        double alpha = 1.0;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings, alpha *= 0.5) {
            Point cand = x;
            bool positive = true;
            for (int r = 0; r < nf; ++r) {
                cand[free_idx[r]] += alpha * delta[r];
                if (!(cand[free_idx[r]] > 0.0)) {
                    positive = false;
                    break;
                }
            }
            if (!positive) continue;
            const double cand_res = residual_norm(cand);
            if (cand_res < res * (1.0 - 1e-4 * alpha)) {
                x = cand;
                res = cand_res;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw std::runtime_error(
                "invert_A: Newton stalled; A may not be invertible here");
    }
    throw std::runtime_error("invert_A: no convergence in 100 iterations");
}

StructureReport check_structure(const ModelSpec& model, int sample_count,
                                double box_size, std::uint64_t seed) {
    if (sample_count < 1)
        throw std::invalid_argument("check_structure: sample_count must be >= 1");
    if (!(box_size > 1e-6))
        throw std::invalid_argument("check_structure: box_size must exceed 1e-6");

    StructureReport report;
    report.model = model.name;
    report.samples = sample_count;
    report.box = box_size;

    const bool has_entropy = static_cast<bool>(model.entropy) &&
                             static_cast<bool>(model.entropy_gradient) &&
                             static_cast<bool>(model.entropy_hessian) &&
                             static_cast<bool>(model.diffusion_jacobian);

    std::mt19937_64 rng(seed);
    WorstCase pressure_pos, split_nonneg, bounds, mass, convex, dissip, compat,
        uniform;
    double mass_scale = 1.0, compat_scale = 1.0, dissip_scale = 1.0,
           uniform_scale = 1.0;
    WorstCase entropy_nonneg;

    for (int s = 0; s < sample_count; ++s) {
        const Point u = sample_log_uniform(rng, model.species, 1e-6, box_size);
        double usum = 0.0;
        for (double v : u) usum += v;

        double rsum = 0.0;
        for (int i = 0; i < model.species; ++i) {
            const double p = model.pressure(i, u);
            pressure_pos.offer(p, u);
            if (model.bounded())
                bounds.offer(std::min(p - model.pressure_lower,
                                      model.pressure_upper - p),
                             u);
            split_nonneg.offer(model.gain(i, u), u);
            split_nonneg.offer(model.loss(i, u), u);
            rsum += model.reaction(i, u);
        }
        const double mass_rhs = model.mass_constant * (1.0 + usum);
        mass.offer(mass_rhs - rsum, u);
        mass_scale = std::max(mass_scale, std::abs(mass_rhs));

        if (!has_entropy) continue;
        const double hval = model.entropy(u);
        entropy_nonneg.offer(hval, u);
        const SquareMatrix hess = model.entropy_hessian(u);
        const SquareMatrix ja = model.diffusion_jacobian(u);
        convex.offer(min_symmetric_eigenvalue(hess), u);

        SquareMatrix prod(model.species);
        for (int i = 0; i < model.species; ++i)
            for (int j = 0; j < model.species; ++j) {
                double v = 0.0;
                for (int k = 0; k < model.species; ++k)
                    v += hess(i, k) * ja(k, j);
                prod(i, j) = v;
            }
        double prod_scale = 0.0;
        for (double v : prod.a) prod_scale = std::max(prod_scale, std::abs(v));
        dissip.offer(min_symmetric_eigenvalue(prod), u);
        dissip_scale = std::max(dissip_scale, prod_scale);

        if (!model.uniform_floor.empty()) {
            SquareMatrix shifted = prod;
            for (int i = 0; i < model.species; ++i)
                shifted(i, i) -= model.uniform_floor[i](u[i]);
            uniform.offer(min_symmetric_eigenvalue(shifted), u);
            uniform_scale = std::max(uniform_scale, prod_scale);
        }

        const Point grad = model.entropy_gradient(u);
        double gr = 0.0;
        for (int i = 0; i < model.species; ++i)
            gr += grad[i] * model.reaction(i, u);
        const double compat_rhs =
            model.entropy_constant * (1.0 + usum + hval);
        compat.offer(compat_rhs - gr, u);
        compat_scale = std::max(compat_scale, std::abs(compat_rhs));
    }

    // Quasi-positivity: R_i >= 0 on the face u_i = 0.
    WorstCase quasi;
    const int face_samples = std::max(1, sample_count / 10);
    for (int i = 0; i < model.species; ++i)
        for (int s = 0; s < face_samples; ++s) {
            Point u = sample_log_uniform(rng, model.species, 1e-6, box_size);
            u[i] = 0.0;
            quasi.offer(model.reaction(i, u), u);
        }

    report.records.push_back(finish_record("pressure_positive", pressure_pos, 1.0));
    report.records.push_back(
        finish_record("reaction_split_nonneg", split_nonneg, 1.0));
    if (model.bounded()) {
        report.records.push_back(finish_record("pressure_bounds", bounds, 1.0));
    } else {
        HypothesisRecord rec;
        rec.hypothesis = "pressure_bounds";
        rec.skipped = true;
        rec.pass = true;
        rec.note = "pressures unbounded above; no upper bound declared";
        report.records.push_back(rec);
    }
    report.records.push_back(finish_record("mass_control", mass, mass_scale));
    report.records.push_back(finish_record("quasi_positivity", quasi, 1.0));

    if (has_entropy) {
        report.records.push_back(
            finish_record("entropy_nonneg", entropy_nonneg, 1.0));
        report.records.push_back(finish_record("entropy_convex", convex, 1.0));
        report.records.push_back(
            finish_record("entropy_dissip", dissip, dissip_scale));
        report.records.push_back(
            finish_record("entropy_compatible", compat, compat_scale));
        if (!model.uniform_floor.empty()) {
            report.records.push_back(
                finish_record("entropy_uniform", uniform, uniform_scale));
        } else {
            HypothesisRecord rec;
            rec.hypothesis = "entropy_uniform";
            rec.skipped = true;
            rec.pass = true;
            rec.note = "no closed-form diagonal floor supplied; check skipped";
            report.records.push_back(rec);
        }
    } else {
        for (const char* name :
             {"entropy_nonneg", "entropy_convex", "entropy_dissip",
              "entropy_compatible", "entropy_uniform"}) {
            HypothesisRecord rec;
            rec.hypothesis = name;
            rec.skipped = true;
            rec.pass = true;
            rec.note = "model declares no entropy structure";
            report.records.push_back(rec);
        }
    }
    return report;
}

GrowthReport check_reaction_growth(const ModelSpec& model, double p,
                                   int sample_count, std::uint64_t seed) {
    if (!(p > 1.0))
        throw std::invalid_argument("check_reaction_growth: p must exceed 1");
    if (sample_count < 12)
        throw std::invalid_argument("check_reaction_growth: too few samples");

    GrowthReport report;
    report.model = model.name;
    report.p = p;

    constexpr int kShells = 6;
    const int per_shell = sample_count / kShells;
    std::mt19937_64 rng(seed);
    for (int shell = 0; shell < kShells; ++shell) {
        const double radius = std::pow(10.0, shell);
        const double lo = radius / 10.0;
        double worst = 0.0;
        for (int s = 0; s < per_shell; ++s) {
            // Magnitude log-uniform in (radius/10, radius], random direction.
            const double rho =
                std::exp(std::log(lo) +
                         std::log(10.0) * detail::uniform01(rng));
            Point u = sample_log_uniform(rng, model.species, 1e-3, 1.0);
            double mx = *std::max_element(u.begin(), u.end());
            for (double& v : u) v *= rho / mx;
            Point r(model.species);
            for (int i = 0; i < model.species; ++i) r[i] = model.reaction(i, u);
            const double ratio =
                point_norm2(r) / (1.0 + std::pow(point_norm2(u), p));
            worst = std::max(worst, ratio);
        }
        report.shells.push_back({radius, worst});
    }

    // Decreasing tail: strictly falling over the outer half with real decay.
    const int half = kShells / 2;
    bool falling = true;
    for (int j = half; j < kShells; ++j)
        if (report.shells[j].max_ratio >
            report.shells[j - 1].max_ratio * (1.0 + 1e-9))
            falling = false;
    const double mid = report.shells[half].max_ratio;
    const double last = report.shells.back().max_ratio;
    report.decreasing = (last == 0.0) || (falling && last <= 0.95 * mid);
    return report;
}

}  // namespace crossdiff
