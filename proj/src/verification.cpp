#include "fmflow/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "fmflow/chain.hpp"
#include "fmflow/errors.hpp"
#include "fmflow/parallel.hpp"

namespace fmflow {

namespace {

std::vector<Rational> truncated_product(const std::vector<Rational>& p, const std::vector<Rational>& q, int order) {
    // p, q, result: index i holds the coefficient of y^(i+1).
    std::vector<Rational> out(static_cast<std::size_t>(order), Rational(0));
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0) continue;
        for (std::size_t j = 0; j < q.size() && i + j + 2 <= static_cast<std::size_t>(order); ++j)
            out[i + j + 1] += p[i] * q[j];
    }
    return out;
}

}  // namespace

std::vector<Rational> polynomial_oracle_compose(std::span<const Rational> outer, std::span<const Rational> inner,
                                                int order) {
    if (order <= 0) order = static_cast<int>(std::min(outer.size(), inner.size()));
    if (order <= 0) throw DomainError("polynomial_oracle_compose: empty coefficient list");
    std::vector<Rational> base(static_cast<std::size_t>(order), Rational(0));
    for (std::size_t i = 0; i < inner.size() && i < base.size(); ++i) base[i] = inner[i];

    std::vector<Rational> result(static_cast<std::size_t>(order), Rational(0));
    std::vector<Rational> power = base;  // inner(y)^k, truncated
    for (int k = 1; k <= order; ++k) {
        if (k > 1) power = truncated_product(power, base, order);
        if (static_cast<std::size_t>(k) > outer.size()) break;
        const Rational& c = outer[static_cast<std::size_t>(k - 1)];
        for (std::size_t i = 0; i < result.size(); ++i) result[i] += c * power[i];
    }
    return result;
}

std::vector<Rational> polynomial_oracle_compose(std::span<const double> outer, std::span<const double> inner, int order) {
    std::vector<Rational> o(outer.begin(), outer.end());
    std::vector<Rational> i(inner.begin(), inner.end());
    return polynomial_oracle_compose(std::span<const Rational>(o), std::span<const Rational>(i), order);
}

double gbm_closed_form(double alpha, double beta, double t, double w_t) {
    return std::exp((alpha - 0.5 * beta * beta) * t + beta * w_t);
}

double bernoulli_closed_form(double alpha, double gamma, double y0, double t) {
    if (alpha == 0.0) return y0 / (1.0 - gamma * y0 * t);
    const double g = std::exp(alpha * t);
    return alpha * y0 * g / (alpha - gamma * y0 * (g - 1.0));
}

double second_component_closed_form(double alpha, double gamma, double t) {
    if (alpha == 0.0) return gamma * t;
    const double g = std::exp(alpha * t);
    return gamma * g * (g - 1.0) / alpha;
}

namespace {

CoefficientFamily scalar_family(std::vector<double> drift, std::vector<double> diffusion) {
    const auto order = static_cast<int>(std::max(drift.size(), diffusion.size()));
    drift.resize(static_cast<std::size_t>(order), 0.0);
    diffusion.resize(static_cast<std::size_t>(order), 0.0);
    std::vector<DiffusionTensor> b;
    for (int k = 1; k <= order; ++k)
        b.emplace_back(k, 1, 1, std::vector<double>{diffusion[static_cast<std::size_t>(k - 1)]});
    return CoefficientFamily::constant(scalar_mapping(drift), DiffusionFamily(std::move(b)));
}

}  // namespace

ConvergenceProblem gbm_problem(double alpha, double beta, double horizon) {
    auto coeffs = scalar_family({alpha}, {beta});
    ConvergenceProblem p;
    p.name = "gbm";
    p.horizon = horizon;
    p.noise_dim = 1;
    p.stochastic = beta != 0.0;
    p.error = [coeffs, alpha, beta, horizon](const BrownianPath& path) {
        const auto sol = solve_chain(coeffs, identity(1, 1), path);
        const double w = path.value_at(path.grid().steps())[0];
        return std::abs(sol.final_state().component(1).entries()[0] - gbm_closed_form(alpha, beta, horizon, w));
    };
    return p;
}

ConvergenceProblem bernoulli_problem(double alpha, double gamma, double y0, double horizon) {
    auto coeffs = scalar_family({alpha, gamma}, {0.0, 0.0});
    ConvergenceProblem p;
    p.name = "bernoulli";
    p.horizon = horizon;
    p.stochastic = false;
    p.error = [coeffs, alpha, gamma, y0](const BrownianPath& path) {
        const std::vector<double> start{y0};
        const auto traj = simulate_direct(coeffs, start, path);
        double worst = 0.0;
        for (int i = 0; i <= path.grid().steps(); ++i) {
            const double exact = bernoulli_closed_form(alpha, gamma, y0, path.grid().knot(i));
            worst = std::max(worst, std::abs(traj[static_cast<std::size_t>(i)][0] - exact));
        }
        return worst;
    };
    return p;
}

ConvergenceProblem second_component_problem(double alpha, double gamma, double horizon) {
    auto coeffs = scalar_family({alpha, gamma}, {0.0, 0.0});
    ConvergenceProblem p;
    p.name = "second_component";
    p.horizon = horizon;
    p.stochastic = false;
    p.error = [coeffs, alpha, gamma, horizon](const BrownianPath& path) {
        const auto sol = solve_chain(coeffs, identity(2, 1), path);
        return std::abs(sol.final_state().component(2).entries()[0] -
                        second_component_closed_form(alpha, gamma, horizon));
    };
    return p;
}

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("fit_loglog_slope: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / sxx;
}

ConvergenceReport estimate_order(const ConvergenceProblem& problem, std::span<const int> steps, int paths,
                                 std::uint64_t seed) {
    if (steps.size() < 3) throw DomainError("estimate_order: need at least three step counts");
    if (paths < 1) throw DomainError("estimate_order: path count must be >= 1");
    if (!problem.error) throw DomainError("estimate_order: problem has no error functional");
    const int finest = *std::max_element(steps.begin(), steps.end());
    for (int n : steps)
        if (n < 1 || finest % n != 0) throw DomainError("estimate_order: every step count must divide the largest");

    const int used_paths = problem.stochastic ? paths : 1;
    const TimeGrid fine_grid(0.0, problem.horizon, finest);

    auto per_path = ordered_parallel_map(static_cast<std::size_t>(used_paths), [&](std::size_t p) {
        const auto fine = sample_path(fine_grid, problem.noise_dim, seed, p);
        std::optional<std::vector<double>> errs(std::in_place);
        try {
            for (int n : steps) errs->push_back(problem.error(fine.coarsen(finest / n)));
        } catch (const NumericalBlowup&) {
            errs.reset();
        }
        return errs;
    });

    ConvergenceReport report;
    report.problem = problem.name;
    report.seed = seed;
    report.steps.assign(steps.begin(), steps.end());
    for (int n : steps) report.step_sizes.push_back(problem.horizon / n);

    std::vector<double> sum(steps.size(), 0.0), sumsq(steps.size(), 0.0);
    for (const auto& e : per_path) {
        if (!e) {
            ++report.excluded;
            continue;
        }
        ++report.paths;
        for (std::size_t l = 0; l < steps.size(); ++l) {
            sum[l] += (*e)[l];
            sumsq[l] += (*e)[l] * (*e)[l];
        }
    }
    if (report.excluded * 100 > used_paths)
        throw TooManyBlowups("estimate_order: " + std::to_string(report.excluded) + " of " + std::to_string(used_paths) +
                          " paths blew up (more than 1%)");
    const double n = report.paths;
    for (std::size_t l = 0; l < steps.size(); ++l) {
        const double mean = sum[l] / n;
        const double var = n > 1 ? std::max(0.0, (sumsq[l] - n * mean * mean) / (n - 1)) : 0.0;
        report.errors.push_back(mean);
        report.half_widths.push_back(1.96 * std::sqrt(var / n));
    }
    report.slope = fit_loglog_slope(report.step_sizes, report.errors);
    return report;
}

ScalingReport truncation_scaling(const CoefficientFamily& coeffs, const TimeGrid& grid, std::span<const double> y0_base,
                                 int halvings) {
    if (halvings < 1) throw DomainError("truncation_scaling: need at least one halving");
    if (static_cast<int>(y0_base.size()) != coeffs.dim()) throw DomainError("truncation_scaling: y0 dimension mismatch");
    for (int i = 0; i <= grid.steps(); ++i)
        if (!coeffs.diffusion(grid.knot(i)).is_zero())
            throw DomainError("truncation_scaling: diffusion must vanish (deterministic case only)");

    const auto path = BrownianPath::zero(grid, coeffs.noise_dim());
    const auto chain = solve_chain(coeffs, identity(coeffs.order(), coeffs.dim()), path);
    const auto& flow = chain.final_state();

    ScalingReport report;
    report.expected_ratio = std::ldexp(1.0, coeffs.order() + 1);
    double base_norm = 0.0;
    for (double v : y0_base) base_norm += v * v;
    base_norm = std::sqrt(base_norm);

    constexpr double kEps = std::numeric_limits<double>::epsilon();
    for (int i = 0; i <= halvings; ++i) {
        std::vector<double> y0(y0_base.begin(), y0_base.end());
        for (double& v : y0) v = std::ldexp(v, -i);
        const auto series = evaluate(flow, y0);
        const auto direct = simulate_direct(coeffs, y0, path).back();
        double gap = 0.0, size = 0.0;
        for (std::size_t r = 0; r < y0.size(); ++r) {
            gap += (series[r] - direct[r]) * (series[r] - direct[r]);
            size += direct[r] * direct[r];
        }
        gap = std::sqrt(gap);
        report.magnitudes.push_back(std::ldexp(base_norm, -i));
        report.gaps.push_back(gap);
        report.reliable.push_back(gap >= 100.0 * kEps * std::sqrt(size) && gap > 0.0);
    }
    for (int i = 0; i < halvings; ++i) {
        const auto u = static_cast<std::size_t>(i);
        report.ratios.push_back(report.reliable[u] && report.reliable[u + 1] ? report.gaps[u] / report.gaps[u + 1]
                                                                             : std::numeric_limits<double>::quiet_NaN());
    }
    return report;
}

namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json numbers(const std::vector<double>& v) {
    auto out = nlohmann::json::array();
    for (double x : v) out.push_back(number_or_null(x));
    return out;
}

}  // namespace

nlohmann::json to_json(const ConvergenceReport& r) {
    return {{"problem", r.problem},   {"steps", r.steps},           {"step_sizes", numbers(r.step_sizes)},
            {"errors", numbers(r.errors)}, {"half_widths", numbers(r.half_widths)}, {"slope", number_or_null(r.slope)},
            {"paths", r.paths},       {"excluded", r.excluded},     {"seed", r.seed}};
}

nlohmann::json to_json(const ScalingReport& r) {
    return {{"magnitudes", numbers(r.magnitudes)},
            {"gaps", numbers(r.gaps)},
            {"ratios", numbers(r.ratios)},
            {"reliable", r.reliable},
            {"expected_ratio", r.expected_ratio}};
}

std::string to_csv(const ConvergenceReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "steps,dt,error,half_width\n";
    for (std::size_t i = 0; i < r.steps.size(); ++i)
        os << r.steps[i] << ',' << r.step_sizes[i] << ',' << r.errors[i] << ',' << r.half_widths[i] << '\n';
    return os.str();
}

std::string to_csv(const ScalingReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "magnitude,gap,reliable,ratio_to_next\n";
    for (std::size_t i = 0; i < r.gaps.size(); ++i) {
        os << r.magnitudes[i] << ',' << r.gaps[i] << ',' << (r.reliable[i] ? 1 : 0) << ',';
        if (i < r.ratios.size() && std::isfinite(r.ratios[i])) os << r.ratios[i];
        os << '\n';
    }
    return os.str();
}

}  // namespace fmflow
