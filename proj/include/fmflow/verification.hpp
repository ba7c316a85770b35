#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "fmflow/brownian.hpp"
#include "fmflow/coefficients.hpp"
#include "fmflow/errors.hpp"

namespace fmflow {

using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Closed forms and the polynomial substitution oracle

/// Coefficients (index k-1 holds y^k) of outer(inner(y)) truncated at y^order,
/// by exact polynomial multiplication. order defaults to the shorter list.
std::vector<Rational> polynomial_oracle_compose(std::span<const Rational> outer, std::span<const Rational> inner,
                                                int order = 0);
/// Same, with the double inputs converted to rationals exactly.
std::vector<Rational> polynomial_oracle_compose(std::span<const double> outer, std::span<const double> inner,
                                                int order = 0);

/// exp((alpha - beta^2 / 2) t + beta w_t): the linear scalar flow dS = alpha S dt + beta S dw, S(0) = 1.
double gbm_closed_form(double alpha, double beta, double t, double w_t);

/// Solution of y' = alpha y + gamma y^2, y(0) = y0.
double bernoulli_closed_form(double alpha, double gamma, double y0, double t);

/// S_2(t) for the scalar drift (alpha, gamma) without noise:
/// gamma e^{alpha t} (e^{alpha t} - 1) / alpha (gamma t when alpha = 0).
double second_component_closed_form(double alpha, double gamma, double t);

// ---------------------------------------------------------------------------
// Strong convergence

/// A scheme-versus-oracle error functional on [0, horizon].
struct ConvergenceProblem {
    std::string name;
    double horizon = 1.0;
    int noise_dim = 1;
    /// False when the error does not depend on the path; one path is then used.
    bool stochastic = true;
    /// Error of the scheme on the given (possibly coarsened) path. May throw
    /// NumericalBlowup, in which case the path is excluded.
    std::function<double(const BrownianPath&)> error;
};

/// |S_1(T) - exp((alpha - beta^2/2) T + beta w_T)| for the scalar linear chain.
ConvergenceProblem gbm_problem(double alpha, double beta, double horizon = 1.0);
/// max_i |y_i - y(t_i)| for the direct scheme on y' = alpha y + gamma y^2.
ConvergenceProblem bernoulli_problem(double alpha, double gamma, double y0, double horizon = 1.0);
/// |S_2(T) - closed form| for the scalar drift (alpha, gamma), no noise.
ConvergenceProblem second_component_problem(double alpha, double gamma, double horizon = 1.0);

struct ConvergenceReport {
    std::string problem;
    std::vector<int> steps;
    std::vector<double> step_sizes;
    /// Mean error over the retained paths, per step size.
    std::vector<double> errors;
    /// 1.96 * sample standard deviation / sqrt(paths), per step size.
    std::vector<double> half_widths;
    /// More than 1% of the paths in a convergence study blew up.
class TooManyBlowups : public DomainError {
public:
    using DomainError::DomainError;
};

/// Least-squares slope of log(error) against log(dt); NaN when fewer
    /// than two errors are positive.
    double slope = 0.0;
    int paths = 0;
    int excluded = 0;
    std::uint64_t seed = 0;
};

/// More than 1% of the paths in a convergence study blew up.
class TooManyBlowups : public DomainError {
public:
    using DomainError::DomainError;
};

/// Least-squares slope of log(y) against log(x) over points with x, y > 0.
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

/// Strong-error study on nested grids. Each path is sampled once on the
/// finest grid and coarsened by summing increments, so all levels share it.
/// `steps` needs at least three entries, each dividing the largest.
/// Throws TooManyBlowups when more than 1% of the paths blow up.
ConvergenceReport estimate_order(const ConvergenceProblem& problem, std::span<const int> steps, int paths,
                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Truncation scaling

struct ScalingReport {
    std::vector<double> magnitudes;
    std::vector<double> gaps;
    /// gaps[i] / gaps[i+1]; NaN where either gap is unreliable.
    std::vector<double> ratios;
    std::vector<bool> reliable;
    double expected_ratio = 0.0;
};

/// gap_i = |evaluate(S(T, 0), y_i) - direct(y_i)| for y_i = y0_base / 2^i,
/// i = 0..halvings, both on the zero-noise path of `grid`. A gap below
/// 100 * epsilon * |direct(y_i)| is flagged unreliable. Requires b = 0.
ScalingReport truncation_scaling(const CoefficientFamily& coeffs, const TimeGrid& grid, std::span<const double> y0_base,
                                 int halvings);

nlohmann::json to_json(const ConvergenceReport& report);
nlohmann::json to_json(const ScalingReport& report);
std::string to_csv(const ConvergenceReport& report);
std::string to_csv(const ScalingReport& report);

}  // namespace fmflow
