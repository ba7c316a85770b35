#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "fmflow/brownian.hpp"
#include "fmflow/chain.hpp"
#include "fmflow/errors.hpp"
#include "fmflow/explicit_formula.hpp"
#include "fmflow/parallel.hpp"
#include "fmflow/tensor_json.hpp"
#include "fmflow/verification.hpp"

namespace fmflow::cli {

using nlohmann::json;

const std::vector<std::string> kSubcommands{"solve",        "compose-check", "evolution-check",
                                            "taylor-check", "formula-check", "convergence"};

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw DomainError("config." + field + ": " + message);
}

const std::vector<std::string> kKnownFields{"dy",      "m",          "order",     "horizon",  "steps",
                                            "seed",    "paths",      "drift",     "diffusion", "random",
                                            "initial", "split_knot", "tolerance", "y0",       "halvings",
                                            "schedule", "problem",   "outer",     "inner"};

int get_int(const json& j, const std::string& key, const std::string& field) {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) fail(field, "expected an integer");
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail(field, "out of range");
    return static_cast<int>(x);
}

std::uint64_t get_seed(const json& j, const std::string& key, const std::string& field) {
    const auto& v = j.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    fail(field, "expected a non-negative integer");
}

double get_double(const json& j, const std::string& key, const std::string& field) {
    const auto& v = j.at(key);
    if (!v.is_number()) fail(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field, "must be finite");
    return x;
}

bool get_bool(const json& j, const std::string& key, const std::string& field) {
    const auto& v = j.at(key);
    if (!v.is_boolean()) fail(field, "expected true or false");
    return v.get<bool>();
}

void require_object(const json& j, const std::string& field, const std::vector<std::string>& known) {
    if (!j.is_object()) fail(field, "expected an object");
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end()) fail(field + "." + key, "unknown field");
}

std::string hex64(std::uint64_t x) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << x;
    return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void check_mapping_shape(const FormalMapping& a, int order, int dim, const std::string& field) {
    if (a.order() != order)
        fail(field, "order " + std::to_string(a.order()) + " does not match order " + std::to_string(order));
    if (a.domain_dim() != dim || a.codomain_dim() != dim)
        fail(field, "dimensions " + std::to_string(a.domain_dim()) + "->" + std::to_string(a.codomain_dim()) +
                        " do not match dy = " + std::to_string(dim));
}

void validate(const ExperimentConfig& c) {
    if (c.dy < 1) fail("dy", "must be >= 1");
    if (c.m < 1) fail("m", "must be >= 1");
    if (c.order < 1) fail("order", "must be >= 1");
    if (!(c.horizon > 0.0)) fail("horizon", "must be > 0");
    if (c.steps < 1) fail("steps", "must be >= 1");
    if (c.paths < 1) fail("paths", "must be >= 1");
    if (c.halvings < 1) fail("halvings", "must be >= 1");
    if (c.random && (c.drift || c.diffusion)) fail("random", "cannot be combined with drift or diffusion");
    if (c.drift) check_mapping_shape(*c.drift, c.order, c.dy, "drift");
    if (c.diffusion) {
        if (c.diffusion->order() != c.order) fail("diffusion", "order does not match order " + std::to_string(c.order));
        if (c.diffusion->dim() != c.dy) fail("diffusion", "dy does not match dy = " + std::to_string(c.dy));
        if (c.diffusion->noise_dim() != c.m) fail("diffusion", "noise_dim does not match m = " + std::to_string(c.m));
    }
    if (c.initial) check_mapping_shape(*c.initial, c.order, c.dy, "initial");
    if (c.split_knot && (*c.split_knot <= 0 || *c.split_knot >= c.steps))
        fail("split_knot", "must lie strictly between 0 and steps = " + std::to_string(c.steps));
    if (c.tolerance && !(*c.tolerance > 0.0)) fail("tolerance", "must be > 0");
    if (!c.y0.empty() && static_cast<int>(c.y0.size()) != c.dy)
        fail("y0", "needs dy = " + std::to_string(c.dy) + " entries");
    if (c.schedule.size() < 3) fail("schedule", "needs at least three step counts");
    const int finest = *std::max_element(c.schedule.begin(), c.schedule.end());
    for (int n : c.schedule)
        if (n < 1 || finest % n != 0) fail("schedule", "every step count must be positive and divide the largest");
    const auto& kind = c.problem.kind;
    if (kind != "gbm" && kind != "bernoulli" && kind != "second-component")
        fail("problem.kind", "expected gbm, bernoulli or second-component, got '" + kind + "'");
}

// Uniform in [-scale, scale] from the top 53 bits of mt19937_64, whose
// output sequence is fixed by the standard.
class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : rng_(seed) {}
    double operator()(double scale) { return scale * (2.0 * static_cast<double>(rng_() >> 11) * 0x1.0p-53 - 1.0); }

private:
    std::mt19937_64 rng_;
};

std::pair<FormalMapping, DiffusionFamily> random_coefficients(const ExperimentConfig& c, const RandomInstance& r) {
    Uniform u(r.seed);
    std::vector<MultilinearMap> drift;
    for (int k = 1; k <= c.order; ++k) {
        std::vector<double> e(static_cast<std::size_t>(c.dy) * ipow(static_cast<std::size_t>(c.dy), k));
        for (auto& x : e) x = u(r.drift_scale);
        drift.emplace_back(k, c.dy, c.dy, std::move(e));
    }
    std::vector<DiffusionTensor> diffusion;
    for (int k = 1; k <= c.order; ++k) {
        std::vector<double> e(static_cast<std::size_t>(c.dy) * ipow(static_cast<std::size_t>(c.dy), k) *
                              static_cast<std::size_t>(c.m));
        for (auto& x : e) x = u(r.noise_scale);
        if (k == 1 && !r.linear_noise) std::fill(e.begin(), e.end(), 0.0);
        diffusion.emplace_back(k, c.dy, c.m, std::move(e));
    }
    return {FormalMapping(std::move(drift)), DiffusionFamily(std::move(diffusion))};
}

json grid_json(const TimeGrid& g) { return {{"start", g.start()}, {"end", g.end()}, {"steps", g.steps()}}; }

std::string trajectory_csv(const ChainSolution& sol) {
    std::ostringstream os;
    os << std::setprecision(17) << "knot,t";
    const int order = sol.initial.order();
    for (int k = 1; k <= order; ++k) os << ",S" << k;
    os << '\n';
    for (std::size_t i = 0; i < sol.states.size(); ++i) {
        os << i << ',' << sol.grid.knot(static_cast<int>(i));
        for (int k = 1; k <= order; ++k) os << ',' << sol.states[i].component(k).frobenius_norm();
        os << '\n';
    }
    return os.str();
}

std::string verdict(bool passed) { return passed ? "PASS" : "FAIL"; }

std::string sci(double x) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(3) << x;
    return os.str();
}

TimeGrid config_grid(const ExperimentConfig& c) { return TimeGrid(0.0, c.horizon, c.steps); }

RunResult run_solve(const ExperimentConfig& c) {
    const auto coeffs = coefficients(c);
    const auto path = sample_path(config_grid(c), c.m, c.seed, 0);
    const auto sol = solve_chain(coeffs, c.initial ? *c.initial : identity(c.order, c.dy), path);

    RunResult r;
    json states = json::array();
    for (const auto& s : sol.states) states.push_back(fmflow::to_json(s));
    r.results = {{"grid", grid_json(sol.grid)},
                 {"coefficient_fingerprint", hex64(sol.coefficient_fingerprint)},
                 {"seed", sol.seed},
                 {"path_index", sol.path_index},
                 {"initial", fmflow::to_json(sol.initial)},
                 {"states", std::move(states)}};
    r.csv.emplace_back("trajectory.csv", trajectory_csv(sol));
    r.summary = "solve: " + std::to_string(sol.states.size()) + " knots, |S_1(T)| = " +
                sci(sol.final_state().component(1).frobenius_norm());
    return r;
}

RunResult run_compose_check(const ExperimentConfig& c) {
    if (!c.outer) fail("outer", "required by compose-check");
    if (!c.inner) fail("inner", "required by compose-check");
    const auto& a = *c.outer;
    const auto& b = *c.inner;
    if (a.domain_dim() != b.codomain_dim())
        fail("inner", "codomain dimension " + std::to_string(b.codomain_dim()) + " does not match the outer domain " +
                          std::to_string(a.domain_dim()));
    const auto result = compose(a, b);
    const bool identity_exact = compose(identity(a.order(), a.codomain_dim()), a) == a &&
                                compose(a, identity(a.order(), a.domain_dim())) == a &&
                                compose(identity(b.order(), b.codomain_dim()), b) == b &&
                                compose(b, identity(b.order(), b.domain_dim())) == b;
    const double tol = c.tolerance.value_or(1e-12);

    RunResult r;
    r.results = {{"result", fmflow::to_json(result)}, {"identity_exact", identity_exact}};
    bool passed = identity_exact;
    std::string detail;
    if (result.domain_dim() == 1 && result.codomain_dim() == 1) {
        const auto got = scalar_coefficients(result);
        const auto oracle = polynomial_oracle_compose(scalar_coefficients(a), scalar_coefficients(b), result.order());
        bool exact = true;
        double num = 0.0, den = 0.0;
        json oracle_json = json::array();
        for (std::size_t i = 0; i < got.size(); ++i) {
            exact = exact && Rational(got[i]) == oracle[i];
            const double e = oracle[i].convert_to<double>();
            num += (got[i] - e) * (got[i] - e);
            den += e * e;
            oracle_json.push_back(oracle[i].str());
        }
        const double rel = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
        r.results["coefficients"] = got;
        r.results["oracle"] = std::move(oracle_json);
        r.results["oracle_exact"] = exact;
        r.results["relative_error"] = rel;
        r.results["tolerance"] = tol;
        passed = passed && rel <= tol;
        std::ostringstream os;
        for (std::size_t i = 0; i < got.size(); ++i) os << (i ? "," : "(") << got[i];
        detail = " coefficients " + os.str() + ") vs oracle: relative error " + sci(rel) + (exact ? " (exact)" : "");
    }
    r.results["passed"] = passed;
    r.exit_code = passed ? kOk : kCheckFailed;
    r.summary = "compose-check:" + detail + (identity_exact ? "" : " identity laws violated") + " " + verdict(passed);
    return r;
}

RunResult run_evolution_check(const ExperimentConfig& c) {
    if (c.steps < 2) fail("steps", "evolution-check needs at least 2 steps");
    const auto coeffs = coefficients(c);
    const auto grid = config_grid(c);
    const int split = c.split_knot.value_or(c.steps / 2);
    const double tol = c.tolerance.value_or(1e-10);
    const auto reports = ordered_parallel_map(static_cast<std::size_t>(c.paths), [&](std::size_t p) {
        return evolution_check(coeffs, sample_path(grid, c.m, c.seed, p), split);
    });

    RunResult r;
    double worst = 0.0;
    json per_path = json::array();
    std::ostringstream csv;
    csv << std::setprecision(17) << "path_index,component,discrepancy\n";
    for (std::size_t p = 0; p < reports.size(); ++p) {
        const auto& e = reports[p];
        worst = std::max(worst, e.max_discrepancy);
        per_path.push_back({{"path_index", p},
                            {"discrepancies", e.discrepancies},
                            {"max_discrepancy", e.max_discrepancy},
                            {"exact", e.exact}});
        for (std::size_t k = 0; k < e.discrepancies.size(); ++k)
            csv << p << ',' << k + 1 << ',' << e.discrepancies[k] << '\n';
    }
    const bool passed = worst <= tol;
    r.results = {{"grid", grid_json(grid)},
                 {"split_knot", split},
                 {"tau", grid.knot(split)},
                 {"coefficient_fingerprint", hex64(coeffs.fingerprint())},
                 {"tolerance", tol},
                 {"paths", std::move(per_path)},
                 {"max_discrepancy", worst},
                 {"passed", passed}};
    r.csv.emplace_back("evolution.csv", csv.str());
    r.exit_code = passed ? kOk : kCheckFailed;
    r.summary = "evolution-check: max relative discrepancy " + sci(worst) + " over " + std::to_string(c.paths) +
                " path(s), tolerance " + sci(tol) + " " + verdict(passed);
    return r;
}

RunResult run_taylor_check(const ExperimentConfig& c) {
    const auto coeffs = coefficients(c);
    const std::vector<double> y0 = c.y0.empty() ? std::vector<double>(static_cast<std::size_t>(c.dy), 0.1) : c.y0;
    const auto report = truncation_scaling(coeffs, config_grid(c), y0, c.halvings);

    const double lo = report.expected_ratio / 2.0, hi = report.expected_ratio * 2.0;
    const bool any_reliable = std::any_of(report.reliable.begin(), report.reliable.end(), [](bool b) { return b; });
    bool passed = true;
    int checked = 0;
    for (double q : report.ratios) {
        if (std::isnan(q)) continue;
        ++checked;
        passed = passed && q >= lo && q <= hi;
    }
    // Gaps all at rounding level: the truncated series is the flow itself.
    const std::string mode = any_reliable ? "scaling" : "machine_precision";
    if (any_reliable && checked == 0) passed = false;

    RunResult r;
    r.results = fmflow::to_json(report);
    r.results["y0"] = y0;
    r.results["window"] = {lo, hi};
    r.results["mode"] = mode;
    r.results["passed"] = passed;
    r.csv.emplace_back("taylor.csv", to_csv(report));
    r.exit_code = passed ? kOk : kCheckFailed;
    std::ostringstream os;
    for (std::size_t i = 0; i < report.ratios.size(); ++i)
        os << (i ? ", " : "") << std::setprecision(4) << report.ratios[i];
    r.summary = "taylor-check: " +
                (any_reliable ? "gap ratios [" + os.str() + "], window [" + sci(lo) + ", " + sci(hi) + "]"
                              : std::string("all gaps at machine precision")) +
                " " + verdict(passed);
    return r;
}

RunResult run_formula_check(const ExperimentConfig& c) {
    if (c.order < 2) fail("order", "formula-check needs order >= 2");
    if (c.initial && !(*c.initial == identity(c.order, c.dy)))
        fail("initial", "formula-check starts from the identity");
    const auto coeffs = coefficients(c);
    const auto grid = config_grid(c);
    const double tol = c.tolerance.value_or(1e-9);
    const auto per_path = ordered_parallel_map(static_cast<std::size_t>(c.paths), [&](std::size_t p) {
        const auto path = sample_path(grid, c.m, c.seed, p);
        const auto chain = solve_chain(coeffs, identity(c.order, c.dy), path);
        std::vector<double> worst;
        for (int n = 2; n <= c.order; ++n) {
            const auto sn = variation_of_constants(n, coeffs, chain.states, path);
            double w = 0.0;
            for (std::size_t i = 1; i < sn.size(); ++i)
                w = std::max(w, relative_difference(sn[i], chain.states[i].component(n)));
            worst.push_back(w);
        }
        return worst;
    });

    RunResult r;
    double worst = 0.0;
    json paths = json::array();
    for (std::size_t p = 0; p < per_path.size(); ++p) {
        for (double w : per_path[p]) worst = std::max(worst, w);
        paths.push_back({{"path_index", p}, {"discrepancies", per_path[p]}});
    }
    const bool passed = worst <= tol;
    r.results = {{"grid", grid_json(grid)},
                 {"coefficient_fingerprint", hex64(coeffs.fingerprint())},
                 {"degrees", "2.." + std::to_string(c.order)},
                 {"tolerance", tol},
                 {"paths", std::move(paths)},
                 {"max_discrepancy", worst},
                 {"passed", passed}};
    r.exit_code = passed ? kOk : kCheckFailed;
    r.summary = "formula-check: max relative discrepancy " + sci(worst) + ", tolerance " + sci(tol) + " " +
                verdict(passed);
    return r;
}

RunResult run_convergence(const ExperimentConfig& c) {
    const auto& p = c.problem;
    ConvergenceProblem problem = p.kind == "gbm"         ? gbm_problem(p.alpha, p.beta, c.horizon)
                                 : p.kind == "bernoulli" ? bernoulli_problem(p.alpha, p.gamma, p.y0, c.horizon)
                                                         : second_component_problem(p.alpha, p.gamma, c.horizon);
    const auto report = estimate_order(problem, c.schedule, c.paths, c.seed);
    RunResult r;
    r.results = fmflow::to_json(report);
    r.csv.emplace_back("convergence.csv", to_csv(report));
    r.summary = "convergence: " + problem.name + " slope " + sci(report.slope) + " over " +
                std::to_string(report.paths) + " path(s)";
    return r;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void apply_overrides(json& j, const Overrides& o) {
    if (o.seed) j["seed"] = *o.seed;
    if (o.paths) j["paths"] = *o.paths;
    if (o.steps) j["steps"] = *o.steps;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw DomainError("config: expected a JSON object");
    for (const auto& [key, value] : j.items())
        if (std::find(kKnownFields.begin(), kKnownFields.end(), key) == kKnownFields.end())
            fail(key, "unknown field");

    ExperimentConfig c;
    if (j.contains("drift")) c.drift = formal_mapping_from_json(j.at("drift"), "config.drift");
    if (j.contains("diffusion")) c.diffusion = diffusion_family_from_json(j.at("diffusion"), "config.diffusion");
    if (j.contains("initial")) c.initial = formal_mapping_from_json(j.at("initial"), "config.initial");
    if (j.contains("outer")) c.outer = formal_mapping_from_json(j.at("outer"), "config.outer");
    if (j.contains("inner")) c.inner = formal_mapping_from_json(j.at("inner"), "config.inner");

    // Shapes default to those of the listed coefficients.
    if (c.drift) {
        c.dy = c.drift->domain_dim();
        c.order = c.drift->order();
    } else if (c.diffusion) {
        c.dy = c.diffusion->dim();
        c.order = c.diffusion->order();
    }
    if (c.diffusion) c.m = c.diffusion->noise_dim();

    if (j.contains("dy")) c.dy = get_int(j, "dy", "dy");
    if (j.contains("m")) c.m = get_int(j, "m", "m");
    if (j.contains("order")) c.order = get_int(j, "order", "order");
    if (j.contains("horizon")) c.horizon = get_double(j, "horizon", "horizon");
    if (j.contains("steps")) c.steps = get_int(j, "steps", "steps");
    if (j.contains("seed")) c.seed = get_seed(j, "seed", "seed");
    if (j.contains("paths")) c.paths = get_int(j, "paths", "paths");
    if (j.contains("split_knot")) c.split_knot = get_int(j, "split_knot", "split_knot");
    if (j.contains("tolerance")) c.tolerance = get_double(j, "tolerance", "tolerance");
    if (j.contains("halvings")) c.halvings = get_int(j, "halvings", "halvings");

    if (j.contains("random")) {
        const auto& r = j.at("random");
        require_object(r, "random", {"seed", "drift_scale", "noise_scale", "linear_noise"});
        RandomInstance ri;
        if (r.contains("seed")) ri.seed = get_seed(r, "seed", "random.seed");
        if (r.contains("drift_scale")) ri.drift_scale = get_double(r, "drift_scale", "random.drift_scale");
        if (r.contains("noise_scale")) ri.noise_scale = get_double(r, "noise_scale", "random.noise_scale");
        if (r.contains("linear_noise")) ri.linear_noise = get_bool(r, "linear_noise", "random.linear_noise");
        c.random = ri;
    }
    if (j.contains("y0")) {
        const auto& v = j.at("y0");
        if (!v.is_array()) fail("y0", "expected an array of numbers");
        c.y0.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>()))
                fail("y0[" + std::to_string(i) + "]", "expected a finite number");
            c.y0.push_back(v[i].get<double>());
        }
    }
    if (j.contains("schedule")) {
        const auto& v = j.at("schedule");
        if (!v.is_array()) fail("schedule", "expected an array of step counts");
        c.schedule.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number_integer()) fail("schedule[" + std::to_string(i) + "]", "expected an integer");
            c.schedule.push_back(v[i].get<int>());
        }
    }
    if (j.contains("problem")) {
        const auto& p = j.at("problem");
        require_object(p, "problem", {"kind", "alpha", "beta", "gamma", "y0"});
        if (p.contains("kind")) {
            if (!p.at("kind").is_string()) fail("problem.kind", "expected a string");
            c.problem.kind = p.at("kind").get<std::string>();
        }
        if (p.contains("alpha")) c.problem.alpha = get_double(p, "alpha", "problem.alpha");
        if (p.contains("beta")) c.problem.beta = get_double(p, "beta", "problem.beta");
        if (p.contains("gamma")) c.problem.gamma = get_double(p, "gamma", "problem.gamma");
        if (p.contains("y0")) c.problem.y0 = get_double(p, "y0", "problem.y0");
    }
    validate(c);
    return c;
}

json to_json(const ExperimentConfig& c) {
    json j{{"dy", c.dy},
           {"m", c.m},
           {"order", c.order},
           {"horizon", c.horizon},
           {"steps", c.steps},
           {"seed", c.seed},
           {"paths", c.paths},
           {"halvings", c.halvings},
           {"schedule", c.schedule},
           {"problem",
            {{"kind", c.problem.kind},
             {"alpha", c.problem.alpha},
             {"beta", c.problem.beta},
             {"gamma", c.problem.gamma},
             {"y0", c.problem.y0}}}};
    if (c.drift) j["drift"] = fmflow::to_json(*c.drift);
    if (c.diffusion) j["diffusion"] = fmflow::to_json(*c.diffusion);
    if (c.random)
        j["random"] = {{"seed", c.random->seed},
                       {"drift_scale", c.random->drift_scale},
                       {"noise_scale", c.random->noise_scale},
                       {"linear_noise", c.random->linear_noise}};
    if (c.initial) j["initial"] = fmflow::to_json(*c.initial);
    if (c.split_knot) j["split_knot"] = *c.split_knot;
    if (c.tolerance) j["tolerance"] = *c.tolerance;
    if (!c.y0.empty()) j["y0"] = c.y0;
    if (c.outer) j["outer"] = fmflow::to_json(*c.outer);
    if (c.inner) j["inner"] = fmflow::to_json(*c.inner);
    return j;
}

CoefficientFamily coefficients(const ExperimentConfig& c) {
    if (c.random) {
        auto [drift, diffusion] = random_coefficients(c, *c.random);
        return CoefficientFamily::constant(std::move(drift), std::move(diffusion));
    }
    return CoefficientFamily::constant(c.drift ? *c.drift : FormalMapping::zero(c.order, c.dy, c.dy),
                                       c.diffusion ? *c.diffusion : DiffusionFamily::zero(c.order, c.dy, c.m));
}

RunResult execute(const std::string& subcommand, const ExperimentConfig& config) {
    if (subcommand == "solve") return run_solve(config);
    if (subcommand == "compose-check") return run_compose_check(config);
    if (subcommand == "evolution-check") return run_evolution_check(config);
    if (subcommand == "taylor-check") return run_taylor_check(config);
    if (subcommand == "formula-check") return run_formula_check(config);
    if (subcommand == "convergence") return run_convergence(config);
    throw DomainError("subcommand: unknown '" + subcommand + "'");
}

int run(const std::string& subcommand, const std::optional<std::filesystem::path>& config_path,
        const Overrides& overrides, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
    const auto diag = [&](const std::string& message, int code) {
        err << "fmflow: error: " << message << '\n';
        return code;
    };
    if (std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) == kSubcommands.end()) {
        std::string names;
        for (const auto& s : kSubcommands) names += (names.empty() ? "" : " | ") + s;
        return diag("subcommand: unknown '" + subcommand + "' (expected " + names + ")", kValidation);
    }

    json j = json::object();
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) return diag("--config: cannot read '" + config_path->string() + "'", kValidation);
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            return diag("--config: '" + config_path->string() + "' is not valid JSON: " + e.what(), kValidation);
        }
    }

    try {
        if (!j.is_object()) return diag("config: expected a JSON object", kValidation);
        apply_overrides(j, overrides);
        const ExperimentConfig config = config_from_json(j);
        RunResult result = execute(subcommand, config);

        const json effective = to_json(config);
        json report{{"provenance",
                     {{"tool", "fmflow"},
                      {"version", kVersion},
                      {"subcommand", subcommand},
                      {"config_hash", hex64(fnv1a(effective.dump()))},
                      {"seed", config.seed},
                      {"config", effective},
                      {"timestamp", utc_timestamp()}}},
                    {"results", std::move(result.results)}};
        std::filesystem::create_directories(out_dir);
        std::ofstream(out_dir / "report.json") << report.dump(2) << '\n';
        for (const auto& [name, contents] : result.csv) std::ofstream(out_dir / name) << contents;
        out << result.summary << '\n';
        return result.exit_code;
    } catch (const NumericalBlowup& e) {
        return diag(subcommand + ": " + e.what(), kBlowup);
    } catch (const TooManyBlowups& e) {
        return diag(subcommand + ": " + e.what(), kBlowup);
    } catch (const DomainError& e) {
        return diag(e.what(), kValidation);
    } catch (const UnsupportedCase& e) {
        return diag(subcommand + ": " + e.what(), kValidation);
    } catch (const std::filesystem::filesystem_error& e) {
        return diag(std::string("--out: ") + e.what(), kValidation);
    }
}

int main(int argc, char** argv) {
    CLI::App app{"Truncated formal mappings and the Taylor-coefficient chain of stochastic flows"};
    std::string subcommand;
    std::string config_path;
    std::string out_dir = "out";
    Overrides overrides;
    std::string names;
    for (const auto& s : kSubcommands) names += (names.empty() ? "" : " | ") + s;
    app.add_option("subcommand", subcommand, names)->required();
    auto* config_opt = app.add_option("--config", config_path, "JSON experiment config");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", overrides.seed, "overrides config.seed");
    app.add_option("--paths", overrides.paths, "overrides config.paths");
    app.add_option("--steps", overrides.steps, "overrides config.steps");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }
    std::optional<std::filesystem::path> path;
    if (config_opt->count() > 0) path = config_path;
    return run(subcommand, path, overrides, out_dir, std::cout, std::cerr);
}

}  // namespace fmflow::cli
