#include <doctest.h>

#include <cmath>

#include "fmflow/chain.hpp"
#include "fmflow/errors.hpp"
#include "fmflow/verification.hpp"
#include "test_support.hpp"

using namespace fmflow;
using namespace fmflow::testing;

namespace {

// Explicit componentwise Euler update
//   S_n + dt sum a_k(S_j1..S_jk) + sum b_k(S_j1..S_jk, dw).
FormalMapping euler_update(const FormalMapping& s, const FormalMapping& a, const DiffusionFamily& b, double dt,
                           std::span<const double> dw) {
    const auto bw = b.contract_noise(dw);
    std::vector<MultilinearMap> comps;
    for (int n = 1; n <= s.order(); ++n) {
        MultilinearMap acc = s.component(n);
        for (int k = 1; k <= n; ++k)
            for (const auto& idx : enumerate_compositions(n, k)) {
                std::vector<MultilinearMap> args;
                for (int j : idx.parts) args.push_back(s.component(j));
                acc = add(acc, scale(apply_to_tuple(a.component(k), args), dt));
                acc = add(acc, apply_to_tuple(bw.component(k), args));
            }
        comps.push_back(acc);
    }
    return FormalMapping(std::move(comps));
}

FormalMapping perturb_above(const FormalMapping& a, int n, Rng& rng) {
    std::vector<MultilinearMap> comps;
    for (int k = 1; k <= a.order(); ++k)
        comps.push_back(k <= n ? a.component(k) : random_map(rng, k, a.domain_dim(), a.codomain_dim()));
    return FormalMapping(std::move(comps));
}

DiffusionFamily perturb_above(const DiffusionFamily& b, int n, Rng& rng) {
    const auto fresh = random_diffusion(rng, b.order(), b.dim(), b.noise_dim());
    std::vector<DiffusionTensor> comps;
    for (int k = 1; k <= b.order(); ++k) comps.push_back(k <= n ? b.component(k) : fresh.component(k));
    return DiffusionFamily(std::move(comps));
}

}  // namespace

TEST_CASE("one_step_map") {
    Rng rng(1);
    SUBCASE("no time and no noise gives the identity") {
        const auto a = random_mapping(rng, 3, 2, 2);
        const auto b = random_diffusion(rng, 3, 2, 2);
        const std::vector<double> dw{0.0, 0.0};
        CHECK(one_step_map(a, b, 0.0, dw) == identity(3, 2));
    }
    SUBCASE("linear scalar drift") {
        const std::vector<double> c{0.75};
        const std::vector<double> dw{0.0};
        const auto psi = one_step_map(scalar_mapping(c), DiffusionFamily::zero(1, 1, 1), 0.125, dw);
        CHECK(psi.component(1).entries()[0] == 1.0 + 0.75 * 0.125);
    }
    SUBCASE("second component of compose(Psi, S) is the explicit Euler update") {
        const double alpha = 0.75, gamma = -0.5, dt = 0.0625;
        const std::vector<double> ac{alpha, gamma}, sc{1.25, 0.5};
        const std::vector<double> dw{0.0};
        const auto psi = one_step_map(scalar_mapping(ac), DiffusionFamily::zero(2, 1, 1), dt, dw);
        const auto s = scalar_mapping(sc);
        const double s1 = sc[0], s2 = sc[1];
        // dyadic inputs: both sides are exact
        CHECK(compose(psi, s).component(2).entries()[0] == s2 + dt * (alpha * s2 + gamma * s1 * s1));
    }
    SUBCASE("compose(Psi, S) equals the componentwise Euler update") {
        for (int trial = 0; trial < 10; ++trial) {
            const int order = 1 + trial % 4, d = 1 + trial % 3, m = 1 + trial % 2;
            const auto a = random_mapping(rng, order, d, d);
            const auto b = random_diffusion(rng, order, d, m);
            const auto s = random_mapping(rng, order, d, d);
            const auto dw = uniform_values(rng, static_cast<std::size_t>(m), -0.2, 0.2);
            const double dt = 0.01;
            const auto lhs = compose(one_step_map(a, b, dt, dw), s);
            for (double e : component_discrepancies(lhs, euler_update(s, a, b, dt, dw))) CHECK(e <= 1e-13);
        }
    }
    SUBCASE("shape mismatch") {
        const std::vector<double> dw{0.1};
        CHECK_THROWS_AS(one_step_map(random_mapping(rng, 2, 2, 2), random_diffusion(rng, 3, 2, 1), 0.1, dw), DomainError);
        CHECK_THROWS_AS(one_step_map(random_mapping(rng, 2, 2, 2), random_diffusion(rng, 2, 2, 2), 0.1, dw), DomainError);
    }
}

TEST_CASE("solve_chain") {
    Rng rng(2);
    const TimeGrid grid(0.0, 1.0, 64);

    SUBCASE("zero coefficients keep the identity") {
        const auto coeffs = CoefficientFamily::constant(FormalMapping::zero(3, 2, 2), DiffusionFamily::zero(3, 2, 2));
        const auto sol = solve_chain(coeffs, identity(3, 2), sample_path(grid, 2, 1, 0));
        REQUIRE(sol.states.size() == 65);
        for (const auto& s : sol.states) CHECK(s == identity(3, 2));
    }
    SUBCASE("scalar linear case is the product of the step factors") {
        const double alpha = 1.0, beta = 0.5;
        const auto coeffs = scalar_family({alpha}, {beta});
        const auto path = sample_path(grid, 1, 7, 3);
        const auto sol = solve_chain(coeffs, identity(1, 1), path);
        double s = 1.0;
        for (int i = 0; i < grid.steps(); ++i) {
            s = (alpha * grid.step_size() + beta * path.increment(i)[0] + 1.0) * s;
            CHECK(sol.states[static_cast<std::size_t>(i) + 1].component(1).entries()[0] == s);
        }
        CHECK(sol.seed == 7);
        CHECK(sol.path_index == 3);
        CHECK(sol.coefficient_fingerprint == coeffs.fingerprint());
    }
    SUBCASE("scalar linear case approaches the geometric Brownian motion") {
        // one path, fine grid: Euler-Maruyama is within a few sqrt(dt) of the closed form
        const auto coeffs = scalar_family({1.0}, {0.5});
        const auto path = sample_path(TimeGrid(0.0, 1.0, 4096), 1, 11, 0);
        const auto sol = solve_chain(coeffs, identity(1, 1), path);
        const double exact = gbm_closed_form(1.0, 0.5, 1.0, path.value_at(4096)[0]);
        CHECK(std::abs(sol.final_state().component(1).entries()[0] - exact) < 0.05 * exact);
    }
    SUBCASE("second component converges at first order") {
        const double alpha = 1.0, gamma = 0.5;
        const auto coeffs = scalar_family({alpha, gamma}, {0.0, 0.0});
        const double exact = second_component_closed_form(alpha, gamma, 1.0);
        double prev = 0.0;
        for (int n : {128, 256, 512, 1024}) {
            const auto sol = solve_chain(coeffs, identity(2, 1), BrownianPath::zero(TimeGrid(0.0, 1.0, n), 1));
            const double err = std::abs(sol.final_state().component(2).entries()[0] - exact);
            if (prev > 0.0) CHECK(prev / err == doctest::Approx(2.0).epsilon(0.1));
            prev = err;
        }
    }
    SUBCASE("triangularity: higher-degree coefficients do not reach lower components") {
        const int order = 4;
        const auto drift = random_mapping(rng, order, 2, 2, 0.5);
        const auto diffusion = random_diffusion(rng, order, 2, 2, 0.3);
        const auto path = sample_path(grid, 2, 5, 0);
        const auto base = solve_chain(CoefficientFamily::constant(drift, diffusion), identity(order, 2), path);
        for (int n = 1; n < order; ++n) {
            const auto other = solve_chain(
                CoefficientFamily::constant(perturb_above(drift, n, rng), perturb_above(diffusion, n, rng)),
                identity(order, 2), path);
            for (std::size_t i = 0; i < base.states.size(); ++i)
                for (int k = 1; k <= n; ++k) CHECK(other.states[i].component(k) == base.states[i].component(k));
        }
    }
    SUBCASE("repeated runs are bitwise identical") {
        const auto coeffs = random_coefficients(rng, 3, 3, 2);
        const auto a = solve_chain(coeffs, identity(3, 3), sample_path(grid, 2, 9, 1));
        const auto b = solve_chain(coeffs, identity(3, 3), sample_path(grid, 2, 9, 1));
        CHECK(a.states == b.states);
    }
    SUBCASE("state i depends only on increments before i") {
        const auto coeffs = random_coefficients(rng, 3, 2, 2);
        const auto path = sample_path(grid, 2, 13, 0);
        const auto base = solve_chain(coeffs, identity(3, 2), path);
        for (int cut : {1, 17, 40, 63}) {
            std::vector<double> inc(path.increments().begin(), path.increments().end());
            for (std::size_t j = static_cast<std::size_t>(cut) * 2; j < inc.size(); ++j) inc[j] = -3.0 * inc[j] + 0.1;
            const auto altered = solve_chain(coeffs, identity(3, 2), BrownianPath(grid, 2, inc));
            for (int i = 0; i <= cut; ++i)
                CHECK(altered.states[static_cast<std::size_t>(i)] == base.states[static_cast<std::size_t>(i)]);
            CHECK_FALSE(altered.states.back() == base.states.back());
        }
    }
    SUBCASE("without diffusion the increments are irrelevant") {
        const auto coeffs = CoefficientFamily::constant(random_mapping(rng, 3, 2, 2, 0.5), DiffusionFamily::zero(3, 2, 2));
        const auto a = solve_chain(coeffs, identity(3, 2), sample_path(grid, 2, 1, 0));
        const auto b = solve_chain(coeffs, identity(3, 2), sample_path(grid, 2, 2, 0));
        CHECK(a.states == b.states);
    }
    SUBCASE("arbitrary initial condition is kept as state 0") {
        const auto coeffs = random_coefficients(rng, 2, 2, 1);
        const auto init = add(identity(2, 2), random_mapping(rng, 2, 2, 2, 0.1));
        const auto sol = solve_chain(coeffs, init, sample_path(grid, 1, 3, 0));
        CHECK(sol.states.front() == init);
        CHECK(sol.initial == init);
    }
    SUBCASE("time-dependent coefficients are sampled at the left end of each step") {
        const TimeGrid g(0.0, 1.0, 4);
        std::vector<FormalMapping> drift;
        std::vector<DiffusionFamily> diffusion;
        for (int i = 0; i <= 4; ++i) {
            const std::vector<double> c{0.5 * i};
            drift.push_back(scalar_mapping(c));
            diffusion.push_back(DiffusionFamily::zero(1, 1, 1));
        }
        const auto coeffs = CoefficientFamily::sampled(g, drift, diffusion);
        const auto sol = solve_chain(coeffs, identity(1, 1), BrownianPath::zero(g, 1));
        double s = 1.0;
        for (int i = 0; i < 4; ++i) s = (0.5 * i * 0.25 + 0.0 + 1.0) * s;
        CHECK(sol.final_state().component(1).entries()[0] == s);
    }
    SUBCASE("overflow raises NumericalBlowup naming step and component") {
        const auto coeffs = scalar_family({1e200}, {0.0});
        try {
            solve_chain(coeffs, identity(1, 1), BrownianPath::zero(grid, 1));
            FAIL("expected blowup");
        } catch (const NumericalBlowup& e) {
            CHECK(e.step() == 1);
            CHECK(e.component() == 1);
        }
    }
    SUBCASE("shape errors") {
        const auto coeffs = random_coefficients(rng, 2, 2, 2);
        CHECK_THROWS_AS(solve_chain(coeffs, identity(3, 2), sample_path(grid, 2, 1, 0)), DomainError);
        CHECK_THROWS_AS(solve_chain(coeffs, identity(2, 3), sample_path(grid, 2, 1, 0)), DomainError);
        CHECK_THROWS_AS(solve_chain(coeffs, identity(2, 2), sample_path(grid, 1, 1, 0)), DomainError);
    }
}

TEST_CASE("simulate_direct") {
    Rng rng(3);
    const TimeGrid grid(0.0, 1.0, 64);

    SUBCASE("zero start stays at zero") {
        const auto coeffs = random_coefficients(rng, 3, 2, 2);
        const std::vector<double> y0{0.0, 0.0};
        for (const auto& y : simulate_direct(coeffs, y0, sample_path(grid, 2, 1, 0))) CHECK(y == y0);
    }
    SUBCASE("degree-1 coefficients: trajectory is S_1 applied to y0") {
        const auto coeffs = random_coefficients(rng, 1, 3, 2);
        const auto path = sample_path(grid, 2, 4, 0);
        const std::vector<double> y0{0.3, -0.2, 0.5};
        const auto traj = simulate_direct(coeffs, y0, path);
        const auto sol = solve_chain(coeffs, identity(1, 3), path);
        for (std::size_t i = 0; i < traj.size(); ++i) {
            const auto via_chain = evaluate(sol.states[i], y0);
            CHECK(distance(traj[i], via_chain) <= 1e-13 * norm(via_chain));
        }
    }
    SUBCASE("quadratic drift converges at first order to the Bernoulli solution") {
        const double alpha = 1.0, gamma = 0.5, y0 = 0.1;
        const auto coeffs = scalar_family({alpha, gamma}, {0.0, 0.0});
        const std::vector<double> start{y0};
        double prev = 0.0;
        for (int n : {128, 256, 512, 1024}) {
            const auto traj = simulate_direct(coeffs, start, BrownianPath::zero(TimeGrid(0.0, 1.0, n), 1));
            const double err = std::abs(traj.back()[0] - bernoulli_closed_form(alpha, gamma, y0, 1.0));
            if (prev > 0.0) CHECK(prev / err == doctest::Approx(2.0).epsilon(0.1));
            prev = err;
        }
    }
    SUBCASE("blowup reports the step") {
        const auto coeffs = scalar_family({0.0, 1.0}, {0.0, 0.0});
        const std::vector<double> start{10.0};
        CHECK_THROWS_AS(simulate_direct(coeffs, start, BrownianPath::zero(TimeGrid(0.0, 10.0, 1000), 1)), NumericalBlowup);
    }
    SUBCASE("length mismatch") {
        const auto coeffs = random_coefficients(rng, 2, 2, 1);
        const std::vector<double> y0{0.1};
        CHECK_THROWS_AS(simulate_direct(coeffs, y0, sample_path(grid, 1, 1, 0)), DomainError);
    }
    SUBCASE("series of the flow matches the direct scheme to O(|y0|^(N+1))") {
        const int order = 2;
        const auto coeffs = CoefficientFamily::constant(random_mapping(rng, order, 2, 2, 0.5), DiffusionFamily::zero(order, 2, 1));
        const auto path = BrownianPath::zero(grid, 1);
        const auto flow = solve_chain(coeffs, identity(order, 2), path).final_state();
        auto gap = [&](double s) {
            const std::vector<double> y0{0.6 * s, -0.8 * s};
            return distance(evaluate(flow, y0), simulate_direct(coeffs, y0, path).back());
        };
        const double expected = std::ldexp(1.0, order + 1);
        for (double s = 0.05; s > 0.005; s /= 2) {
            const double ratio = gap(s) / gap(s / 2);
            CHECK(ratio >= 0.5 * expected);
            CHECK(ratio <= 2.0 * expected);
        }
    }
}

TEST_CASE("evolution_check") {
    Rng rng(4);

    SUBCASE("zero coefficients: exact") {
        const TimeGrid grid(0.0, 1.0, 32);
        const auto coeffs = CoefficientFamily::constant(FormalMapping::zero(3, 2, 2), DiffusionFamily::zero(3, 2, 1));
        const auto report = evolution_check(coeffs, sample_path(grid, 1, 1, 0), 10);
        CHECK(report.exact);
        CHECK(report.max_discrepancy == 0.0);
    }
    SUBCASE("degree-1 scalar coefficients") {
        const TimeGrid grid(0.0, 1.0, 128);
        const auto report = evolution_check(scalar_family({1.0}, {0.5}), sample_path(grid, 1, 2, 0), 50);
        CHECK(report.max_discrepancy <= 1e-12);
    }
    SUBCASE("random dY = 3, m = 2, N = 4, 128 steps") {
        const TimeGrid grid(0.0, 1.0, 128);
        for (int trial = 0; trial < 3; ++trial) {
            const auto coeffs = random_coefficients(rng, 4, 3, 2);
            const auto report = evolution_check(coeffs, sample_path(grid, 2, 77, static_cast<std::uint64_t>(trial)), 30 + 20 * trial);
            REQUIRE(report.discrepancies.size() == 4);
            for (double d : report.discrepancies) CHECK(d <= 1e-10);
        }
    }
    SUBCASE("split must be an interior knot") {
        const TimeGrid grid(0.0, 1.0, 16);
        const auto coeffs = random_coefficients(rng, 2, 2, 1);
        const auto path = sample_path(grid, 1, 1, 0);
        CHECK_THROWS_AS(evolution_check_at(coeffs, path, 0.3), DomainError);
        CHECK_THROWS_AS(evolution_check(coeffs, path, 0), DomainError);
        CHECK_THROWS_AS(evolution_check(coeffs, path, 16), DomainError);
        CHECK(evolution_check_at(coeffs, path, 0.25).split_knot == 4);
    }
}

TEST_CASE("forcing_terms") {
    Rng rng(5);

    SUBCASE("n = 2 is a_2(S_1, S_1) and b_2(S_1, S_1, .)") {
        const auto a = random_mapping(rng, 3, 2, 2);
        const auto b = random_diffusion(rng, 3, 2, 2);
        const auto s = random_mapping(rng, 3, 2, 2);
        const auto f = forcing_terms(2, s, a, b);
        CHECK(relative_difference(f.drift, apply_to_tuple(a.component(2), {s.component(1), s.component(1)})) <= 1e-15);
        for (int r = 0; r < 2; ++r)
            CHECK(relative_difference(f.noise.slice(r),
                                      apply_to_tuple(b.component(2).slice(r), {s.component(1), s.component(1)})) <= 1e-15);
    }
    SUBCASE("linear coefficients give no forcing") {
        std::vector<MultilinearMap> ac{random_map(rng, 1, 2, 2)};
        for (int k = 2; k <= 4; ++k) ac.emplace_back(k, 2, 2);
        std::vector<DiffusionTensor> bc{DiffusionTensor(1, 2, 1, uniform_values(rng, 4))};
        for (int k = 2; k <= 4; ++k) bc.emplace_back(k, 2, 1);
        const auto s = random_mapping(rng, 4, 2, 2);
        for (int n = 2; n <= 4; ++n) {
            const auto f = forcing_terms(n, s, FormalMapping(ac), DiffusionFamily(bc));
            CHECK(f.drift.is_zero());
            CHECK(f.noise.is_zero());
        }
    }
    SUBCASE("scalar drift (alpha, gamma) with S_1 = e^{alpha t}") {
        const double alpha = 0.7, gamma = 1.3, t = 0.4;
        const std::vector<double> ac{alpha, gamma}, sc{std::exp(alpha * t)};
        const auto f = forcing_terms(2, scalar_mapping(sc), scalar_mapping(ac), DiffusionFamily::zero(2, 1, 1));
        CHECK(f.drift.entries()[0] == doctest::Approx(gamma * std::exp(2 * alpha * t)).epsilon(1e-14));
    }
    SUBCASE("only components below n are used") {
        const auto a = random_mapping(rng, 4, 2, 2);
        const auto b = random_diffusion(rng, 4, 2, 1);
        const auto s = random_mapping(rng, 4, 2, 2);
        const auto t = perturb_above(s, 3, rng);
        const auto s3 = with_order(s, 3);
        CHECK(forcing_terms(4, s, a, b).drift == forcing_terms(4, t, a, b).drift);
        CHECK(forcing_terms(4, s, a, b).noise == forcing_terms(4, s3, a, b).noise);
    }
    SUBCASE("degree below 2") {
        CHECK_THROWS_AS(forcing_terms(1, identity(2, 1), FormalMapping::zero(2, 1, 1), DiffusionFamily::zero(2, 1, 1)),
                        DomainError);
    }
}
