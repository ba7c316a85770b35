#include <doctest.h>

#include <array>
#include <cmath>

#include "fmflow/chain.hpp"
#include "fmflow/errors.hpp"
#include "fmflow/explicit_formula.hpp"
#include "fmflow/verification.hpp"
#include "test_support.hpp"

using namespace fmflow;
using namespace fmflow::testing;

namespace {

// Random drift with random diffusion except for a vanishing b_1.
CoefficientFamily random_without_linear_noise(Rng& rng, int order, int d, int m) {
    const auto noisy = random_diffusion(rng, order, d, m, 0.3);
    std::vector<DiffusionTensor> comps{DiffusionTensor(1, d, m)};
    for (int k = 2; k <= order; ++k) comps.push_back(noisy.component(k));
    return CoefficientFamily::constant(random_mapping(rng, order, d, d, 0.5), DiffusionFamily(std::move(comps)));
}

}  // namespace

TEST_CASE("fundamental solution") {
    Rng rng(8);
    const TimeGrid grid(0.0, 1.0, 32);

    SUBCASE("no linear part: Phi is the identity") {
        const auto coeffs = CoefficientFamily::constant(FormalMapping::zero(2, 3, 3), DiffusionFamily::zero(2, 3, 1));
        const auto phi = fundamental(coeffs, sample_path(grid, 1, 1, 0));
        CHECK(phi.deterministic());
        for (int i = 0; i <= 32; i += 8)
            for (int j = 0; j <= i; j += 4) CHECK(phi.between(i, j) == MultilinearMap::identity_matrix(3));
    }
    SUBCASE("scalar alpha: Phi(t, tau) tends to exp(alpha (t - tau)) at first order") {
        const double alpha = 0.8;
        double prev = 0.0;
        for (int n : {64, 128, 256, 512}) {
            const TimeGrid g(0.0, 1.0, n);
            const auto phi = fundamental(scalar_family({alpha}, {0.0}), BrownianPath::zero(g, 1));
            const double err = std::abs(phi.between(n, n / 4).entries()[0] - std::exp(alpha * 0.75));
            if (prev > 0.0) CHECK(prev / err == doctest::Approx(2.0).epsilon(0.1));
            prev = err;
        }
    }
    SUBCASE("evolution identity of the ordered products") {
        const auto coeffs = random_coefficients(rng, 1, 3, 2);
        const auto phi = fundamental(coeffs, sample_path(grid, 2, 3, 0));
        CHECK_FALSE(phi.deterministic());
        CHECK(phi.between(5, 5) == MultilinearMap::identity_matrix(3));
        for (auto [i, j, k] : {std::array{30, 12, 2}, std::array{32, 16, 0}, std::array{9, 8, 7}}) {
            const auto joined = apply_to_tuple(phi.between(i, j), {phi.between(j, k)});
            CHECK(relative_difference(joined, phi.between(i, k)) <= 1e-13);
        }
        CHECK(phi.between(7, 6) == phi.factor(6));
        CHECK_THROWS_AS(phi.between(3, 4), DomainError);
    }
    SUBCASE("with b_1 = 0 the factors do not depend on the path") {
        const auto coeffs = random_without_linear_noise(rng, 2, 2, 2);
        const auto a = fundamental(coeffs, sample_path(grid, 2, 1, 0));
        const auto b = fundamental(coeffs, sample_path(grid, 2, 2, 0));
        CHECK(a.deterministic());
        CHECK(std::equal(a.factors().begin(), a.factors().end(), b.factors().begin()));
    }
}

TEST_CASE("variation_of_constants") {
    Rng rng(9);
    const TimeGrid grid(0.0, 1.0, 64);

    SUBCASE("no forcing gives zero") {
        const auto coeffs = scalar_family({0.5, 0.0, 0.0}, {0.0, 0.0, 0.0});
        const auto path = sample_path(grid, 1, 1, 0);
        const auto chain = solve_chain(coeffs, identity(3, 1), path);
        for (int n = 2; n <= 3; ++n)
            for (const auto& s : variation_of_constants(n, coeffs, chain.states, path)) CHECK(s.is_zero());
    }
    SUBCASE("pure noise forcing: S_2 = beta_2 w(t)") {
        const double beta2 = 0.6;
        const auto coeffs = scalar_family({0.0, 0.0}, {0.0, beta2});
        const auto path = sample_path(grid, 1, 21, 0);
        const auto chain = solve_chain(coeffs, identity(2, 1), path);
        const auto s2 = variation_of_constants(2, coeffs, chain.states, path);
        for (int i = 0; i <= grid.steps(); ++i) {
            double w = 0.0;
            for (int j = 0; j < i; ++j) w += beta2 * path.increment(j)[0];
            CHECK(s2[static_cast<std::size_t>(i)].entries()[0] == doctest::Approx(w).epsilon(1e-13));
            CHECK(chain.states[static_cast<std::size_t>(i)].component(2).entries()[0] == doctest::Approx(w).epsilon(1e-13));
        }
    }
    SUBCASE("scalar (alpha, gamma) reproduces the closed-form S_2 at first order") {
        const double alpha = 1.0, gamma = 0.5;
        const auto coeffs = scalar_family({alpha, gamma}, {0.0, 0.0});
        const double exact = second_component_closed_form(alpha, gamma, 1.0);
        double prev = 0.0;
        for (int n : {64, 128, 256}) {
            const auto path = BrownianPath::zero(TimeGrid(0.0, 1.0, n), 1);
            const auto chain = solve_chain(coeffs, identity(2, 1), path);
            const double err = std::abs(variation_of_constants(2, coeffs, chain.states, path).back().entries()[0] - exact);
            if (prev > 0.0) CHECK(prev / err == doctest::Approx(2.0).epsilon(0.1));
            prev = err;
        }
    }
    SUBCASE("agrees with the chain on a random instance") {
        const auto coeffs = random_without_linear_noise(rng, 3, 2, 2);
        const auto path = sample_path(grid, 2, 31, 0);
        const auto chain = solve_chain(coeffs, identity(3, 2), path);
        for (int n = 2; n <= 3; ++n) {
            const auto sn = variation_of_constants(n, coeffs, chain.states, path);
            REQUIRE(sn.size() == chain.states.size());
            for (std::size_t i = 1; i < sn.size(); ++i)
                CHECK(relative_difference(sn[i], chain.states[i].component(n)) <= 1e-9);
        }
    }
    SUBCASE("noisy linear part is unsupported") {
        const auto coeffs = random_coefficients(rng, 2, 2, 1);
        const auto path = sample_path(grid, 1, 1, 0);
        const auto chain = solve_chain(coeffs, identity(2, 2), path);
        CHECK_THROWS_AS(variation_of_constants(2, coeffs, chain.states, path), UnsupportedCase);
        CHECK_THROWS_AS(variation_of_constants(1, coeffs, chain.states, path), DomainError);
    }
}
