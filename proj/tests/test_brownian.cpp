#include <doctest.h>

#include <cmath>

#include "fmflow/brownian.hpp"
#include "fmflow/errors.hpp"

using namespace fmflow;

TEST_CASE("TimeGrid") {
    const TimeGrid g(0.0, 1.0, 8);
    CHECK(g.step_size() == 0.125);
    CHECK(g.knot(0) == 0.0);
    CHECK(g.knot(8) == 1.0);
    CHECK(g.knot(3) == 0.375);
    CHECK(g.knot_index(0.375) == 3);
    CHECK_FALSE(g.knot_index(0.3).has_value());
    CHECK_FALSE(g.knot_index(1.5).has_value());
    const auto sub = g.subgrid(2, 6);
    CHECK(sub.steps() == 4);
    CHECK(sub.start() == 0.25);
    CHECK(sub.end() == 0.75);
    CHECK(sub.step_size() == g.step_size());
    CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 0), DomainError);
    CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 4), DomainError);
    CHECK_THROWS_AS(g.knot(9), DomainError);
    CHECK_THROWS_AS(g.subgrid(3, 3), DomainError);
}

TEST_CASE("CounterStream draws are random access") {
    const CounterStream s(42, 7);
    const double late = s.normal(1000);
    const double early = s.normal(3);
    CHECK(CounterStream(42, 7).normal(3) == early);
    CHECK(CounterStream(42, 7).normal(1000) == late);
    CHECK(CounterStream(42, 8).normal(3) != early);
    CHECK(CounterStream(43, 7).normal(3) != early);
}

TEST_CASE("sample_path") {
    const TimeGrid grid(0.0, 1.0, 16);

    SUBCASE("deterministic in (seed, path_index)") {
        const auto a = sample_path(grid, 2, 99, 5);
        const auto b = sample_path(grid, 2, 99, 5);
        CHECK(a == b);
        CHECK(a.increments().size() == 32);
        CHECK(sample_path(grid, 2, 99, 6).increments()[0] != a.increments()[0]);
    }
    SUBCASE("prefix is independent of the horizon at equal step size") {
        const auto longer = sample_path(TimeGrid(0.0, 1.0, 16), 3, 1, 0);
        const auto shorter = sample_path(TimeGrid(0.0, 0.5, 8), 3, 1, 0);
        for (int i = 0; i < 8; ++i) {
            const auto x = longer.increment(i), y = shorter.increment(i);
            CHECK(std::equal(x.begin(), x.end(), y.begin()));
        }
    }
    SUBCASE("moments over 1e5 paths") {
        constexpr int kPaths = 100000;
        const TimeGrid g(0.0, 1.0, 8);
        const double dt = g.step_size();
        double sum[2] = {0, 0}, sumsq[2] = {0, 0};
        for (int p = 0; p < kPaths; ++p) {
            const auto path = sample_path(g, 2, 2024, static_cast<std::uint64_t>(p));
            const auto dw = path.increment(3);
            for (int r = 0; r < 2; ++r) {
                sum[r] += dw[static_cast<std::size_t>(r)];
                sumsq[r] += dw[static_cast<std::size_t>(r)] * dw[static_cast<std::size_t>(r)];
            }
        }
        for (int r = 0; r < 2; ++r) {
            const double mean = sum[r] / kPaths;
            const double var = sumsq[r] / kPaths - mean * mean;
            CHECK(std::abs(mean) < 4.0 * std::sqrt(dt / kPaths));
            CHECK(std::abs(var / dt - 1.0) < 0.05);
        }
    }
    CHECK_THROWS_AS(sample_path(grid, 0, 1, 0), DomainError);
}

TEST_CASE("BrownianPath slicing, coarsening and values") {
    const TimeGrid grid(0.0, 2.0, 8);
    std::vector<double> inc;
    for (int i = 0; i < 16; ++i) inc.push_back(i * 0.25);
    const BrownianPath path(grid, 2, inc, 3, 4);

    const auto c = path.coarsen(4);
    CHECK(c.grid().steps() == 2);
    CHECK(c.grid().step_size() == 1.0);
    // coarse increment 0, coordinate 1: fine increments 0..3 coordinate 1 = 0.25 + 0.75 + 1.25 + 1.75
    CHECK(c.increment(0)[1] == 4.0);
    CHECK(c.seed() == 3);
    CHECK(c.path_index() == 4);
    CHECK_THROWS_AS(path.coarsen(3), DomainError);

    const auto s = path.slice(2, 5);
    CHECK(s.grid().steps() == 3);
    CHECK(s.grid().start() == 0.5);
    CHECK(s.increment(0)[0] == path.increment(2)[0]);

    CHECK(path.value_at(0) == std::vector<double>{0.0, 0.0});
    CHECK(path.value_at(2) == std::vector<double>{0.5, 1.0});
    CHECK_THROWS_AS(BrownianPath(grid, 2, std::vector<double>(15)), DomainError);
}
