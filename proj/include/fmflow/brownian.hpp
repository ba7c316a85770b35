#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fmflow {

/// Uniform grid on [start, end] with `steps` intervals.
class TimeGrid {
public:
    TimeGrid(double start, double end, int steps);

    double start() const noexcept { return start_; }
    double end() const noexcept { return end_; }
    int steps() const noexcept { return steps_; }
    double step_size() const noexcept { return dt_; }

    /// start + i * dt, with knot(steps()) == end() exactly.
    double knot(int i) const;

    /// Index of the knot equal to t within 1e-9 * dt, if any.
    std::optional<int> knot_index(double t) const;

    /// Knots first..last as a grid with the same step size.
    TimeGrid subgrid(int first, int last) const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    TimeGrid(double start, double end, int steps, double dt);

    double start_;
    double end_;
    int steps_;
    double dt_;
};

/// Counter-based stream of 64-bit words: word i is the SplitMix64 output for
/// state key + (i + 1) * 0x9E3779B97F4A7C15, with the key derived from
/// (seed, stream). Any word can be drawn independently of the others.
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t bits(std::uint64_t counter) const noexcept;

    /// Standard normal number `index` of the stream. Box-Muller, cosine branch,
    /// from words 2*index (u1 in (0,1]) and 2*index + 1 (u2 in [0,1)), each
    /// taking the top 53 bits.
    double normal(std::uint64_t index) const noexcept;

private:
    std::uint64_t key_;
};

/// Wiener increments on a grid: increment i is N(0, dt I_m) and covers
/// [knot(i), knot(i+1)].
class BrownianPath {
public:
    BrownianPath(TimeGrid grid, int noise_dim, std::vector<double> increments, std::uint64_t seed = 0,
                 std::uint64_t path_index = 0);

    static BrownianPath zero(TimeGrid grid, int noise_dim);

    const TimeGrid& grid() const noexcept { return grid_; }
    int noise_dim() const noexcept { return noise_dim_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t path_index() const noexcept { return path_index_; }

    std::span<const double> increment(int i) const;
    std::span<const double> increments() const noexcept { return increments_; }

    /// w(knot(i)) - w(start), summed left to right.
    std::vector<double> value_at(int i) const;

    /// Increments first..last-1 on grid().subgrid(first, last).
    BrownianPath slice(int first, int last) const;

    /// Sums each run of `factor` consecutive increments. steps() must be
    /// divisible by factor.
    BrownianPath coarsen(int factor) const;

    friend bool operator==(const BrownianPath&, const BrownianPath&) = default;

private:
    TimeGrid grid_;
    int noise_dim_;
    std::vector<double> increments_;
    std::uint64_t seed_;
    std::uint64_t path_index_;
};

/// Increment (i, r) is sqrt(dt) * stream.normal(i * m + r) with the stream
/// keyed by (seed, path_index). Paths on grids with the same step size agree
/// on their common prefix.
BrownianPath sample_path(const TimeGrid& grid, int noise_dim, std::uint64_t seed, std::uint64_t path_index);

}  // namespace fmflow
