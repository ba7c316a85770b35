#include "fmflow/brownian.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fmflow/errors.hpp"

namespace fmflow {

TimeGrid::TimeGrid(double start, double end, int steps) : start_(start), end_(end), steps_(steps), dt_(0.0) {
    if (steps < 1) throw DomainError("time grid needs at least one step");
    if (!std::isfinite(start) || !std::isfinite(end) || !(end > start))
        throw DomainError("time grid needs finite start < end");
    dt_ = (end - start) / steps;
}

TimeGrid::TimeGrid(double start, double end, int steps, double dt) : start_(start), end_(end), steps_(steps), dt_(dt) {}

double TimeGrid::knot(int i) const {
    if (i < 0 || i > steps_) throw DomainError("knot index " + std::to_string(i) + " outside 0.." + std::to_string(steps_));
    if (i == steps_) return end_;
    return start_ + i * dt_;
}

std::optional<int> TimeGrid::knot_index(double t) const {
    const double pos = (t - start_) / dt_;
    const double nearest = std::round(pos);
    if (nearest < 0 || nearest > steps_ || std::abs(pos - nearest) > 1e-9) return std::nullopt;
    return static_cast<int>(nearest);
}

TimeGrid TimeGrid::subgrid(int first, int last) const {
    if (first < 0 || last > steps_ || first >= last)
        throw DomainError("subgrid: need 0 <= first < last <= " + std::to_string(steps_));
    return TimeGrid(knot(first), knot(last), last - first, dt_);
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGolden) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

std::uint64_t CounterStream::bits(std::uint64_t counter) const noexcept { return mix64(key_ + (counter + 1) * kGolden); }

double CounterStream::normal(std::uint64_t index) const noexcept {
    constexpr double kUnit = 0x1.0p-53;
    const double u1 = static_cast<double>((bits(2 * index) >> 11) + 1) * kUnit;
    const double u2 = static_cast<double>(bits(2 * index + 1) >> 11) * kUnit;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

BrownianPath::BrownianPath(TimeGrid grid, int noise_dim, std::vector<double> increments, std::uint64_t seed,
                           std::uint64_t path_index)
    : grid_(grid), noise_dim_(noise_dim), increments_(std::move(increments)), seed_(seed), path_index_(path_index) {
    if (noise_dim < 1) throw DomainError("noise dimension must be >= 1");
    if (increments_.size() != static_cast<std::size_t>(grid_.steps()) * static_cast<std::size_t>(noise_dim))
        throw DomainError("Brownian path needs steps * noise_dim increments");
}

BrownianPath BrownianPath::zero(TimeGrid grid, int noise_dim) {
    if (noise_dim < 1) throw DomainError("noise dimension must be >= 1");
    const auto n = static_cast<std::size_t>(grid.steps()) * static_cast<std::size_t>(noise_dim);
    return BrownianPath(grid, noise_dim, std::vector<double>(n, 0.0));
}

std::span<const double> BrownianPath::increment(int i) const {
    if (i < 0 || i >= grid_.steps()) throw DomainError("increment index out of range");
    const auto m = static_cast<std::size_t>(noise_dim_);
    return std::span<const double>(increments_).subspan(static_cast<std::size_t>(i) * m, m);
}

std::vector<double> BrownianPath::value_at(int i) const {
    if (i < 0 || i > grid_.steps()) throw DomainError("value_at: knot index out of range");
    std::vector<double> w(static_cast<std::size_t>(noise_dim_), 0.0);
    for (int s = 0; s < i; ++s) {
        const auto dw = increment(s);
        for (std::size_t r = 0; r < w.size(); ++r) w[r] += dw[r];
    }
    return w;
}

BrownianPath BrownianPath::slice(int first, int last) const {
    TimeGrid sub = grid_.subgrid(first, last);
    const auto m = static_cast<std::size_t>(noise_dim_);
    std::vector<double> inc(increments_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(first) * m),
                            increments_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(last) * m));
    return BrownianPath(sub, noise_dim_, std::move(inc), seed_, path_index_);
}

BrownianPath BrownianPath::coarsen(int factor) const {
    if (factor < 1 || grid_.steps() % factor != 0)
        throw DomainError("coarsen: factor must divide the number of steps");
    const int coarse_steps = grid_.steps() / factor;
    const auto m = static_cast<std::size_t>(noise_dim_);
    std::vector<double> inc(static_cast<std::size_t>(coarse_steps) * m, 0.0);
    for (int c = 0; c < coarse_steps; ++c)
        for (int f = 0; f < factor; ++f) {
            const auto dw = increment(c * factor + f);
            for (std::size_t r = 0; r < m; ++r) inc[static_cast<std::size_t>(c) * m + r] += dw[r];
        }
    return BrownianPath(TimeGrid(grid_.start(), grid_.end(), coarse_steps), noise_dim_, std::move(inc), seed_, path_index_);
}

BrownianPath sample_path(const TimeGrid& grid, int noise_dim, std::uint64_t seed, std::uint64_t path_index) {
    if (noise_dim < 1) throw DomainError("noise dimension must be >= 1");
    const CounterStream stream(seed, path_index);
    const double sd = std::sqrt(grid.step_size());
    const std::size_t count = static_cast<std::size_t>(grid.steps()) * static_cast<std::size_t>(noise_dim);
    std::vector<double> inc(count);
    for (std::size_t i = 0; i < count; ++i) inc[i] = sd * stream.normal(i);
    return BrownianPath(grid, noise_dim, std::move(inc), seed, path_index);
}

}  // namespace fmflow
