#include "fmflow/chain.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "fmflow/errors.hpp"

namespace fmflow {

FormalMapping one_step_map(const FormalMapping& drift, const DiffusionFamily& diffusion, double dt,
                           std::span<const double> dw) {
    if (drift.order() != diffusion.order() || drift.domain_dim() != diffusion.dim() ||
        drift.codomain_dim() != diffusion.dim())
        throw DomainError("one_step_map: drift and diffusion shapes disagree");
    if (static_cast<int>(dw.size()) != diffusion.noise_dim())
        throw DomainError("one_step_map: increment length does not match noise dimension");

    const int d = drift.domain_dim();
    std::vector<MultilinearMap> comps;
    comps.reserve(static_cast<std::size_t>(drift.order()));
    for (int k = 1; k <= drift.order(); ++k) {
        const auto a = drift.component(k).entries();
        const auto noise = diffusion.component(k).contract_noise(dw);
        const auto bw = noise.entries();
        std::vector<double> e(a.size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = a[i] * dt + bw[i];
        if (k == 1)
            for (int i = 0; i < d; ++i) e[static_cast<std::size_t>(i) * d + i] += 1.0;
        comps.push_back(MultilinearMap::unchecked(k, d, d, std::move(e)));
    }
    return FormalMapping(std::move(comps));
}

namespace {

void check_inputs(const CoefficientFamily& coeffs, const BrownianPath& path) {
    if (path.noise_dim() != coeffs.noise_dim())
        throw DomainError("path noise dimension " + std::to_string(path.noise_dim()) +
                          " != coefficient noise dimension " + std::to_string(coeffs.noise_dim()));
}

/// Coefficients at the left end of step i, fetched once for constant families.
class CoefficientCursor {
public:
    explicit CoefficientCursor(const CoefficientFamily& coeffs) : coeffs_(coeffs) {
        if (coeffs.is_constant()) cached_.emplace(coeffs.drift(0.0), coeffs.diffusion(0.0));
    }

    std::pair<FormalMapping, DiffusionFamily> at(double t) const {
        if (cached_) return *cached_;
        return {coeffs_.drift(t), coeffs_.diffusion(t)};
    }

    // Avoids the copy for constant families.
    template <class Fn>
    auto with(double t, Fn&& fn) const {
        if (cached_) return fn(cached_->first, cached_->second);
        auto both = at(t);
        return fn(both.first, both.second);
    }

private:
    const CoefficientFamily& coeffs_;
    std::optional<std::pair<FormalMapping, DiffusionFamily>> cached_;
};

}  // namespace

ChainSolution solve_chain(const CoefficientFamily& coeffs, const FormalMapping& initial, const BrownianPath& path) {
    check_inputs(coeffs, path);
    if (initial.order() != coeffs.order())
        throw DomainError("solve_chain: initial order " + std::to_string(initial.order()) +
                          " != coefficient order " + std::to_string(coeffs.order()));
    if (initial.domain_dim() != coeffs.dim() || initial.codomain_dim() != coeffs.dim())
        throw DomainError("solve_chain: initial condition must map Y into Y");

    const auto& grid = path.grid();
    ChainSolution sol{grid, coeffs.fingerprint(), path.seed(), path.path_index(), initial, {}};
    sol.states.reserve(static_cast<std::size_t>(grid.steps()) + 1);
    sol.states.push_back(initial);

    const CoefficientCursor cursor(coeffs);
    const double dt = grid.step_size();
    for (int i = 0; i < grid.steps(); ++i) {
        FormalMapping psi = cursor.with(grid.knot(i), [&](const FormalMapping& a, const DiffusionFamily& b) {
            return one_step_map(a, b, dt, path.increment(i));
        });
        FormalMapping next = compose(psi, sol.states.back());
        for (int k = 1; k <= next.order(); ++k)
            if (!next.component(k).is_finite()) throw NumericalBlowup(static_cast<std::size_t>(i), k);
        sol.states.push_back(std::move(next));
    }
    return sol;
}

std::vector<std::vector<double>> simulate_direct(const CoefficientFamily& coeffs, std::span<const double> y0,
                                                 const BrownianPath& path) {
    check_inputs(coeffs, path);
    if (static_cast<int>(y0.size()) != coeffs.dim())
        throw DomainError("simulate_direct: y0 has length " + std::to_string(y0.size()) + ", expected " +
                          std::to_string(coeffs.dim()));
    const auto& grid = path.grid();
    const double dt = grid.step_size();
    const CoefficientCursor cursor(coeffs);

    std::vector<std::vector<double>> traj;
    traj.reserve(static_cast<std::size_t>(grid.steps()) + 1);
    traj.emplace_back(y0.begin(), y0.end());
    for (int i = 0; i < grid.steps(); ++i) {
        const auto& y = traj.back();
        auto next = cursor.with(grid.knot(i), [&](const FormalMapping& a, const DiffusionFamily& b) {
            const auto drift = evaluate(a, y);
            const auto noise = evaluate(b.contract_noise(path.increment(i)), y);
            std::vector<double> out(y.size());
            for (std::size_t r = 0; r < y.size(); ++r) out[r] = y[r] + drift[r] * dt + noise[r];
            return out;
        });
        for (double v : next)
            if (!std::isfinite(v)) throw NumericalBlowup(static_cast<std::size_t>(i), 0);
        traj.push_back(std::move(next));
    }
    return traj;
}

EvolutionReport evolution_check(const CoefficientFamily& coeffs, const BrownianPath& path, int split_knot) {
    const int steps = path.grid().steps();
    if (split_knot <= 0 || split_knot >= steps)
        throw DomainError("evolution_check: split knot " + std::to_string(split_knot) + " must lie strictly inside 0.." +
                          std::to_string(steps));
    const FormalMapping id = identity(coeffs.order(), coeffs.dim());
    const auto whole = solve_chain(coeffs, id, path);
    const auto early = solve_chain(coeffs, id, path.slice(0, split_knot));
    const auto late = solve_chain(coeffs, id, path.slice(split_knot, steps));
    const FormalMapping joined = compose(late.final_state(), early.final_state());

    EvolutionReport report;
    report.split_knot = split_knot;
    report.discrepancies = component_discrepancies(joined, whole.final_state());
    for (double d : report.discrepancies) report.max_discrepancy = std::max(report.max_discrepancy, d);
    report.exact = joined == whole.final_state();
    return report;
}

EvolutionReport evolution_check_at(const CoefficientFamily& coeffs, const BrownianPath& path, double tau) {
    const auto idx = path.grid().knot_index(tau);
    if (!idx) throw DomainError("evolution_check: tau = " + std::to_string(tau) + " is not a grid knot");
    return evolution_check(coeffs, path, *idx);
}

ForcingTerms forcing_terms(int n, const FormalMapping& state, const FormalMapping& drift, const DiffusionFamily& diffusion) {
    if (n < 2) throw DomainError("forcing_terms: degree must be >= 2, got " + std::to_string(n));
    if (state.order() < n - 1) throw DomainError("forcing_terms: state must provide components 1..n-1");
    if (drift.order() < n || diffusion.order() < n) throw DomainError("forcing_terms: coefficients must reach degree n");
    if (state.codomain_dim() != drift.domain_dim() || drift.domain_dim() != diffusion.dim())
        throw DomainError("forcing_terms: dimension mismatch");

    const int d = drift.codomain_dim();
    const int dx = state.domain_dim();
    const int m = diffusion.noise_dim();
    if (dx != d) throw DomainError("forcing_terms: state must map Y into Y");
    std::vector<double> f(static_cast<std::size_t>(d) * ipow(static_cast<std::size_t>(dx), n), 0.0);
    std::vector<std::vector<double>> g(static_cast<std::size_t>(m), f);

    std::vector<MultilinearMap> args;
    for (int k = 2; k <= n; ++k) {
        std::vector<MultilinearMap> slices;
        for (int r = 0; r < m; ++r) slices.push_back(diffusion.component(k).slice(r));
        for (const auto& idx : enumerate_compositions(n, k)) {
            args.clear();
            for (int j : idx.parts) args.push_back(state.component(j));
            const auto term = apply_to_tuple(drift.component(k), args);
            for (std::size_t i = 0; i < f.size(); ++i) f[i] += term.entries()[i];
            for (int r = 0; r < m; ++r) {
                const auto nterm = apply_to_tuple(slices[static_cast<std::size_t>(r)], args);
                auto& gr = g[static_cast<std::size_t>(r)];
                for (std::size_t i = 0; i < gr.size(); ++i) gr[i] += nterm.entries()[i];
            }
        }
    }

    std::vector<MultilinearMap> noise_slices;
    for (auto& gr : g) noise_slices.push_back(MultilinearMap::unchecked(n, dx, d, std::move(gr)));
    return {MultilinearMap::unchecked(n, dx, d, std::move(f)), DiffusionTensor::from_slices(noise_slices)};
}

}  // namespace fmflow
