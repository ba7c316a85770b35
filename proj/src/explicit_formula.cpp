#include "fmflow/explicit_formula.hpp"

#include <string>

#include "fmflow/errors.hpp"

namespace fmflow {

FundamentalSolution::FundamentalSolution(TimeGrid grid, std::vector<MultilinearMap> factors, bool deterministic)
    : grid_(grid), factors_(std::move(factors)), deterministic_(deterministic) {
    if (static_cast<int>(factors_.size()) != grid_.steps())
        throw DomainError("fundamental solution needs one factor per step");
    for (const auto& f : factors_)
        if (f.degree() != 1 || f.domain_dim() != f.codomain_dim() || f.domain_dim() != factors_.front().domain_dim())
            throw DomainError("fundamental solution factors must be square matrices of one size");
}

const MultilinearMap& FundamentalSolution::factor(int l) const {
    if (l < 0 || l >= grid_.steps()) throw DomainError("factor index out of range");
    return factors_[static_cast<std::size_t>(l)];
}

MultilinearMap FundamentalSolution::between(int i, int j) const {
    if (j < 0 || i > grid_.steps() || j > i) throw DomainError("between: need 0 <= j <= i <= steps");
    MultilinearMap product = MultilinearMap::identity_matrix(factors_.front().domain_dim());
    for (int l = j; l < i; ++l) product = apply_to_tuple(factor(l), {product});
    return product;
}

FundamentalSolution fundamental(const CoefficientFamily& coeffs, const BrownianPath& path) {
    if (path.noise_dim() != coeffs.noise_dim()) throw DomainError("fundamental: noise dimension mismatch");
    const auto& grid = path.grid();
    const int d = coeffs.dim();
    const double dt = grid.step_size();
    std::vector<MultilinearMap> factors;
    factors.reserve(static_cast<std::size_t>(grid.steps()));
    bool deterministic = true;
    for (int l = 0; l < grid.steps(); ++l) {
        const double t = grid.knot(l);
        const auto a1 = coeffs.drift(t).component(1);
        const auto b1 = coeffs.diffusion(t).component(1);
        deterministic = deterministic && b1.is_zero();
        const auto bw = b1.contract_noise(path.increment(l));
        std::vector<double> e(a1.size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = a1.entries()[i] * dt + bw.entries()[i];
        for (int i = 0; i < d; ++i) e[static_cast<std::size_t>(i) * d + i] += 1.0;
        factors.push_back(MultilinearMap::unchecked(1, d, d, std::move(e)));
    }
    return FundamentalSolution(grid, std::move(factors), deterministic);
}

std::vector<MultilinearMap> variation_of_constants(int n, const CoefficientFamily& coeffs,
                                                   std::span<const FormalMapping> lower, const BrownianPath& path) {
    if (n < 2) throw DomainError("variation_of_constants: degree must be >= 2, got " + std::to_string(n));
    if (n > coeffs.order()) throw DomainError("variation_of_constants: degree exceeds coefficient order");
    const auto& grid = path.grid();
    const int steps = grid.steps();
    if (static_cast<int>(lower.size()) < steps + 1)
        throw DomainError("variation_of_constants: need lower components at every knot");

    const FundamentalSolution phi = fundamental(coeffs, path);
    if (!phi.deterministic())
        throw UnsupportedCase("variation_of_constants: b_1 != 0 makes the fundamental solution random; "
                              "the resulting anticipating integral is not supported");

    const double dt = grid.step_size();
    const int d = coeffs.dim();

    // h_j = f_n(t_j) dt + g_n(t_j)(., dw_j)
    std::vector<MultilinearMap> forcing;
    forcing.reserve(static_cast<std::size_t>(steps));
    for (int j = 0; j < steps; ++j) {
        const double t = grid.knot(j);
        const auto terms = forcing_terms(n, lower[static_cast<std::size_t>(j)], coeffs.drift(t), coeffs.diffusion(t));
        const auto noise = terms.noise.contract_noise(path.increment(j));
        forcing.push_back(add(scale(terms.drift, dt), noise));
    }

    std::vector<MultilinearMap> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    out.emplace_back(n, d, d);
    for (int i = 1; i <= steps; ++i) {
        MultilinearMap acc(n, d, d);
        MultilinearMap propagator = MultilinearMap::identity_matrix(d);  // Phi(t_i, t_{j+1})
        for (int j = i - 1; j >= 0; --j) {
            acc = add(acc, apply_to_tuple(propagator, {forcing[static_cast<std::size_t>(j)]}));
            if (j > 0) propagator = apply_to_tuple(propagator, {phi.factor(j)});
        }
        out.push_back(std::move(acc));
    }
    return out;
}

}  // namespace fmflow
