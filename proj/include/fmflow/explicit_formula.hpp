#pragma once

#include <span>
#include <vector>

#include "fmflow/brownian.hpp"
#include "fmflow/chain.hpp"
#include "fmflow/coefficients.hpp"
#include "fmflow/multilinear_map.hpp"

namespace fmflow {

/// Discrete fundamental solution of the linear part,
///   Phi(t_i, t_j) = F_{i-1} ... F_{j+1} F_j,  F_l = I + a_1(t_l) dt + b_1(t_l)(., dw_l).
class FundamentalSolution {
public:
    FundamentalSolution(TimeGrid grid, std::vector<MultilinearMap> factors, bool deterministic);

    const TimeGrid& grid() const noexcept { return grid_; }
    /// F_l, the factor of step l.
    const MultilinearMap& factor(int l) const;
    std::span<const MultilinearMap> factors() const noexcept { return factors_; }
    /// True when every b_1(t_l) vanishes, so Phi does not depend on the path.
    bool deterministic() const noexcept { return deterministic_; }

    /// Phi(t_i, t_j) for j <= i, multiplied left-to-right in step order:
    /// P <- F_l P for l = j..i-1, starting from the identity.
    MultilinearMap between(int i, int j) const;

private:
    TimeGrid grid_;
    std::vector<MultilinearMap> factors_;
    bool deterministic_;
};

FundamentalSolution fundamental(const CoefficientFamily& coeffs, const BrownianPath& path);

/// S_n at every knot from the variation-of-constants sum
///
///   S_n(t_i) = sum_{j < i} Phi(t_i, t_{j+1}) [ f_n(t_j) dt + g_n(t_j)(., dw_j) ],
///
/// with f_n, g_n built from components 1..n-1 of `lower` (e.g. the states of
/// solve_chain on the same path). The chain is assumed to start from Id, so
/// S_n(t_0) = 0 for n >= 2.
///
/// Requires b_1 = 0 at every knot (otherwise the noise integral is
/// anticipating and UnsupportedCase is thrown) and n >= 2.
std::vector<MultilinearMap> variation_of_constants(int n, const CoefficientFamily& coeffs,
                                                   std::span<const FormalMapping> lower, const BrownianPath& path);

}  // namespace fmflow
