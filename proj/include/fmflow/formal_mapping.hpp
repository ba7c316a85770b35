#pragma once

#include <span>
#include <vector>

#include "fmflow/multilinear_map.hpp"

namespace fmflow {

/// Truncated formal mapping Y -> Z: the maps a_1, ..., a_N with a_k k-linear.
///
/// There is no constant term, so a(0) = 0 always. Components are indexed by
/// degree, 1-based.
class FormalMapping {
public:
    explicit FormalMapping(std::vector<MultilinearMap> components);

    static FormalMapping zero(int order, int domain_dim, int codomain_dim);

    int order() const noexcept { return static_cast<int>(components_.size()); }
    int domain_dim() const noexcept { return components_.front().domain_dim(); }
    int codomain_dim() const noexcept { return components_.front().codomain_dim(); }

    const MultilinearMap& component(int degree) const;
    std::span<const MultilinearMap> components() const noexcept { return components_; }

    bool is_finite() const noexcept;

    friend bool operator==(const FormalMapping&, const FormalMapping&) = default;

private:
    std::vector<MultilinearMap> components_;
};

/// Ordered tuple (j_1, ..., j_k) of positive integers summing to n.
struct CompositionIndex {
    std::vector<int> parts;

    int n() const noexcept;
    int k() const noexcept { return static_cast<int>(parts.size()); }

    friend bool operator==(const CompositionIndex&, const CompositionIndex&) = default;
};

/// All compositions of n into exactly k positive parts, lexicographic order.
/// There are C(n-1, k-1) of them.
std::vector<CompositionIndex> enumerate_compositions(int n, int k);

FormalMapping identity(int order, int dim);

/// (outer o inner)_n = sum_{k=1..n} sum_{j_1+...+j_k=n} outer_k(inner_{j_1}, ..., inner_{j_k}).
///
/// The result has order min(outer.order(), inner.order()). Contributions are
/// accumulated with k ascending and the parts in lexicographic order.
/// Partial contractions sharing a prefix (j_1, ..., j_l) are computed once.
FormalMapping compose(const FormalMapping& outer, const FormalMapping& inner);

/// sum_{k=1..N} a_k(y, ..., y).
std::vector<double> evaluate(const FormalMapping& a, std::span<const double> y);

FormalMapping add(const FormalMapping& a, const FormalMapping& b);
FormalMapping scale(const FormalMapping& a, double factor);

/// Truncates to `order` or pads with zero components up to it.
FormalMapping with_order(const FormalMapping& a, int order);

/// Componentwise symmetrization.
FormalMapping symmetrize(const FormalMapping& a);

/// Scalar (1 -> 1) formal mapping from its coefficient list c_1, ..., c_N.
FormalMapping scalar_mapping(std::span<const double> coefficients);
/// Coefficient list of a scalar formal mapping.
std::vector<double> scalar_coefficients(const FormalMapping& a);

/// Per-component relative Frobenius discrepancies ||a_k - b_k|| / ||b_k||.
std::vector<double> component_discrepancies(const FormalMapping& a, const FormalMapping& b);

}  // namespace fmflow
