#include "fmflow/formal_mapping.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fmflow/errors.hpp"

namespace fmflow {

FormalMapping::FormalMapping(std::vector<MultilinearMap> components) : components_(std::move(components)) {
    if (components_.empty()) throw DomainError("formal mapping needs at least one component");
    const int dy = components_.front().domain_dim();
    const int dz = components_.front().codomain_dim();
    for (std::size_t i = 0; i < components_.size(); ++i) {
        const auto& c = components_[i];
        if (c.degree() != static_cast<int>(i) + 1)
            throw DomainError("formal mapping component " + std::to_string(i + 1) + " has degree " +
                              std::to_string(c.degree()));
        if (c.domain_dim() != dy || c.codomain_dim() != dz)
            throw DomainError("formal mapping component " + std::to_string(i + 1) + " has inconsistent dimensions");
    }
}

FormalMapping FormalMapping::zero(int order, int domain_dim, int codomain_dim) {
    if (order < 1) throw DomainError("formal mapping order must be >= 1");
    std::vector<MultilinearMap> comps;
    comps.reserve(static_cast<std::size_t>(order));
    for (int k = 1; k <= order; ++k) comps.emplace_back(k, domain_dim, codomain_dim);
    return FormalMapping(std::move(comps));
}

const MultilinearMap& FormalMapping::component(int degree) const {
    if (degree < 1 || degree > order())
        throw DomainError("component " + std::to_string(degree) + " outside 1.." + std::to_string(order()));
    return components_[static_cast<std::size_t>(degree - 1)];
}

bool FormalMapping::is_finite() const noexcept {
    return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.is_finite(); });
}

int CompositionIndex::n() const noexcept { return std::accumulate(parts.begin(), parts.end(), 0); }

namespace {

void enumerate_into(int remaining, int slots, std::vector<int>& prefix, std::vector<CompositionIndex>& out) {
    if (slots == 0) {
        if (remaining == 0) out.push_back({prefix});
        return;
    }
    for (int j = 1; j <= remaining - (slots - 1); ++j) {
        prefix.push_back(j);
        enumerate_into(remaining - j, slots - 1, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

std::vector<CompositionIndex> enumerate_compositions(int n, int k) {
    if (n < 1 || k < 1 || k > n)
        throw DomainError("enumerate_compositions: need 1 <= k <= n, got n=" + std::to_string(n) + ", k=" + std::to_string(k));
    std::vector<CompositionIndex> out;
    std::vector<int> prefix;
    prefix.reserve(static_cast<std::size_t>(k));
    enumerate_into(n, k, prefix, out);
    return out;
}

FormalMapping identity(int order, int dim) {
    if (order < 1 || dim < 1) throw DomainError("identity: order and dimension must be >= 1");
    std::vector<MultilinearMap> comps;
    comps.push_back(MultilinearMap::identity_matrix(dim));
    for (int k = 2; k <= order; ++k) comps.emplace_back(k, dim, dim);
    return FormalMapping(std::move(comps));
}

namespace {

/// Depth-first walk over compositions of every n <= order into outer-degree
/// parts. Each recursion level contracts one more slot of the outer map, so
/// tuples that share a prefix share the partial tensor.
class Composer {
public:
    Composer(const FormalMapping& outer, const FormalMapping& inner, int order)
        : outer_(outer), inner_(inner), order_(order),
          mid_(static_cast<std::size_t>(outer.domain_dim())),
          dx_(static_cast<std::size_t>(inner.domain_dim())) {
        for (int n = 1; n <= order; ++n)
            sums_.emplace_back(static_cast<std::size_t>(outer.codomain_dim()) * ipow(dx_, n), 0.0);
    }

    std::vector<MultilinearMap> run() {
        for (int k = 1; k <= order_; ++k) {
            const auto& ok = outer_.component(k);
            walk(k, 0, 0, ok.entries());
        }
        std::vector<MultilinearMap> comps;
        comps.reserve(sums_.size());
        for (int n = 1; n <= order_; ++n)
            comps.push_back(MultilinearMap::unchecked(n, inner_.domain_dim(), outer_.codomain_dim(),
                                                      std::move(sums_[static_cast<std::size_t>(n - 1)])));
        return comps;
    }

private:
    // `partial` has layout [z][x-block of degree `used`][remaining outer slots].
    void walk(int k, int filled, int used, std::span<const double> partial) {
        if (filled == k) {
            auto& acc = sums_[static_cast<std::size_t>(used - 1)];
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += partial[i];
            return;
        }
        const int slots_after = k - filled - 1;
        const std::size_t outer_block = static_cast<std::size_t>(outer_.codomain_dim()) * ipow(dx_, used);
        const std::size_t inner_block = ipow(mid_, slots_after);
        for (int j = 1; used + j + slots_after <= order_; ++j) {
            const auto& arg = inner_.component(j);
            auto next = detail::contract_slot(partial, outer_block, mid_, inner_block, arg.entries(), ipow(dx_, j));
            walk(k, filled + 1, used + j, next);
        }
    }

    const FormalMapping& outer_;
    const FormalMapping& inner_;
    int order_;
    std::size_t mid_;
    std::size_t dx_;
    std::vector<std::vector<double>> sums_;
};

void require_same_shape(const FormalMapping& a, const FormalMapping& b, const char* what) {
    if (a.order() != b.order() || a.domain_dim() != b.domain_dim() || a.codomain_dim() != b.codomain_dim())
        throw DomainError(std::string(what) + ": formal mappings differ in order or dimensions");
}

}  // namespace

FormalMapping compose(const FormalMapping& outer, const FormalMapping& inner) {
    if (inner.codomain_dim() != outer.domain_dim())
        throw DomainError("compose: inner codomain dimension " + std::to_string(inner.codomain_dim()) +
                          " != outer domain dimension " + std::to_string(outer.domain_dim()));
    const int order = std::min(outer.order(), inner.order());
    return FormalMapping(Composer(outer, inner, order).run());
}

std::vector<double> evaluate(const FormalMapping& a, std::span<const double> y) {
    if (static_cast<int>(y.size()) != a.domain_dim())
        throw DomainError("evaluate: argument has length " + std::to_string(y.size()) + ", expected " +
                          std::to_string(a.domain_dim()));
    std::vector<double> out(static_cast<std::size_t>(a.codomain_dim()), 0.0);
    for (const auto& c : a.components()) {
        const auto v = c.apply_diagonal(y);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    }
    return out;
}

FormalMapping add(const FormalMapping& a, const FormalMapping& b) {
    require_same_shape(a, b, "add");
    std::vector<MultilinearMap> comps;
    for (int k = 1; k <= a.order(); ++k) comps.push_back(add(a.component(k), b.component(k)));
    return FormalMapping(std::move(comps));
}

FormalMapping scale(const FormalMapping& a, double factor) {
    std::vector<MultilinearMap> comps;
    for (const auto& c : a.components()) comps.push_back(scale(c, factor));
    return FormalMapping(std::move(comps));
}

FormalMapping with_order(const FormalMapping& a, int order) {
    if (order < 1) throw DomainError("with_order: order must be >= 1");
    std::vector<MultilinearMap> comps;
    for (int k = 1; k <= order; ++k) {
        if (k <= a.order())
            comps.push_back(a.component(k));
        else
            comps.emplace_back(k, a.domain_dim(), a.codomain_dim());
    }
    return FormalMapping(std::move(comps));
}

FormalMapping symmetrize(const FormalMapping& a) {
    std::vector<MultilinearMap> comps;
    for (const auto& c : a.components()) comps.push_back(symmetrize(c));
    return FormalMapping(std::move(comps));
}

FormalMapping scalar_mapping(std::span<const double> coefficients) {
    if (coefficients.empty()) throw DomainError("scalar_mapping: empty coefficient list");
    std::vector<MultilinearMap> comps;
    int k = 1;
    for (double c : coefficients) comps.emplace_back(k++, 1, 1, std::vector<double>{c});
    return FormalMapping(std::move(comps));
}

std::vector<double> scalar_coefficients(const FormalMapping& a) {
    if (a.domain_dim() != 1 || a.codomain_dim() != 1) throw DomainError("scalar_coefficients: mapping is not scalar");
    std::vector<double> out;
    for (const auto& c : a.components()) out.push_back(c.entries()[0]);
    return out;
}

std::vector<double> component_discrepancies(const FormalMapping& a, const FormalMapping& b) {
    require_same_shape(a, b, "component_discrepancies");
    std::vector<double> out;
    for (int k = 1; k <= a.order(); ++k) out.push_back(relative_difference(a.component(k), b.component(k)));
    return out;
}

}  // namespace fmflow
