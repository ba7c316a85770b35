#include "fmflow/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fmflow/errors.hpp"

namespace fmflow {

namespace {

std::size_t diffusion_size(int degree, int dim, int noise_dim) {
    if (degree < 1) throw DomainError("diffusion tensor degree must be >= 1");
    if (dim < 1 || noise_dim < 1) throw DomainError("diffusion tensor dimensions must be >= 1");
    return static_cast<std::size_t>(dim) * ipow(static_cast<std::size_t>(dim), degree) * static_cast<std::size_t>(noise_dim);
}

}  // namespace

DiffusionTensor::DiffusionTensor(int degree, int dim, int noise_dim)
    : degree_(degree), dim_(dim), noise_dim_(noise_dim), entries_(diffusion_size(degree, dim, noise_dim), 0.0) {}

DiffusionTensor::DiffusionTensor(int degree, int dim, int noise_dim, std::vector<double> entries)
    : degree_(degree), dim_(dim), noise_dim_(noise_dim), entries_(std::move(entries)) {
    const std::size_t expected = diffusion_size(degree, dim, noise_dim);
    if (entries_.size() != expected)
        throw DomainError("diffusion tensor of degree " + std::to_string(degree) + " needs " + std::to_string(expected) +
                          " entries, got " + std::to_string(entries_.size()));
    if (!std::all_of(entries_.begin(), entries_.end(), [](double v) { return std::isfinite(v); }))
        throw DomainError("diffusion tensor entries must be finite");
}

DiffusionTensor DiffusionTensor::from_slices(std::span<const MultilinearMap> slices) {
    if (slices.empty()) throw DomainError("from_slices: no slices");
    const auto& first = slices.front();
    if (first.domain_dim() != first.codomain_dim()) throw DomainError("from_slices: slices must map Y^k -> Y");
    const std::size_t m = slices.size();
    std::vector<double> entries(first.size() * m);
    for (std::size_t r = 0; r < m; ++r) {
        const auto& s = slices[r];
        if (s.degree() != first.degree() || s.domain_dim() != first.domain_dim() || s.codomain_dim() != first.codomain_dim())
            throw DomainError("from_slices: slices differ in shape");
        for (std::size_t i = 0; i < s.size(); ++i) entries[i * m + r] = s.entries()[i];
    }
    return DiffusionTensor(first.degree(), first.domain_dim(), static_cast<int>(m), std::move(entries));
}

MultilinearMap DiffusionTensor::slice(int r) const {
    if (r < 0 || r >= noise_dim_) throw DomainError("slice: noise index out of range");
    const auto m = static_cast<std::size_t>(noise_dim_);
    std::vector<double> out(entries_.size() / m);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = entries_[i * m + static_cast<std::size_t>(r)];
    return MultilinearMap::unchecked(degree_, dim_, dim_, std::move(out));
}

MultilinearMap DiffusionTensor::contract_noise(std::span<const double> dw) const {
    if (static_cast<int>(dw.size()) != noise_dim_)
        throw DomainError("contract_noise: increment has length " + std::to_string(dw.size()) + ", expected " +
                          std::to_string(noise_dim_));
    const auto m = static_cast<std::size_t>(noise_dim_);
    std::vector<double> out(entries_.size() / m);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (std::size_t r = 0; r < m; ++r) acc += entries_[i * m + r] * dw[r];
        out[i] = acc;
    }
    return MultilinearMap::unchecked(degree_, dim_, dim_, std::move(out));
}

bool DiffusionTensor::is_zero() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(), [](double v) { return v == 0.0; });
}

DiffusionFamily::DiffusionFamily(std::vector<DiffusionTensor> components) : components_(std::move(components)) {
    if (components_.empty()) throw DomainError("diffusion family needs at least one component");
    for (std::size_t i = 0; i < components_.size(); ++i) {
        const auto& c = components_[i];
        if (c.degree() != static_cast<int>(i) + 1)
            throw DomainError("diffusion component " + std::to_string(i + 1) + " has degree " + std::to_string(c.degree()));
        if (c.dim() != components_.front().dim() || c.noise_dim() != components_.front().noise_dim())
            throw DomainError("diffusion component " + std::to_string(i + 1) + " has inconsistent dimensions");
    }
}

DiffusionFamily DiffusionFamily::zero(int order, int dim, int noise_dim) {
    if (order < 1) throw DomainError("diffusion family order must be >= 1");
    std::vector<DiffusionTensor> comps;
    for (int k = 1; k <= order; ++k) comps.emplace_back(k, dim, noise_dim);
    return DiffusionFamily(std::move(comps));
}

const DiffusionTensor& DiffusionFamily::component(int degree) const {
    if (degree < 1 || degree > order())
        throw DomainError("diffusion component " + std::to_string(degree) + " outside 1.." + std::to_string(order()));
    return components_[static_cast<std::size_t>(degree - 1)];
}

FormalMapping DiffusionFamily::contract_noise(std::span<const double> dw) const {
    std::vector<MultilinearMap> comps;
    for (const auto& c : components_) comps.push_back(c.contract_noise(dw));
    return FormalMapping(std::move(comps));
}

bool DiffusionFamily::is_zero() const noexcept {
    return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.is_zero(); });
}

}  // namespace fmflow
