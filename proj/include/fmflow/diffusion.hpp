#pragma once

#include <span>
#include <vector>

#include "fmflow/formal_mapping.hpp"
#include "fmflow/multilinear_map.hpp"

namespace fmflow {

/// A (k+1)-linear map Y^k x R^m -> Y: the degree-k diffusion coefficient b_k.
///
/// Layout dY x dY^k x m, output index slowest, then the k state slots, and the
/// noise slot fastest.
class DiffusionTensor {
public:
    /// Zero tensor.
    DiffusionTensor(int degree, int dim, int noise_dim);
    DiffusionTensor(int degree, int dim, int noise_dim, std::vector<double> entries);

    /// Interleaves m maps of degree k (one per noise coordinate).
    static DiffusionTensor from_slices(std::span<const MultilinearMap> slices);

    int degree() const noexcept { return degree_; }
    int dim() const noexcept { return dim_; }
    int noise_dim() const noexcept { return noise_dim_; }
    std::span<const double> entries() const noexcept { return entries_; }

    /// The degree-k map with the noise slot fixed to unit vector e_r.
    MultilinearMap slice(int r) const;

    /// b_k(., ..., ., dw).
    MultilinearMap contract_noise(std::span<const double> dw) const;

    bool is_zero() const noexcept;

    friend bool operator==(const DiffusionTensor&, const DiffusionTensor&) = default;

private:
    int degree_;
    int dim_;
    int noise_dim_;
    std::vector<double> entries_;
};

/// b_1, ..., b_N sharing dY and m.
class DiffusionFamily {
public:
    explicit DiffusionFamily(std::vector<DiffusionTensor> components);
    static DiffusionFamily zero(int order, int dim, int noise_dim);

    int order() const noexcept { return static_cast<int>(components_.size()); }
    int dim() const noexcept { return components_.front().dim(); }
    int noise_dim() const noexcept { return components_.front().noise_dim(); }

    const DiffusionTensor& component(int degree) const;
    std::span<const DiffusionTensor> components() const noexcept { return components_; }

    /// Formal mapping y -> b(y)(dw).
    FormalMapping contract_noise(std::span<const double> dw) const;

    bool is_zero() const noexcept;

    friend bool operator==(const DiffusionFamily&, const DiffusionFamily&) = default;

private:
    std::vector<DiffusionTensor> components_;
};

}  // namespace fmflow
