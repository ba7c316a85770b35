#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "fmflow/brownian.hpp"
#include "fmflow/diffusion.hpp"
#include "fmflow/formal_mapping.hpp"

namespace fmflow {

/// Drift a(t) and diffusion b(t) of the flow equation, queried at grid knots.
class CoefficientFamily {
public:
    using DriftProvider = std::function<FormalMapping(double)>;
    using DiffusionProvider = std::function<DiffusionFamily(double)>;

    /// Time-dependent coefficients. Every query is checked against
    /// (order, dim, noise_dim). `fingerprint` is recorded as provenance only.
    CoefficientFamily(int order, int dim, int noise_dim, DriftProvider drift, DiffusionProvider diffusion,
                      std::uint64_t fingerprint = 0);

    static CoefficientFamily constant(FormalMapping drift, DiffusionFamily diffusion);

    /// Per-knot samples on `grid`; a query at time t returns the sample of
    /// the knot nearest to t.
    static CoefficientFamily sampled(const TimeGrid& grid, std::vector<FormalMapping> drift,
                                     std::vector<DiffusionFamily> diffusion);

    int order() const noexcept { return order_; }
    int dim() const noexcept { return dim_; }
    int noise_dim() const noexcept { return noise_dim_; }
    bool is_constant() const noexcept { return constant_ != nullptr; }
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

    FormalMapping drift(double t) const;
    DiffusionFamily diffusion(double t) const;

private:
    struct Constant {
        FormalMapping drift;
        DiffusionFamily diffusion;
    };

    int order_;
    int dim_;
    int noise_dim_;
    DriftProvider drift_;
    DiffusionProvider diffusion_;
    std::shared_ptr<const Constant> constant_;
    std::uint64_t fingerprint_;
};

/// FNV-1a over the raw bytes of the entries and shapes.
std::uint64_t fingerprint(const FormalMapping& drift, const DiffusionFamily& diffusion);

}  // namespace fmflow
