#include "fmflow/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "fmflow/errors.hpp"

namespace fmflow {

namespace {

struct Fnv1a {
    std::uint64_t state = 0xCBF29CE484222325ULL;

    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state ^= p[i];
            state *= 0x100000001B3ULL;
        }
    }
    void number(std::int64_t v) { bytes(&v, sizeof v); }
    void values(std::span<const double> v) { bytes(v.data(), v.size() * sizeof(double)); }
};

}  // namespace

std::uint64_t fingerprint(const FormalMapping& drift, const DiffusionFamily& diffusion) {
    Fnv1a h;
    h.number(drift.order());
    h.number(drift.domain_dim());
    for (const auto& c : drift.components()) h.values(c.entries());
    h.number(diffusion.order());
    h.number(diffusion.noise_dim());
    for (const auto& c : diffusion.components()) h.values(c.entries());
    return h.state;
}

CoefficientFamily::CoefficientFamily(int order, int dim, int noise_dim, DriftProvider drift, DiffusionProvider diffusion,
                                     std::uint64_t fp)
    : order_(order), dim_(dim), noise_dim_(noise_dim), drift_(std::move(drift)), diffusion_(std::move(diffusion)),
      fingerprint_(fp) {
    if (order < 1 || dim < 1 || noise_dim < 1) throw DomainError("coefficient family: order and dimensions must be >= 1");
    if (!drift_ || !diffusion_) throw DomainError("coefficient family: missing provider");
}

CoefficientFamily CoefficientFamily::constant(FormalMapping drift, DiffusionFamily diffusion) {
    if (drift.domain_dim() != drift.codomain_dim()) throw DomainError("drift must map Y into Y");
    if (drift.order() != diffusion.order()) throw DomainError("drift and diffusion orders differ");
    if (drift.domain_dim() != diffusion.dim()) throw DomainError("drift and diffusion dimensions differ");
    if (!drift.is_finite()) throw DomainError("drift entries must be finite");
    const int order = drift.order();
    const int dim = drift.domain_dim();
    const int m = diffusion.noise_dim();
    const std::uint64_t fp = fmflow::fingerprint(drift, diffusion);
    auto held = std::make_shared<const Constant>(Constant{std::move(drift), std::move(diffusion)});
    CoefficientFamily family(
        order, dim, m, [held](double) { return held->drift; }, [held](double) { return held->diffusion; }, fp);
    family.constant_ = std::move(held);
    return family;
}

CoefficientFamily CoefficientFamily::sampled(const TimeGrid& grid, std::vector<FormalMapping> drift,
                                             std::vector<DiffusionFamily> diffusion) {
    const auto knots = static_cast<std::size_t>(grid.steps()) + 1;
    if (drift.size() != knots || diffusion.size() != knots)
        throw DomainError("sampled coefficients need one sample per grid knot");
    Fnv1a h;
    for (std::size_t i = 0; i < knots; ++i) h.number(static_cast<std::int64_t>(fmflow::fingerprint(drift[i], diffusion[i])));
    auto a = std::make_shared<const std::vector<FormalMapping>>(std::move(drift));
    auto b = std::make_shared<const std::vector<DiffusionFamily>>(std::move(diffusion));
    auto nearest = [grid](double t) {
        const double pos = std::round((t - grid.start()) / grid.step_size());
        return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(grid.steps())));
    };
    return CoefficientFamily(
        a->front().order(), a->front().domain_dim(), b->front().noise_dim(),
        [a, nearest](double t) { return (*a)[nearest(t)]; }, [b, nearest](double t) { return (*b)[nearest(t)]; },
        h.state);
}

FormalMapping CoefficientFamily::drift(double t) const {
    if (constant_) return constant_->drift;
    FormalMapping a = drift_(t);
    if (a.order() != order_ || a.domain_dim() != dim_ || a.codomain_dim() != dim_)
        throw DomainError("drift provider returned a mapping of the wrong shape at t=" + std::to_string(t));
    if (!a.is_finite()) throw DomainError("drift provider returned non-finite entries at t=" + std::to_string(t));
    return a;
}

DiffusionFamily CoefficientFamily::diffusion(double t) const {
    if (constant_) return constant_->diffusion;
    DiffusionFamily b = diffusion_(t);
    if (b.order() != order_ || b.dim() != dim_ || b.noise_dim() != noise_dim_)
        throw DomainError("diffusion provider returned a family of the wrong shape at t=" + std::to_string(t));
    return b;
}

}  // namespace fmflow
