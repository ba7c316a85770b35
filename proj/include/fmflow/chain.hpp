#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fmflow/brownian.hpp"
#include "fmflow/coefficients.hpp"
#include "fmflow/diffusion.hpp"
#include "fmflow/formal_mapping.hpp"

namespace fmflow {

/// S(t_i, s) for every knot of a path's grid, s = grid.start().
struct ChainSolution {
    TimeGrid grid;
    std::uint64_t coefficient_fingerprint = 0;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    FormalMapping initial;
    std::vector<FormalMapping> states;

    const FormalMapping& final_state() const { return states.back(); }
};

/// Psi = Id + a * dt + b(., dw): one Euler-Maruyama step as a formal mapping.
/// compose(Psi, S) is the Euler update of every component of S at once.
FormalMapping one_step_map(const FormalMapping& drift, const DiffusionFamily& diffusion, double dt,
                           std::span<const double> dw);

/// Euler-Maruyama for the triangular system of component equations, started
/// from `initial` at path.grid().start(). Coefficients are sampled at the left
/// end of each step; state i + 1 is compose(one_step_map(...), state i).
///
/// Throws NumericalBlowup on the first non-finite component.
ChainSolution solve_chain(const CoefficientFamily& coeffs, const FormalMapping& initial, const BrownianPath& path);

/// Euler-Maruyama for the underlying nonlinear equation
///   dy = a(t)(y) dt + b(t)(y) dw,
/// evaluating the truncated series for drift and diffusion.
std::vector<std::vector<double>> simulate_direct(const CoefficientFamily& coeffs, std::span<const double> y0,
                                                 const BrownianPath& path);

struct EvolutionReport {
    int split_knot = 0;
    /// ||(S(t,tau) o S(tau,s))_k - S(t,s)_k|| / ||S(t,s)_k|| for k = 1..N.
    std::vector<double> discrepancies;
    double max_discrepancy = 0.0;
    /// Componentwise equality with no rounding difference at all.
    bool exact = false;
};

/// Solves S(t,s) over the whole path, S(tau,s) and S(t,tau) over the two
/// halves (each from Id), and compares the composition with the direct run.
/// split_knot must satisfy 0 < split_knot < steps.
EvolutionReport evolution_check(const CoefficientFamily& coeffs, const BrownianPath& path, int split_knot);
/// Same, with tau given as a time; throws DomainError when tau is not a knot.
EvolutionReport evolution_check_at(const CoefficientFamily& coeffs, const BrownianPath& path, double tau);

/// Forcing of the degree-n equation: the k >= 2 part of the drift and
/// diffusion sums, which only involves components 1..n-1 of the state.
struct ForcingTerms {
    MultilinearMap drift;
    DiffusionTensor noise;
};

ForcingTerms forcing_terms(int n, const FormalMapping& state, const FormalMapping& drift, const DiffusionFamily& diffusion);

}  // namespace fmflow
