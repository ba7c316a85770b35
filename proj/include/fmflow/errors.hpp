#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fmflow {

/// Shape, index or argument-range violation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A requested configuration that the library deliberately does not handle
/// (e.g. the explicit formula with a noisy linear part).
class UnsupportedCase : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A non-finite value appeared during time integration.
///
/// `step` is the index of the step whose result was non-finite (the state at
/// knot step + 1 is the first bad one). `component` is the degree of the
/// offending formal-mapping component, or 0 for direct trajectories.
class NumericalBlowup : public std::runtime_error {
public:
    NumericalBlowup(std::size_t step, int component)
        : std::runtime_error("non-finite value at step " + std::to_string(step) +
                             (component > 0 ? ", component " + std::to_string(component) : std::string{})),
          step_(step),
          component_(component) {}

    std::size_t step() const noexcept { return step_; }
    int component() const noexcept { return component_; }

private:
    std::size_t step_;
    int component_;
};

}  // namespace fmflow
