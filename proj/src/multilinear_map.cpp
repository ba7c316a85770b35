#include "fmflow/multilinear_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fmflow/errors.hpp"

namespace fmflow {

std::size_t ipow(std::size_t base, int exponent) {
    if (exponent < 0) throw DomainError("ipow: negative exponent");
    std::size_t result = 1;
    for (int i = 0; i < exponent; ++i) {
        if (base != 0 && result > std::numeric_limits<std::size_t>::max() / base)
            throw DomainError("tensor extent overflows size_t");
        result *= base;
    }
    return result;
}

namespace {

void check_shape(int degree, int domain_dim, int codomain_dim, std::size_t count) {
    if (degree < 1) throw DomainError("multilinear map degree must be >= 1, got " + std::to_string(degree));
    if (domain_dim < 1 || codomain_dim < 1) throw DomainError("multilinear map dimensions must be >= 1");
    const std::size_t expected = static_cast<std::size_t>(codomain_dim) * ipow(static_cast<std::size_t>(domain_dim), degree);
    if (count != expected)
        throw DomainError("multilinear map of degree " + std::to_string(degree) + " (" + std::to_string(codomain_dim) +
                          " x " + std::to_string(domain_dim) + "^" + std::to_string(degree) + ") needs " +
                          std::to_string(expected) + " entries, got " + std::to_string(count));
}

}  // namespace

MultilinearMap::MultilinearMap(int degree, int domain_dim, int codomain_dim)
    : degree_(degree), domain_dim_(domain_dim), codomain_dim_(codomain_dim) {
    if (degree < 1) throw DomainError("multilinear map degree must be >= 1, got " + std::to_string(degree));
    if (domain_dim < 1 || codomain_dim < 1) throw DomainError("multilinear map dimensions must be >= 1");
    entries_.assign(static_cast<std::size_t>(codomain_dim) * ipow(static_cast<std::size_t>(domain_dim), degree), 0.0);
}

MultilinearMap::MultilinearMap(int degree, int domain_dim, int codomain_dim, std::vector<double> entries)
    : MultilinearMap(Unchecked{}, degree, domain_dim, codomain_dim, std::move(entries)) {
    if (!is_finite()) throw DomainError("multilinear map entries must be finite");
}

MultilinearMap::MultilinearMap(Unchecked, int degree, int domain_dim, int codomain_dim, std::vector<double> entries)
    : degree_(degree), domain_dim_(domain_dim), codomain_dim_(codomain_dim), entries_(std::move(entries)) {
    check_shape(degree, domain_dim, codomain_dim, entries_.size());
}

MultilinearMap MultilinearMap::unchecked(int degree, int domain_dim, int codomain_dim, std::vector<double> entries) {
    return MultilinearMap(Unchecked{}, degree, domain_dim, codomain_dim, std::move(entries));
}

MultilinearMap MultilinearMap::matrix(int rows, int cols, std::vector<double> entries) {
    return MultilinearMap(1, cols, rows, std::move(entries));
}

MultilinearMap MultilinearMap::identity_matrix(int dim) {
    MultilinearMap id(1, dim, dim);
    for (int i = 0; i < dim; ++i) id.entries_[static_cast<std::size_t>(i) * dim + i] = 1.0;
    return id;
}

double MultilinearMap::at(int z, std::span<const int> args) const {
    if (static_cast<int>(args.size()) != degree_) throw DomainError("at: expected " + std::to_string(degree_) + " argument indices");
    if (z < 0 || z >= codomain_dim_) throw DomainError("at: output index out of range");
    std::size_t flat = static_cast<std::size_t>(z);
    for (int i : args) {
        if (i < 0 || i >= domain_dim_) throw DomainError("at: argument index out of range");
        flat = flat * domain_dim_ + i;
    }
    return entries_[flat];
}

std::vector<double> MultilinearMap::apply(std::span<const std::vector<double>> args) const {
    if (static_cast<int>(args.size()) != degree_) throw DomainError("apply: expected " + std::to_string(degree_) + " arguments");
    for (const auto& a : args)
        if (static_cast<int>(a.size()) != domain_dim_) throw DomainError("apply: argument length mismatch");
    // Contract the fastest slot (the last argument) first.
    std::vector<double> current(entries_.begin(), entries_.end());
    const auto d = static_cast<std::size_t>(domain_dim_);
    for (int slot = degree_ - 1; slot >= 0; --slot) {
        const auto& x = args[static_cast<std::size_t>(slot)];
        std::vector<double> next(current.size() / d, 0.0);
        for (std::size_t p = 0; p < next.size(); ++p) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) acc += current[p * d + i] * x[i];
            next[p] = acc;
        }
        current = std::move(next);
    }
    return current;
}

std::vector<double> MultilinearMap::apply_diagonal(std::span<const double> y) const {
    if (static_cast<int>(y.size()) != domain_dim_) throw DomainError("apply_diagonal: argument length mismatch");
    std::vector<double> current(entries_.begin(), entries_.end());
    const auto d = static_cast<std::size_t>(domain_dim_);
    for (int slot = 0; slot < degree_; ++slot) {
        std::vector<double> next(current.size() / d, 0.0);
        for (std::size_t p = 0; p < next.size(); ++p) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) acc += current[p * d + i] * y[i];
            next[p] = acc;
        }
        current = std::move(next);
    }
    return current;
}

double MultilinearMap::frobenius_norm() const noexcept {
    double s = 0.0;
    for (double v : entries_) s += v * v;
    return std::sqrt(s);
}

bool MultilinearMap::is_finite() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(), [](double v) { return std::isfinite(v); });
}

bool MultilinearMap::is_zero() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(), [](double v) { return v == 0.0; });
}

namespace detail {

std::vector<double> contract_slot(std::span<const double> t, std::size_t outer, std::size_t mid, std::size_t inner,
                                  std::span<const double> arg, std::size_t block) {
    std::vector<double> out(outer * block * inner, 0.0);
    for (std::size_t p = 0; p < outer; ++p) {
        const double* tp = t.data() + p * mid * inner;
        double* op = out.data() + p * block * inner;
        for (std::size_t i = 0; i < mid; ++i) {
            const double* ti = tp + i * inner;
            const double* ai = arg.data() + i * block;
            for (std::size_t x = 0; x < block; ++x) {
                const double c = ai[x];
                double* ox = op + x * inner;
                for (std::size_t s = 0; s < inner; ++s) ox[s] += ti[s] * c;
            }
        }
    }
    return out;
}

}  // namespace detail

MultilinearMap apply_to_tuple(const MultilinearMap& outer, std::span<const MultilinearMap> args) {
    if (static_cast<int>(args.size()) != outer.degree())
        throw DomainError("apply_to_tuple: outer map has degree " + std::to_string(outer.degree()) + " but " +
                          std::to_string(args.size()) + " arguments were given");
    const int x_dim = args.front().domain_dim();
    int total_degree = 0;
    for (const auto& a : args) {
        if (a.codomain_dim() != outer.domain_dim())
            throw DomainError("apply_to_tuple: argument codomain does not match outer domain");
        if (a.domain_dim() != x_dim) throw DomainError("apply_to_tuple: arguments do not share a domain");
        total_degree += a.degree();
    }

    const auto d = static_cast<std::size_t>(outer.domain_dim());
    const auto dx = static_cast<std::size_t>(x_dim);
    std::vector<double> current(outer.entries().begin(), outer.entries().end());
    std::size_t prefix = static_cast<std::size_t>(outer.codomain_dim());
    for (std::size_t slot = 0; slot < args.size(); ++slot) {
        const std::size_t remaining = ipow(d, outer.degree() - static_cast<int>(slot) - 1);
        const std::size_t block = ipow(dx, args[slot].degree());
        current = detail::contract_slot(current, prefix, d, remaining, args[slot].entries(), block);
        prefix *= block;
    }
    return MultilinearMap::unchecked(total_degree, x_dim, outer.codomain_dim(), std::move(current));
}

MultilinearMap apply_to_tuple(const MultilinearMap& outer, std::initializer_list<MultilinearMap> args) {
    return apply_to_tuple(outer, std::span<const MultilinearMap>(args.begin(), args.size()));
}

MultilinearMap symmetrize(const MultilinearMap& map) {
    const int k = map.degree();
    if (k == 1) return map;
    const auto d = static_cast<std::size_t>(map.domain_dim());
    const std::size_t block = map.argument_size();
    const auto src = map.entries();

    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> out(map.size(), 0.0);
    std::vector<std::size_t> digits(static_cast<std::size_t>(k));
    double count = 0.0;
    do {
        for (std::size_t flat = 0; flat < block; ++flat) {
            std::size_t rest = flat;
            for (int s = k - 1; s >= 0; --s) {
                digits[static_cast<std::size_t>(s)] = rest % d;
                rest /= d;
            }
            std::size_t permuted = 0;
            for (int s = 0; s < k; ++s) permuted = permuted * d + digits[static_cast<std::size_t>(perm[static_cast<std::size_t>(s)])];
            for (std::size_t z = 0; z < static_cast<std::size_t>(map.codomain_dim()); ++z)
                out[z * block + flat] += src[z * block + permuted];
        }
        count += 1.0;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (double& v : out) v /= count;
    return MultilinearMap::unchecked(k, map.domain_dim(), map.codomain_dim(), std::move(out));
}

MultilinearMap add(const MultilinearMap& a, const MultilinearMap& b) {
    if (a.degree() != b.degree() || a.domain_dim() != b.domain_dim() || a.codomain_dim() != b.codomain_dim())
        throw DomainError("add: shape mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.entries()[i] + b.entries()[i];
    return MultilinearMap::unchecked(a.degree(), a.domain_dim(), a.codomain_dim(), std::move(out));
}

MultilinearMap scale(const MultilinearMap& a, double factor) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.entries()[i] * factor;
    return MultilinearMap::unchecked(a.degree(), a.domain_dim(), a.codomain_dim(), std::move(out));
}

double relative_difference(const MultilinearMap& a, const MultilinearMap& b) {
    if (a.size() != b.size()) throw DomainError("relative_difference: shape mismatch");
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = a.entries()[i] - b.entries()[i];
        diff += e * e;
    }
    diff = std::sqrt(diff);
    const double ref = b.frobenius_norm();
    return ref > 0.0 ? diff / ref : diff;
}

}  // namespace fmflow
