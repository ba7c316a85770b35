#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fmflow {

/// Integer power for tensor extents. Throws DomainError on size_t overflow.
std::size_t ipow(std::size_t base, int exponent);

/// A k-linear map Y^k -> Z stored as a dense tensor.
///
/// Layout: entries has dZ * dY^k elements, row-major with the output index
/// slowest and the argument indices following in argument order, so
///
///     T[z; i_1, ..., i_k] = entries[((z * dY + i_1) * dY + i_2) ... + i_k].
///
/// Values are immutable once constructed. The checked constructor rejects
/// non-finite entries; results produced by arithmetic on finite maps may still
/// overflow, which is why callers that integrate in time test is_finite().
class MultilinearMap {
public:
    /// Zero map.
    MultilinearMap(int degree, int domain_dim, int codomain_dim);
    MultilinearMap(int degree, int domain_dim, int codomain_dim, std::vector<double> entries);

    /// Same as the checked constructor except that entries are not scanned
    /// for NaN/Inf. The entry count is still validated.
    static MultilinearMap unchecked(int degree, int domain_dim, int codomain_dim,
                                    std::vector<double> entries);

    /// Matrix (degree-1 map) from row-major rows x cols data.
    static MultilinearMap matrix(int rows, int cols, std::vector<double> entries);
    static MultilinearMap identity_matrix(int dim);

    int degree() const noexcept { return degree_; }
    int domain_dim() const noexcept { return domain_dim_; }
    int codomain_dim() const noexcept { return codomain_dim_; }

    /// dY^k, the number of entries per output coordinate.
    std::size_t argument_size() const noexcept { return entries_.size() / static_cast<std::size_t>(codomain_dim_); }
    std::size_t size() const noexcept { return entries_.size(); }
    std::span<const double> entries() const noexcept { return entries_; }

    /// Entry T[z; args...]; args.size() must equal degree().
    double at(int z, std::span<const int> args) const;

    /// T(x_1, ..., x_k) for k separate argument vectors.
    std::vector<double> apply(std::span<const std::vector<double>> args) const;

    /// T(y, ..., y).
    std::vector<double> apply_diagonal(std::span<const double> y) const;

    double frobenius_norm() const noexcept;
    bool is_finite() const noexcept;
    bool is_zero() const noexcept;

    friend bool operator==(const MultilinearMap&, const MultilinearMap&) = default;

private:
    struct Unchecked {};
    MultilinearMap(Unchecked, int degree, int domain_dim, int codomain_dim, std::vector<double> entries);

    int degree_;
    int domain_dim_;
    int codomain_dim_;
    std::vector<double> entries_;
};

/// b_k(a_{j_1}, ..., a_{j_k}): the degree-(j_1 + ... + j_k) map whose value on
/// (y_1, ..., y_n) feeds consecutive blocks of inputs to each argument map and
/// their outputs to the slots of `outer`.
MultilinearMap apply_to_tuple(const MultilinearMap& outer, std::span<const MultilinearMap> args);
MultilinearMap apply_to_tuple(const MultilinearMap& outer, std::initializer_list<MultilinearMap> args);

/// Average over all permutations of the argument slots.
MultilinearMap symmetrize(const MultilinearMap& map);

MultilinearMap add(const MultilinearMap& a, const MultilinearMap& b);
MultilinearMap scale(const MultilinearMap& a, double factor);

/// ||a - b||_F / ||b||_F, or ||a - b||_F when b is zero.
double relative_difference(const MultilinearMap& a, const MultilinearMap& b);

namespace detail {

/// Contracts the middle index of t (layout [outer][mid][inner]) against the
/// output index of `arg` (layout [mid][block]), producing [outer][block][inner].
/// Sums over mid in ascending order.
std::vector<double> contract_slot(std::span<const double> t, std::size_t outer, std::size_t mid,
                                  std::size_t inner, std::span<const double> arg, std::size_t block);

}  // namespace detail

}  // namespace fmflow
