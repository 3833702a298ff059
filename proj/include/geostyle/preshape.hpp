#pragma once

#include "geostyle/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace geostyle {

/// A point on the Pre-Shape hypersphere: a 2 x k landmark matrix whose two
/// coordinate rows each have zero mean and whose Frobenius norm is one.
/// Stored row-major, x row first.
class PreShape {
public:
    /// Adopts values that already satisfy the invariants (length 2k, k >= 2).
    /// Only the length is checked; use project() for arbitrary input.
    explicit PreShape(std::vector<double> unit_values);

    [[nodiscard]] std::size_t landmarks() const noexcept { return values_.size() / 2; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<const double> xs() const noexcept { return {values_.data(), landmarks()}; }
    [[nodiscard]] std::span<const double> ys() const noexcept
    {
        return {values_.data() + landmarks(), landmarks()};
    }

    /// Frobenius inner product.
    [[nodiscard]] double dot(const PreShape& other) const;

    /// The landmark matrix as a 2 x k tensor.
    [[nodiscard]] Tensor to_tensor() const;

    friend bool operator==(const PreShape&, const PreShape&) = default;

private:
    std::vector<double> values_;
};

/// Post-centering norms at or below this are rejected as degenerate.
inline constexpr double kDegenerateNorm = 1e-12;

/// Row-major flatten, then first half -> x row, second half -> y row.
/// Returns a 2 x (L/2) tensor. Odd L is a shape error.
Tensor reshape_to_landmarks(const Tensor& t);

/// Centre each coordinate row, then scale to unit Frobenius norm.
PreShape project(const Tensor& t);
PreShape project(std::span<const double> values);

/// Arc length between two pre-shapes, arccos of the clamped inner product.
double geodesic_distance(const PreShape& a, const PreShape& b);

/// Largest deviation from the invariants: max(|row mean|, |norm - 1|).
double invariant_violation(const PreShape& p);

} // namespace geostyle
