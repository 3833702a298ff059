#include "geostyle/preshape.hpp"

#include "geostyle/detail/kernels.hpp"
#include "geostyle/error.hpp"

#include <algorithm>
#include <cmath>

namespace geostyle {

PreShape::PreShape(std::vector<double> unit_values) : values_(std::move(unit_values))
{
    if (values_.size() < 4 || values_.size() % 2 != 0) {
        fail(ErrorKind::shape, "a pre-shape needs 2 x k values with k >= 2, got " + std::to_string(values_.size()));
    }
}

double PreShape::dot(const PreShape& other) const
{
    if (other.landmarks() != landmarks()) {
        fail(ErrorKind::shape, "pre-shape landmark counts differ: " + std::to_string(landmarks()) + " vs " +
                                   std::to_string(other.landmarks()));
    }
    return detail::dot(values_, other.values_);
}

Tensor PreShape::to_tensor() const
{
    return Tensor({2, landmarks()}, values_);
}

Tensor reshape_to_landmarks(const Tensor& t)
{
    if (t.size() % 2 != 0) {
        fail(ErrorKind::shape, "landmark reshape needs an even element count, got " + std::to_string(t.size()));
    }
    return Tensor({2, t.size() / 2}, t.storage());
}

PreShape project(const Tensor& t)
{
    return project(t.values());
}

PreShape project(std::span<const double> values)
{
    if (values.size() % 2 != 0) {
        fail(ErrorKind::shape, "landmark reshape needs an even element count, got " + std::to_string(values.size()));
    }
    if (values.size() < 4) {
        fail(ErrorKind::shape, "a pre-shape needs at least 2 landmarks (4 values), got " +
                                   std::to_string(values.size()));
    }
    return PreShape(detail::project_values(values).unit);
}

double geodesic_distance(const PreShape& a, const PreShape& b)
{
    if (a.landmarks() != b.landmarks()) (void)a.dot(b); // throws the shape error
    return detail::unit_angle(a.values(), b.values()).angle;
}

double invariant_violation(const PreShape& p)
{
    const auto mean = [](std::span<const double> row) {
        double s = 0.0;
        for (double v : row) s += v;
        return s / static_cast<double>(row.size());
    };
    return std::max({std::abs(mean(p.xs())), std::abs(mean(p.ys())), std::abs(detail::norm(p.values()) - 1.0)});
}

} // namespace geostyle
