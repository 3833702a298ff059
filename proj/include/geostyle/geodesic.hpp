#pragma once

#include "geostyle/preshape.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace geostyle {

/// Non-negative weights, not all zero, one per input pre-shape.
class WeightSet {
public:
    explicit WeightSet(std::vector<double> weights);

    [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return weights_; }
    double operator[](std::size_t i) const noexcept { return weights_[i]; }

private:
    std::vector<double> weights_;
};

enum class WeightScheme { emphasis, dirichlet };

WeightScheme parse_weight_scheme(std::string_view name);
std::string_view to_string(WeightScheme scheme) noexcept;

struct AugmentConfig {
    std::optional<std::size_t> m; // augmented feature count; unset means m = n
    double gamma = 0.5;           // emphasis blend
    WeightScheme scheme = WeightScheme::emphasis;
    std::uint64_t seed = 0;       // dirichlet only

    void validate() const;
    [[nodiscard]] std::size_t count_for(std::size_t n) const { return m.value_or(n); }
};

struct CurvePoint {
    PreShape point;
    /// s exceeded d(a, b); the point lies past b on the same great circle.
    bool beyond_arc = false;
};

/// Point at arc length s from a toward b, renormalised.
/// Coincident endpoints (d < 1e-9) return a; antipodal ones (d > pi - 1e-9)
/// throw degenerate_geodesic. s must lie in [0, pi].
CurvePoint curve_point(const PreShape& a, const PreShape& b, double s);

/// Iterated weighted curve walk: mu_1 = tau_1, then
/// mu_j = curve(mu_{j-1}, tau_j, w_j / sum_{i<=j} w_i) for j = 2..n.
/// The parameter is used as a radian as-is. The result depends on input order.
PreShape surface_point(std::span<const PreShape> taus, const WeightSet& weights);

/// m weight sets over n inputs. Emphasis: w_j^(i) = (1-gamma)/n + gamma [j == i mod n].
/// Dirichlet: seeded uniform draws from the simplex.
std::vector<WeightSet> generate_weight_sets(std::size_t n, const AugmentConfig& cfg);

/// One surface point per generated weight set.
std::vector<PreShape> augment(std::span<const PreShape> taus, const AugmentConfig& cfg);
std::vector<PreShape> augment(std::span<const PreShape> taus, std::span<const WeightSet> weight_sets);

} // namespace geostyle
