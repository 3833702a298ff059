#include "geostyle/geodesic.hpp"

#include "geostyle/detail/kernels.hpp"
#include "geostyle/error.hpp"
#include "geostyle/parallel.hpp"
#include "geostyle/random.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace geostyle {

WeightSet::WeightSet(std::vector<double> weights) : weights_(std::move(weights))
{
    if (weights_.empty()) fail(ErrorKind::config, "weight set is empty");
    double sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
            fail(ErrorKind::config, "weights must be finite and non-negative (index " + std::to_string(i) + ")", i);
        }
        sum += weights_[i];
    }
    if (!(sum > 0.0)) fail(ErrorKind::config, "weights must not all be zero");
}

WeightScheme parse_weight_scheme(std::string_view name)
{
    if (name == "emphasis") return WeightScheme::emphasis;
    if (name == "dirichlet") return WeightScheme::dirichlet;
    fail(ErrorKind::config, "unknown weight scheme '" + std::string(name) + "' (expected emphasis|dirichlet)");
}

std::string_view to_string(WeightScheme scheme) noexcept
{
    return scheme == WeightScheme::emphasis ? "emphasis" : "dirichlet";
}

void AugmentConfig::validate() const
{
    if (m && *m < 1) fail(ErrorKind::config, "augment count m must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) fail(ErrorKind::config, "gamma must lie in [0, 1]");
}

CurvePoint curve_point(const PreShape& a, const PreShape& b, double s)
{
    if (a.landmarks() != b.landmarks()) {
        fail(ErrorKind::shape, "pre-shape landmark counts differ: " + std::to_string(a.landmarks()) + " vs " +
                                   std::to_string(b.landmarks()));
    }
    if (!(s >= 0.0 && s <= std::numbers::pi)) {
        fail(ErrorKind::config, "curve parameter s must lie in [0, pi], got " + std::to_string(s));
    }
    auto step = detail::curve_step(a.values(), b.values(), s);
    return {PreShape(std::move(step.point)), step.beyond_arc};
}

namespace {

void check_surface_inputs(std::span<const PreShape> taus, std::size_t weight_count)
{
    if (taus.size() < 2) fail(ErrorKind::config, "a geodesic surface needs at least 2 pre-shapes");
    if (weight_count != taus.size()) {
        fail(ErrorKind::config, "weight set has " + std::to_string(weight_count) + " entries for " +
                                    std::to_string(taus.size()) + " pre-shapes");
    }
    for (std::size_t j = 1; j < taus.size(); ++j) {
        if (taus[j].landmarks() != taus[0].landmarks()) {
            fail(ErrorKind::shape, "pre-shape " + std::to_string(j) + " has a different landmark count", j);
        }
    }
}

std::vector<std::vector<double>> raw_values(std::span<const PreShape> taus)
{
    std::vector<std::vector<double>> raw;
    raw.reserve(taus.size());
    for (const auto& t : taus) raw.emplace_back(t.values().begin(), t.values().end());
    return raw;
}

} // namespace

PreShape surface_point(std::span<const PreShape> taus, const WeightSet& weights)
{
    check_surface_inputs(taus, weights.size());
    const auto raw = raw_values(taus);
    auto trace = detail::surface_forward(raw, weights.values());
    return PreShape(trace.result(raw));
}

std::vector<WeightSet> generate_weight_sets(std::size_t n, const AugmentConfig& cfg)
{
    cfg.validate();
    if (n < 2) fail(ErrorKind::config, "weight sets need n >= 2 inputs");
    const std::size_t m = cfg.count_for(n);
    std::vector<WeightSet> sets;
    sets.reserve(m);
    if (cfg.scheme == WeightScheme::emphasis) {
        const double base = (1.0 - cfg.gamma) / static_cast<double>(n);
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<double> w(n, base);
            w[i % n] += cfg.gamma;
            sets.emplace_back(std::move(w));
        }
    } else {
        // normalised Exp(1) draws are uniform on the simplex
        Rng rng(cfg.seed);
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<double> w(n);
            double sum = 0.0;
            for (double& v : w) {
                v = rng.exponential();
                sum += v;
            }
            for (double& v : w) v /= sum;
            sets.emplace_back(std::move(w));
        }
    }
    return sets;
}

std::vector<PreShape> augment(std::span<const PreShape> taus, const AugmentConfig& cfg)
{
    if (taus.size() < 2) fail(ErrorKind::config, "augmentation needs at least 2 pre-shapes");
    const auto sets = generate_weight_sets(taus.size(), cfg);
    return augment(taus, sets);
}

std::vector<PreShape> augment(std::span<const PreShape> taus, std::span<const WeightSet> weight_sets)
{
    for (const auto& w : weight_sets) check_surface_inputs(taus, w.size());
    const auto raw = raw_values(taus);
    std::vector<std::vector<double>> points(weight_sets.size());
    parallel_for(weight_sets.size(), [&](std::size_t i) {
        auto trace = detail::surface_forward(raw, weight_sets[i].values());
        points[i] = trace.result(raw);
    });
    std::vector<PreShape> out;
    out.reserve(points.size());
    for (auto& p : points) out.emplace_back(std::move(p));
    return out;
}

} // namespace geostyle
