#pragma once

#include "geostyle/random.hpp"
#include "geostyle/tensor.hpp"

#include <cstdint>
#include <vector>

namespace fixtures {

inline std::vector<double> normal_values(geostyle::Rng& rng, std::size_t count, double scale = 1.0)
{
    std::vector<double> v(count);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

inline geostyle::Tensor normal_tensor(geostyle::Rng& rng, geostyle::Shape shape, double scale = 1.0)
{
    const std::size_t count = geostyle::element_count(shape);
    return geostyle::Tensor(std::move(shape), normal_values(rng, count, scale));
}

inline std::vector<std::vector<double>> as_vectors(const std::vector<geostyle::Tensor>& ts)
{
    std::vector<std::vector<double>> out;
    for (const auto& t : ts) out.push_back(t.storage());
    return out;
}

} // namespace fixtures

#include "geostyle/error.hpp"

#include <optional>

namespace fixtures {

/// Kind of the geostyle::Error thrown by f, or nullopt when it returns normally.
template <typename F>
std::optional<geostyle::ErrorKind> error_kind(F&& f)
{
    try {
        f();
    } catch (const geostyle::Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

} // namespace fixtures
