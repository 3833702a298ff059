#pragma once

#include <cstddef>

#include <json.hpp>

namespace geostyle {

/// Loss weights and SWC patch count. Defaults are the published settings.
struct LossWeights {
    std::size_t n = 49;
    double pc = 20000.0; // patch geodesic (style)
    double pd = 20000.0; // patch direction (style)
    double ps = 1000.0;  // pre-shape self-correlation (content)
    double z = 1000.0;   // patch contrastive (content)
    double v = 1000.0;   // feature-map MSE (content)
    double m = 100.0;    // pixel MSE (content)

    void validate() const;

    static LossWeights zero();
};

nlohmann::json to_json(const LossWeights& w);
/// Missing keys keep their defaults.
LossWeights weights_from_json(const nlohmann::json& j);

} // namespace geostyle
