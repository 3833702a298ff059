#pragma once

#include "geostyle/detail/kernels.hpp"
#include "geostyle/geodesic.hpp"
#include "geostyle/styleloss.hpp"

#include <vector>

namespace geostyle::detail {

inline constexpr double kDegenerateDirection = 1e-12;

/// Everything the style losses compute on the way to their value.
struct StyleForward {
    std::vector<Projection> target_proj;
    std::vector<Projection> source_proj;
    std::vector<std::vector<double>> target_units;
    std::vector<std::vector<double>> source_units;
    Projection target_text;
    Projection source_text;
    std::vector<WeightSet> weight_sets;
    std::vector<SurfaceTrace> target_traces;
    std::vector<SurfaceTrace> source_traces;

    const std::vector<double>& target_aug(std::size_t i) const { return target_traces[i].result(target_units); }
    const std::vector<double>& source_aug(std::size_t i) const { return source_traces[i].result(source_units); }
};

/// with_source also projects and augments the source patches and the source text.
StyleForward style_forward(const StyleInputs& in, bool with_source);

struct PcTerms {
    std::vector<ArcCos> distances;
    double value = 0.0;
};
PcTerms pc_terms(const StyleForward& fw);

struct PdTerms {
    std::vector<double> delta_text;
    std::vector<std::vector<double>> delta_image;
    std::vector<Cosine> cosines;
    double value = 0.0;
};
PdTerms pd_terms(const StyleForward& fw);

} // namespace geostyle::detail
