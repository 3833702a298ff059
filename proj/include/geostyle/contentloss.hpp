#pragma once

#include "geostyle/tensor.hpp"
#include "geostyle/weights.hpp"

#include <cstddef>
#include <vector>

namespace geostyle {

/// One c x h x w feature map per selected encoder layer.
using LayerFeatures = std::vector<Tensor>;

/// Pre-shape centering and normalisation applied in place of the landmark
/// reshape, so the result keeps the c x h x w layout for position indexing.
Tensor project_layout(const Tensor& layer);

/// Cosine similarity between the channel vector at (u, v) and every position
/// of a projected c x h x w map. Returns an h x w tensor with 1 at (u, v).
Tensor self_correlation(const Tensor& z, std::size_t u, std::size_t v);

/// Smooth-L1 (transition at 1) between source and target self-correlation
/// rows, averaged per row, summed over positions and layers. Each layer is
/// projected with project_layout first.
double loss_psc(const LayerFeatures& source, const LayerFeatures& target);

double loss_mse(const Tensor& a, const Tensor& b);

/// Mean over layers of the element-wise MSE.
double loss_feature_mse(const LayerFeatures& source, const LayerFeatures& target);

inline constexpr double kDefaultTemperature = 0.07;

/// InfoNCE over cosine logits: target patch i is the query, source patch i
/// its positive and the other source patches of the same image its negatives.
double loss_patch_contrastive(const std::vector<Tensor>& source, const std::vector<Tensor>& target,
                              double temperature = kDefaultTemperature);

struct ContentParts {
    double psc = 0.0;
    double zecon = 0.0;
    double vgg = 0.0;
    double mse = 0.0;
};

/// w.ps * psc + w.z * zecon + w.v * vgg + w.m * mse.
double loss_content(const ContentParts& parts, const LossWeights& w);

struct ContentInputs {
    LayerFeatures source_layers; // noise-predictor encoder maps
    LayerFeatures target_layers;
    LayerFeatures source_vgg;    // perceptual-network maps
    LayerFeatures target_vgg;
    std::vector<Tensor> source_zecon; // patch features for the contrastive term
    std::vector<Tensor> target_zecon;
    Tensor source_image;
    Tensor target_image;
    double temperature = kDefaultTemperature;
};

/// Evaluates each component whose weight is non-zero; the others stay 0.
ContentParts content_parts(const ContentInputs& in, const LossWeights& w);
double loss_content(const ContentInputs& in, const LossWeights& w);

} // namespace geostyle
