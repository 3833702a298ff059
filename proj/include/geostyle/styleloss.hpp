#pragma once

#include "geostyle/geodesic.hpp"
#include "geostyle/tensor.hpp"
#include "geostyle/weights.hpp"

#include <vector>

namespace geostyle {

/// Raw feature tensors for the patch style losses. Patch lists are ordered
/// by patch index; every tensor has the same even element count.
struct StyleInputs {
    std::vector<Tensor> target_patches; // features of the denoised-estimate patches
    std::vector<Tensor> source_patches; // features of the source-image patches
    Tensor target_text;                 // embedding of the style prompt
    Tensor source_text;                 // embedding of the source description
    AugmentConfig augment;
};

/// Mean geodesic distance between each augmented target feature and the
/// projected target text feature. In [0, pi].
double loss_pc(const StyleInputs& in);

/// Mean of 1 - cos(dI_i, dT), with dI_i the difference of the i-th augmented
/// target and source features and dT the difference of the projected text
/// features. Both augmentations use the same weight sets. In [0, 2].
double loss_pd(const StyleInputs& in);

/// w.pc * loss_pc + w.pd * loss_pd. A zero weight skips its term.
double loss_style(const StyleInputs& in, const LossWeights& w);

} // namespace geostyle
