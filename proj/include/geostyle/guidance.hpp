#pragma once

#include "geostyle/contentloss.hpp"
#include "geostyle/diffusion.hpp"
#include "geostyle/geodesic.hpp"
#include "geostyle/grad.hpp"
#include "geostyle/swc.hpp"
#include "geostyle/tensor.hpp"
#include "geostyle/weights.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace geostyle {

/// Maps one image patch to a feature vector, with its vector-Jacobian product.
class PatchEncoder {
public:
    virtual ~PatchEncoder() = default;
    virtual Tensor encode(const Tensor& patch) const = 0;
    /// Cotangent on the patch for a cotangent on encode(patch).
    virtual Tensor backward(const Tensor& patch, const Tensor& grad_feature) const = 0;
};

/// Maps an image to a list of c x h x w feature maps.
class LayerEncoder {
public:
    virtual ~LayerEncoder() = default;
    virtual LayerFeatures encode(const Tensor& image) const = 0;
    virtual Tensor backward(const Tensor& image, const LayerFeatures& grad_layers) const = 0;
};

/// y = W vec(patch), W drawn N(0, 1/in_size) from the seed.
class LinearPatchEncoder final : public PatchEncoder {
public:
    LinearPatchEncoder(std::size_t in_size, std::size_t out_size, std::uint64_t seed);
    Tensor encode(const Tensor& patch) const override;
    Tensor backward(const Tensor& patch, const Tensor& grad_feature) const override;

private:
    std::size_t in_;
    std::size_t out_;
    std::vector<double> w_; // out x in
};

/// A small pyramid: level l averages pool_l x pool_l blocks, mixes channels
/// with a seeded 1x1 map plus bias and applies tanh. Only the selected levels
/// are returned.
class PoolingLayerEncoder final : public LayerEncoder {
public:
    struct Level {
        std::size_t pool;
        std::size_t channels;
    };
    PoolingLayerEncoder(std::size_t in_channels, std::vector<Level> levels, std::vector<std::size_t> selected,
                        std::uint64_t seed);
    LayerFeatures encode(const Tensor& image) const override;
    Tensor backward(const Tensor& image, const LayerFeatures& grad_layers) const override;

    [[nodiscard]] const std::vector<std::size_t>& selected() const noexcept { return selected_; }

private:
    std::size_t in_channels_;
    std::vector<Level> levels_;
    std::vector<std::size_t> selected_;
    std::vector<std::vector<double>> mix_;  // per level: channels x in_channels
    std::vector<std::vector<double>> bias_; // per level: channels
};

struct Extractors {
    std::shared_ptr<const PatchEncoder> patch;   // image-text embedding space, per SWC patch
    std::shared_ptr<const PatchEncoder> zecon;   // contrastive patch features
    std::shared_ptr<const LayerEncoder> layers;  // noise-predictor encoder maps for psc
    std::shared_ptr<const LayerEncoder> vgg;     // perceptual maps
};

/// Seeded toy extractors for a c x H x W image and an SWC plan with the given
/// patch side. The layer encoders keep the two deepest of four scales.
Extractors make_toy_extractors(std::size_t channels, std::size_t patch_side, std::uint64_t seed,
                               std::size_t feature_size = 64);

struct ObjectiveSetup {
    Tensor source_image;     // x0, c x H x W
    Tensor target_text;      // style prompt embedding
    Tensor source_text;      // source description embedding
    LossWeights weights;
    CoverageMode swc_mode = CoverageMode::full_coverage;
    AugmentConfig augment;
    double temperature = kDefaultTemperature;
    Extractors extractors;
};

/// L_total on a candidate image: style terms on SWC patch features, content
/// terms against the fixed source image.
class StyleTransferObjective final : public GuidanceObjective {
public:
    explicit StyleTransferObjective(ObjectiveSetup setup);

    Evaluation evaluate(const Tensor& x0_hat) const override;
    double value(const Tensor& x0_hat) const override;

    /// Every loss input for a candidate image.
    LossInputs inputs_at(const Tensor& image) const;
    [[nodiscard]] const PatchPlan& patch_plan() const noexcept { return plan_; }
    [[nodiscard]] const LossWeights& weights() const noexcept { return setup_.weights; }

private:
    ObjectiveSetup setup_;
    PatchPlan plan_;
    std::vector<Tensor> source_patches_;
    LossInputs source_side_;
};

} // namespace geostyle
