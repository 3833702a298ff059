#include "geostyle/guidance.hpp"

#include "geostyle/error.hpp"
#include "geostyle/random.hpp"

#include <cmath>
#include <string>

namespace geostyle {

namespace {

void add_into(Tensor& dst, const Tensor& src)
{
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void check_image(const Tensor& image, const char* what)
{
    if (image.rank() != 3) {
        fail(ErrorKind::shape, std::string(what) + " must be c x H x W, got " + shape_string(image.shape()));
    }
}

} // namespace

// ---- linear patch encoder --------------------------------------------------

LinearPatchEncoder::LinearPatchEncoder(std::size_t in_size, std::size_t out_size, std::uint64_t seed)
    : in_(in_size), out_(out_size), w_(in_size * out_size)
{
    if (in_size == 0 || out_size == 0) fail(ErrorKind::config, "patch encoder sizes must be >= 1");
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_size));
    for (double& v : w_) v = scale * rng.normal();
}

Tensor LinearPatchEncoder::encode(const Tensor& patch) const
{
    if (patch.size() != in_) {
        fail(ErrorKind::shape, "patch encoder expects " + std::to_string(in_) + " values, got " +
                                   std::to_string(patch.size()));
    }
    std::vector<double> y(out_, 0.0);
    for (std::size_t o = 0; o < out_; ++o) {
        const double* row = w_.data() + o * in_;
        double acc = 0.0;
        for (std::size_t i = 0; i < in_; ++i) acc += row[i] * patch[i];
        y[o] = acc;
    }
    return Tensor({out_}, std::move(y));
}

Tensor LinearPatchEncoder::backward(const Tensor& patch, const Tensor& grad_feature) const
{
    if (patch.size() != in_ || grad_feature.size() != out_) fail(ErrorKind::shape, "patch encoder backward sizes");
    Tensor g(patch.shape(), 0.0);
    for (std::size_t o = 0; o < out_; ++o) {
        const double* row = w_.data() + o * in_;
        const double up = grad_feature[o];
        if (up == 0.0) continue;
        for (std::size_t i = 0; i < in_; ++i) g[i] += up * row[i];
    }
    return g;
}

// ---- pooling pyramid -------------------------------------------------------

PoolingLayerEncoder::PoolingLayerEncoder(std::size_t in_channels, std::vector<Level> levels,
                                         std::vector<std::size_t> selected, std::uint64_t seed)
    : in_channels_(in_channels), levels_(std::move(levels)), selected_(std::move(selected))
{
    if (in_channels == 0 || levels_.empty() || selected_.empty()) {
        fail(ErrorKind::config, "layer encoder needs channels, levels and a selection");
    }
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_channels));
    for (const auto& level : levels_) {
        if (level.pool == 0 || level.channels == 0) fail(ErrorKind::config, "layer encoder level sizes must be >= 1");
        std::vector<double> mix(level.channels * in_channels);
        for (double& v : mix) v = scale * rng.normal();
        std::vector<double> bias(level.channels);
        for (double& v : bias) v = 0.1 * rng.normal();
        mix_.push_back(std::move(mix));
        bias_.push_back(std::move(bias));
    }
    for (std::size_t l : selected_) {
        if (l >= levels_.size()) fail(ErrorKind::index, "selected layer " + std::to_string(l) + " does not exist", l);
    }
}

LayerFeatures PoolingLayerEncoder::encode(const Tensor& image) const
{
    check_image(image, "layer encoder input");
    const std::size_t C = image.shape()[0];
    const std::size_t H = image.shape()[1];
    const std::size_t W = image.shape()[2];
    if (C != in_channels_) fail(ErrorKind::shape, "layer encoder expects " + std::to_string(in_channels_) + " channels");
    LayerFeatures out;
    for (std::size_t l : selected_) {
        const auto& level = levels_[l];
        const std::size_t p = level.pool;
        const std::size_t h = H / p;
        const std::size_t w = W / p;
        if (h == 0 || w == 0) fail(ErrorKind::shape, "image too small for pooling factor " + std::to_string(p), l);
        std::vector<double> pooled(C * h * w, 0.0);
        const double inv = 1.0 / static_cast<double>(p * p);
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t i = 0; i < h * p; ++i) {
                for (std::size_t j = 0; j < w * p; ++j) pooled[(c * h + i / p) * w + j / p] += image[(c * H + i) * W + j];
            }
        }
        for (double& v : pooled) v *= inv;
        std::vector<double> feat(level.channels * h * w);
        for (std::size_t o = 0; o < level.channels; ++o) {
            for (std::size_t q = 0; q < h * w; ++q) {
                double acc = bias_[l][o];
                for (std::size_t c = 0; c < C; ++c) acc += mix_[l][o * C + c] * pooled[c * h * w + q];
                feat[o * h * w + q] = std::tanh(acc);
            }
        }
        out.emplace_back(Shape{level.channels, h, w}, std::move(feat));
    }
    return out;
}

Tensor PoolingLayerEncoder::backward(const Tensor& image, const LayerFeatures& grad_layers) const
{
    if (grad_layers.size() != selected_.size()) fail(ErrorKind::shape, "layer encoder backward needs one grad per layer");
    const auto feats = encode(image);
    const std::size_t C = image.shape()[0];
    const std::size_t H = image.shape()[1];
    const std::size_t W = image.shape()[2];
    Tensor g(image.shape(), 0.0);
    for (std::size_t s = 0; s < selected_.size(); ++s) {
        const std::size_t l = selected_[s];
        const auto& level = levels_[l];
        const std::size_t p = level.pool;
        const std::size_t h = H / p;
        const std::size_t w = W / p;
        const Tensor& y = feats[s];
        const Tensor& gy = grad_layers[s];
        if (gy.shape() != y.shape()) fail(ErrorKind::shape, "layer gradient shape mismatch", s);
        std::vector<double> g_pooled(C * h * w, 0.0);
        for (std::size_t o = 0; o < level.channels; ++o) {
            for (std::size_t q = 0; q < h * w; ++q) {
                const double v = y[o * h * w + q];
                const double d = gy[o * h * w + q] * (1.0 - v * v);
                if (d == 0.0) continue;
                for (std::size_t c = 0; c < C; ++c) g_pooled[c * h * w + q] += mix_[l][o * C + c] * d;
            }
        }
        const double inv = 1.0 / static_cast<double>(p * p);
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t i = 0; i < h * p; ++i) {
                for (std::size_t j = 0; j < w * p; ++j) g[(c * H + i) * W + j] += inv * g_pooled[(c * h + i / p) * w + j / p];
            }
        }
    }
    return g;
}

Extractors make_toy_extractors(std::size_t channels, std::size_t patch_side, std::uint64_t seed,
                               std::size_t feature_size)
{
    if (feature_size < 4 || feature_size % 2 != 0) fail(ErrorKind::config, "feature size must be even and >= 4");
    const std::size_t patch_values = channels * patch_side * patch_side;
    const std::vector<PoolingLayerEncoder::Level> unet = {{1, 8}, {2, 8}, {4, 16}, {8, 16}};
    const std::vector<PoolingLayerEncoder::Level> vgg = {{1, 4}, {2, 8}, {4, 8}, {8, 12}};
    Extractors ex;
    ex.patch = std::make_shared<LinearPatchEncoder>(patch_values, feature_size, seed * 4 + 1);
    ex.zecon = std::make_shared<LinearPatchEncoder>(patch_values, feature_size / 2, seed * 4 + 2);
    ex.layers = std::make_shared<PoolingLayerEncoder>(channels, unet, std::vector<std::size_t>{2, 3}, seed * 4 + 3);
    ex.vgg = std::make_shared<PoolingLayerEncoder>(channels, vgg, std::vector<std::size_t>{2, 3}, seed * 4 + 4);
    return ex;
}

// ---- objective -------------------------------------------------------------

StyleTransferObjective::StyleTransferObjective(ObjectiveSetup setup) : setup_(std::move(setup))
{
    setup_.weights.validate();
    setup_.augment.validate();
    const auto& ex = setup_.extractors;
    if (!ex.patch || !ex.zecon || !ex.layers || !ex.vgg) fail(ErrorKind::config, "guidance objective needs all extractors");
    const Tensor& x0 = setup_.source_image;
    check_image(x0, "source image");
    plan_ = plan(x0.shape()[1], x0.shape()[2], setup_.weights.n, setup_.swc_mode);
    source_patches_ = extract(x0, plan_);

    auto& style = source_side_.style;
    for (const auto& p : source_patches_) style.source_patches.push_back(ex.patch->encode(p));
    style.target_text = setup_.target_text;
    style.source_text = setup_.source_text;
    style.augment = setup_.augment;

    auto& content = source_side_.content;
    content.source_layers = ex.layers->encode(x0);
    content.source_vgg = ex.vgg->encode(x0);
    for (const auto& p : source_patches_) content.source_zecon.push_back(ex.zecon->encode(p));
    content.source_image = x0;
    content.temperature = setup_.temperature;
}

LossInputs StyleTransferObjective::inputs_at(const Tensor& image) const
{
    check_image(image, "candidate image");
    if (image.shape() != setup_.source_image.shape()) {
        fail(ErrorKind::shape, "candidate image shape " + shape_string(image.shape()) + " differs from the source");
    }
    const auto& ex = setup_.extractors;
    LossInputs in = source_side_;
    const auto patches = extract(image, plan_);
    for (const auto& p : patches) {
        in.style.target_patches.push_back(ex.patch->encode(p));
        in.content.target_zecon.push_back(ex.zecon->encode(p));
    }
    in.content.target_layers = ex.layers->encode(image);
    in.content.target_vgg = ex.vgg->encode(image);
    in.content.target_image = image;
    return in;
}

double StyleTransferObjective::value(const Tensor& x0_hat) const
{
    return loss_value(LossId::total, inputs_at(x0_hat), setup_.weights);
}

GuidanceObjective::Evaluation StyleTransferObjective::evaluate(const Tensor& x0_hat) const
{
    const auto in = inputs_at(x0_hat);
    const auto& w = setup_.weights;
    const auto r = grad_eval(LossId::total, in, w);
    const auto& ex = setup_.extractors;
    const std::size_t channels = x0_hat.shape()[0];

    Evaluation out;
    out.value = r.value;
    out.grad = Tensor(x0_hat.shape(), 0.0);

    const bool style_on = w.pc != 0.0 || w.pd != 0.0;
    if (style_on || w.z != 0.0) {
        const auto patches = extract(x0_hat, plan_);
        std::vector<Tensor> g_patches;
        for (std::size_t i = 0; i < patches.size(); ++i) {
            const std::string idx = "[" + std::to_string(i) + "]";
            Tensor g(patches[i].shape(), 0.0);
            if (style_on) add_into(g, ex.patch->backward(patches[i], r.grads.at("target_patches" + idx)));
            if (w.z != 0.0) add_into(g, ex.zecon->backward(patches[i], r.grads.at("target_zecon" + idx)));
            g_patches.push_back(std::move(g));
        }
        add_into(out.grad, scatter_add(g_patches, plan_, channels));
    }
    const auto layer_grads = [&](const char* group, std::size_t count) {
        LayerFeatures gs;
        for (std::size_t l = 0; l < count; ++l) gs.push_back(r.grads.at(std::string(group) + "[" + std::to_string(l) + "]"));
        return gs;
    };
    if (w.ps != 0.0) {
        add_into(out.grad, ex.layers->backward(x0_hat, layer_grads("target_layers", in.content.target_layers.size())));
    }
    if (w.v != 0.0) {
        add_into(out.grad, ex.vgg->backward(x0_hat, layer_grads("target_vgg", in.content.target_vgg.size())));
    }
    if (w.m != 0.0) add_into(out.grad, r.grads.at("target_image"));
    return out;
}

} // namespace geostyle
