#pragma once

#include "geostyle/contentloss.hpp"
#include "geostyle/styleloss.hpp"
#include "geostyle/tensor.hpp"
#include "geostyle/weights.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace geostyle {

enum class LossId { pc, pd, psc, mse, feature_mse, patch_contrastive, style, content, total };

LossId parse_loss_id(std::string_view name);
std::string_view to_string(LossId id) noexcept;
std::span<const LossId> all_loss_ids() noexcept;

/// Every raw tensor any loss can consume. Single-purpose losses read only
/// their own fields.
struct LossInputs {
    StyleInputs style;
    ContentInputs content;
};

/// Plain loss value: pc, pd, psc, mse, feature_mse and patch_contrastive are
/// unweighted; style, content and total apply w.
double loss_value(LossId id, const LossInputs& in, const LossWeights& w);

/// Names of the tensors a loss depends on, e.g. "target_patches[3]",
/// "source_layers[0]", "target_text", "source_image".
std::vector<std::string> input_names(LossId id, const LossInputs& in);
const Tensor& input_tensor(const LossInputs& in, const std::string& name);
Tensor& input_tensor(LossInputs& in, const std::string& name);

struct GradResult {
    double value = 0.0;
    std::map<std::string, Tensor> grads; // same shape as the named input
    /// An arccos clamp or a coincident-geodesic short-circuit was hit; the
    /// gradient there is a sub-gradient and FD agreement is not expected.
    bool clamp_boundary = false;
};

GradResult grad_eval(LossId id, const LossInputs& in, const LossWeights& w);

// Typed reverse passes, used by grad_eval and by the guidance objective.

struct StyleGradient {
    double value = 0.0;
    std::vector<Tensor> target_patches;
    std::vector<Tensor> source_patches; // empty unless the pd term is active
    Tensor target_text;
    Tensor source_text;
    bool clamp_boundary = false;
};

/// Gradient of w_pc * loss_pc + w_pd * loss_pd. A zero weight drops its term.
StyleGradient style_gradient(const StyleInputs& in, double w_pc, double w_pd);

struct LayerGradient {
    double value = 0.0;
    std::vector<Tensor> source;
    std::vector<Tensor> target;
};

LayerGradient psc_gradient(const LayerFeatures& source, const LayerFeatures& target);
LayerGradient feature_mse_gradient(const LayerFeatures& source, const LayerFeatures& target);
LayerGradient contrastive_gradient(const std::vector<Tensor>& source, const std::vector<Tensor>& target,
                                   double temperature);

struct PairGradient {
    double value = 0.0;
    Tensor a;
    Tensor b;
};

PairGradient mse_gradient(const Tensor& a, const Tensor& b);

// ---- finite-difference oracle ---------------------------------------------

struct FdOptions {
    double h = 1e-6;
    std::size_t coords_per_input = 200; // all coordinates when the input is smaller
    std::uint64_t seed = 0;             // coordinate subset selection
};

struct FdInputReport {
    std::string name;
    std::size_t checked = 0;
    double max_rel = 0.0;
    double mean_rel = 0.0;
    double grad_scale = 0.0; // largest |analytic| over the input
};

struct FdReport {
    LossId id = LossId::pc;
    double value = 0.0;
    bool clamp_boundary = false;
    std::vector<FdInputReport> inputs;
    double max_rel = 0.0;
};

/// Central differences (L(x + h e_i) - L(x - h e_i)) / 2h on each input,
/// evaluated through the plain loss ops. A coordinate's relative error is
/// |fd - analytic| / max(|fd|, |analytic|, S, 1e-8), where S is the largest
/// analytic magnitude over that input: components far below the input's own
/// gradient scale are judged at that scale, which is all central differences
/// can resolve.
FdReport fd_check(LossId id, const LossInputs& in, const LossWeights& w, const FdOptions& opts = {});

nlohmann::json to_json(const FdReport& report);

/// Shapes for seeded random fixtures used by gradcheck.
struct RandomInputShape {
    std::size_t patches = 4;
    std::size_t feature_size = 16;
    std::vector<Shape> layers = {{4, 3, 3}, {6, 2, 2}};
    std::vector<Shape> vgg = {{3, 3, 3}, {2, 4, 4}};
    std::size_t zecon_patches = 4;
    std::size_t zecon_size = 8;
    Shape image = {3, 4, 4};
};

LossInputs make_random_inputs(std::uint64_t seed, const RandomInputShape& shape = {});

} // namespace geostyle
