#include "geostyle/swc.hpp"

#include "geostyle/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace geostyle {

CoverageMode parse_coverage_mode(std::string_view name)
{
    if (name == "paper-literal") return CoverageMode::paper_literal;
    if (name == "full-coverage") return CoverageMode::full_coverage;
    fail(ErrorKind::config, "unknown coverage mode '" + std::string(name) + "' (expected paper-literal|full-coverage)");
}

std::string_view to_string(CoverageMode mode) noexcept
{
    return mode == CoverageMode::paper_literal ? "paper-literal" : "full-coverage";
}

namespace {

std::size_t exact_sqrt(std::size_t n)
{
    auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

void check_image(const Tensor& image, const PatchPlan& plan)
{
    if (image.rank() != 3) {
        fail(ErrorKind::shape, "expected a c x H x W image, got shape " + shape_string(image.shape()));
    }
    if (image.shape()[1] != plan.height || image.shape()[2] != plan.width) {
        fail(ErrorKind::shape, "image is " + std::to_string(image.shape()[1]) + "x" + std::to_string(image.shape()[2]) +
                                   " but the patch plan is for " + std::to_string(plan.height) + "x" +
                                   std::to_string(plan.width));
    }
}

} // namespace

PatchPlan plan(std::size_t height, std::size_t width, std::size_t n, CoverageMode mode)
{
    if (height != width) {
        fail(ErrorKind::config, "sliding window crop needs a square image, got " + std::to_string(height) + "x" +
                                    std::to_string(width));
    }
    const std::size_t root = exact_sqrt(n);
    if (n < 4 || root * root != n) {
        fail(ErrorKind::config, "patch count must be a perfect square >= 4, got " + std::to_string(n));
    }
    PatchPlan p;
    p.height = height;
    p.width = width;
    p.n = n;
    p.n_w = root;
    p.n_h = root;
    p.mode = mode;
    if (mode == CoverageMode::full_coverage) {
        // round the stride up so the regular grid reaches the border
        p.stride = (height + p.n_w) / (p.n_w + 1);
        p.side = 2 * p.stride;
    } else {
        p.side = height / (p.n_w + 1);
        p.stride = p.side / 2;
    }
    if (p.side < 2) {
        fail(ErrorKind::config, "patch side " + std::to_string(p.side) + " is below 2 pixels for H=" +
                                    std::to_string(height) + ", n=" + std::to_string(n));
    }
    if (p.side > height) {
        fail(ErrorKind::config, "patch side " + std::to_string(p.side) + " exceeds the " + std::to_string(height) +
                                    "-pixel image for n=" + std::to_string(n));
    }

    p.patches.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Patch patch{i, (i / p.n_h) * p.stride, (i % p.n_w) * p.stride, p.side};
        if (mode == CoverageMode::full_coverage) {
            // edge snap: last row/column end exactly at the border
            if (i / p.n_h == p.n_h - 1) patch.e = height - p.side;
            if (i % p.n_w == p.n_w - 1) patch.f = width - p.side;
        }
        p.patches.push_back(patch);
    }

    return p;
}

std::vector<Tensor> extract(const Tensor& image, const PatchPlan& plan)
{
    check_image(image, plan);
    const std::size_t c = image.shape()[0];
    const std::size_t H = plan.height;
    const std::size_t W = plan.width;
    std::vector<Tensor> out;
    out.reserve(plan.patches.size());
    for (const auto& patch : plan.patches) {
        const std::size_t side = patch.side;
        std::vector<double> v(c * side * side);
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t r = 0; r < side; ++r) {
                const double* src = image.values().data() + ch * H * W + (patch.e + r) * W + patch.f;
                std::copy(src, src + side, v.data() + (ch * side + r) * side);
            }
        }
        out.emplace_back(Shape{c, side, side}, std::move(v));
    }
    return out;
}

Tensor scatter_add(std::span<const Tensor> patches, const PatchPlan& plan, std::size_t channels)
{
    if (patches.size() != plan.patches.size()) {
        fail(ErrorKind::shape, "expected " + std::to_string(plan.patches.size()) + " patches, got " +
                                   std::to_string(patches.size()));
    }
    const std::size_t H = plan.height;
    const std::size_t W = plan.width;
    Tensor image({channels, H, W}, 0.0);
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const auto& patch = plan.patches[i];
        const std::size_t side = patch.side;
        if (patches[i].shape() != Shape{channels, side, side}) {
            fail(ErrorKind::shape, "patch " + std::to_string(i) + " has shape " + shape_string(patches[i].shape()), i);
        }
        for (std::size_t ch = 0; ch < channels; ++ch) {
            for (std::size_t r = 0; r < side; ++r) {
                double* dst = image.values().data() + ch * H * W + (patch.e + r) * W + patch.f;
                const double* src = patches[i].values().data() + (ch * side + r) * side;
                for (std::size_t col = 0; col < side; ++col) dst[col] += src[col];
            }
        }
    }
    return image;
}

Tensor coverage_counts(const PatchPlan& plan)
{
    std::vector<Tensor> ones;
    ones.reserve(plan.patches.size());
    for (const auto& patch : plan.patches) ones.emplace_back(Shape{1, patch.side, patch.side}, 1.0);
    return scatter_add(ones, plan, 1).reshaped({plan.height, plan.width});
}

Tensor assemble_average(std::span<const Tensor> patches, const PatchPlan& plan, std::size_t channels)
{
    Tensor sum = scatter_add(patches, plan, channels);
    const Tensor counts = coverage_counts(plan);
    const std::size_t hw = plan.height * plan.width;
    for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t p = 0; p < hw; ++p) {
            if (counts[p] > 0.0) sum[ch * hw + p] /= counts[p];
        }
    }
    return sum;
}

nlohmann::json to_json(const PatchPlan& plan)
{
    nlohmann::json patches = nlohmann::json::array();
    for (const auto& p : plan.patches) {
        patches.push_back({{"i", p.index}, {"e", p.e}, {"f", p.f}, {"side", p.side}});
    }
    return {{"H", plan.height},   {"W", plan.width},     {"n", plan.n},
            {"n_w", plan.n_w},    {"n_h", plan.n_h},     {"side", plan.side},
            {"stride", plan.stride}, {"mode", to_string(plan.mode)}, {"patches", patches}};
}

PatchPlan plan_from_json(const nlohmann::json& j)
{
    try {
        PatchPlan p = plan(j.at("H").get<std::size_t>(), j.at("W").get<std::size_t>(), j.at("n").get<std::size_t>(),
                           parse_coverage_mode(j.at("mode").get<std::string>()));
        if (j.contains("patches")) {
            const auto& listed = j.at("patches");
            if (listed.size() != p.patches.size()) fail(ErrorKind::format, "patch list length disagrees with n");
            for (std::size_t i = 0; i < listed.size(); ++i) {
                const Patch q{listed[i].at("i").get<std::size_t>(), listed[i].at("e").get<std::size_t>(),
                              listed[i].at("f").get<std::size_t>(), listed[i].at("side").get<std::size_t>()};
                if (!(q == p.patches[i])) {
                    fail(ErrorKind::format, "patch " + std::to_string(i) + " disagrees with the plan arithmetic", i);
                }
            }
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("malformed patch plan JSON: ") + e.what());
    }
}

} // namespace geostyle
