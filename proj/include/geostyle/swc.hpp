#pragma once

#include "geostyle/tensor.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace geostyle {

/// paper_literal: side = floor(H / (n_w + 1)), which spans only the top-left
/// half of the image. full_coverage: stride = ceil(H / (n_w + 1)) and
/// side = 2 * stride, with the final row and column flush against the image
/// edge. The two agree with side = 2H / (n_w + 1) when n_w + 1 divides H.
enum class CoverageMode { paper_literal, full_coverage };

CoverageMode parse_coverage_mode(std::string_view name);
std::string_view to_string(CoverageMode mode) noexcept;

struct Patch {
    std::size_t index = 0;
    std::size_t e = 0; // top row
    std::size_t f = 0; // left column
    std::size_t side = 0;

    friend bool operator==(const Patch&, const Patch&) = default;
};

struct PatchPlan {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t n = 0;
    std::size_t n_w = 0;
    std::size_t n_h = 0;
    std::size_t side = 0;
    std::size_t stride = 0;
    CoverageMode mode = CoverageMode::full_coverage;
    std::vector<Patch> patches; // ordered by index, i = row * n_w + col
};

/// Overlapping square grid of n = n_w^2 patches over an H x W image (H == W).
PatchPlan plan(std::size_t height, std::size_t width, std::size_t n,
               CoverageMode mode = CoverageMode::full_coverage);

/// Crops every patch of a c x H x W image, in patch order.
std::vector<Tensor> extract(const Tensor& image, const PatchPlan& plan);

/// Adjoint of extract: sums patch-shaped tensors back into image coordinates.
Tensor scatter_add(std::span<const Tensor> patches, const PatchPlan& plan, std::size_t channels);

/// Per-pixel count of covering patches, shape H x W.
Tensor coverage_counts(const PatchPlan& plan);

/// Averages overlapping patches back into an image; pixels with no cover are 0.
Tensor assemble_average(std::span<const Tensor> patches, const PatchPlan& plan, std::size_t channels);

nlohmann::json to_json(const PatchPlan& plan);
PatchPlan plan_from_json(const nlohmann::json& j);

} // namespace geostyle
