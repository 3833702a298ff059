#pragma once

#include "geostyle/tensor.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace geostyle {

/// 10 log10(peak^2 / MSE) in dB. Identical images give nullopt, reported as
/// "identical". Images are H x W or c x H x W.
std::optional<double> psnr(const Tensor& a, const Tensor& b, double peak = 255.0);

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Single-scale SSIM with an 11 x 11 Gaussian window (sigma 1.5), averaged
/// over every window position that fits inside the image, then over channels.
double ssim(const Tensor& a, const Tensor& b, double peak = 255.0);

/// Cosine between an image embedding and a prompt embedding.
double clip_i(const Tensor& image_feature, const Tensor& text_feature);

/// Mean cosine between each patch embedding and the prompt embedding.
double clip_p(std::span<const Tensor> patch_features, const Tensor& text_feature);

struct Tile {
    std::size_t e = 0; // top row
    std::size_t f = 0; // left column
};

/// Top-left corners of side x side crops stepped by stride; only crops that
/// fit entirely inside the image are kept. The default is a non-overlapping tiling.
std::vector<Tile> clip_p_tiles(std::size_t height, std::size_t width, std::size_t side = 64, std::size_t stride = 64);

struct MetricReport {
    std::optional<double> psnr; // unset with psnr_identical for equal images
    bool psnr_identical = false;
    std::optional<double> ssim;
    std::optional<double> clip_i;
    std::optional<double> clip_p;
    std::optional<std::size_t> clip_p_side;
};

nlohmann::json to_json(const MetricReport& r);

} // namespace geostyle
