#include "geostyle/metrics.hpp"

#include "geostyle/detail/kernels.hpp"
#include "geostyle/error.hpp"
#include "geostyle/parallel.hpp"

#include <cmath>
#include <string>

namespace geostyle {

namespace {

struct Planes {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
};

Planes image_planes(const Tensor& a, const Tensor& b, const char* what)
{
    if (a.shape() != b.shape()) {
        fail(ErrorKind::shape, std::string(what) + ": shapes differ, " + shape_string(a.shape()) + " vs " +
                                   shape_string(b.shape()));
    }
    if (a.rank() == 2) return {1, a.shape()[0], a.shape()[1]};
    if (a.rank() == 3) return {a.shape()[0], a.shape()[1], a.shape()[2]};
    fail(ErrorKind::shape, std::string(what) + " needs H x W or c x H x W images, got " + shape_string(a.shape()));
}

void check_peak(double peak)
{
    if (!(peak > 0.0) || !std::isfinite(peak)) fail(ErrorKind::config, "peak must be > 0");
}

std::vector<double> gaussian_window()
{
    std::vector<double> g(kSsimWindow);
    const double mid = static_cast<double>(kSsimWindow / 2);
    double sum = 0.0;
    for (std::size_t i = 0; i < kSsimWindow; ++i) {
        const double d = static_cast<double>(i) - mid;
        g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

double cosine_checked(const Tensor& a, const Tensor& b, std::size_t index)
{
    if (a.size() != b.size()) {
        fail(ErrorKind::shape, "embedding lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()),
             index);
    }
    const double na = detail::norm(a.values());
    const double nb = detail::norm(b.values());
    if (!(na > 0.0) || !(nb > 0.0)) fail(ErrorKind::degenerate_feature, "zero-norm embedding", index);
    return detail::dot(a.values(), b.values()) / (na * nb);
}

} // namespace

std::optional<double> psnr(const Tensor& a, const Tensor& b, double peak)
{
    image_planes(a, b, "psnr");
    check_peak(peak);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    if (sum == 0.0) return std::nullopt;
    const double mse = sum / static_cast<double>(a.size());
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& a, const Tensor& b, double peak)
{
    const Planes p = image_planes(a, b, "ssim");
    check_peak(peak);
    if (p.height < kSsimWindow || p.width < kSsimWindow) {
        fail(ErrorKind::config, "ssim needs images of at least " + std::to_string(kSsimWindow) + " x " +
                                    std::to_string(kSsimWindow) + " pixels");
    }
    const auto g = gaussian_window();
    const double c1 = (kSsimK1 * peak) * (kSsimK1 * peak);
    const double c2 = (kSsimK2 * peak) * (kSsimK2 * peak);
    const std::size_t oh = p.height - kSsimWindow + 1;
    const std::size_t ow = p.width - kSsimWindow + 1;
    const std::size_t plane = p.height * p.width;

    std::vector<double> channel_mean(p.channels);
    for (std::size_t c = 0; c < p.channels; ++c) {
        const double* x = a.values().data() + c * plane;
        const double* y = b.values().data() + c * plane;
        std::vector<double> rows(oh);
        parallel_for(oh, [&](std::size_t i) {
            double row = 0.0;
            for (std::size_t j = 0; j < ow; ++j) {
                double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
                for (std::size_t u = 0; u < kSsimWindow; ++u) {
                    for (std::size_t v = 0; v < kSsimWindow; ++v) {
                        const double wgt = g[u] * g[v];
                        const double xv = x[(i + u) * p.width + j + v];
                        const double yv = y[(i + u) * p.width + j + v];
                        mx += wgt * xv;
                        my += wgt * yv;
                        xx += wgt * xv * xv;
                        yy += wgt * yv * yv;
                        xy += wgt * (xv * yv);
                    }
                }
                const double vx = xx - mx * mx;
                const double vy = yy - my * my;
                const double cov = xy - mx * my;
                row += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
            rows[i] = row;
        });
        double sum = 0.0;
        for (double r : rows) sum += r;
        channel_mean[c] = sum / static_cast<double>(oh * ow);
    }
    double total = 0.0;
    for (double m : channel_mean) total += m;
    return total / static_cast<double>(p.channels);
}

double clip_i(const Tensor& image_feature, const Tensor& text_feature)
{
    return cosine_checked(image_feature, text_feature, 0);
}

double clip_p(std::span<const Tensor> patch_features, const Tensor& text_feature)
{
    if (patch_features.empty()) fail(ErrorKind::config, "clip-p needs at least one patch embedding");
    double sum = 0.0;
    for (std::size_t i = 0; i < patch_features.size(); ++i) sum += cosine_checked(patch_features[i], text_feature, i);
    return sum / static_cast<double>(patch_features.size());
}

std::vector<Tile> clip_p_tiles(std::size_t height, std::size_t width, std::size_t side, std::size_t stride)
{
    if (side == 0 || stride == 0) fail(ErrorKind::config, "tile side and stride must be >= 1");
    if (height < side || width < side) fail(ErrorKind::config, "image smaller than one " + std::to_string(side) + " tile");
    std::vector<Tile> tiles;
    for (std::size_t e = 0; e + side <= height; e += stride) {
        for (std::size_t f = 0; f + side <= width; f += stride) tiles.push_back({e, f});
    }
    return tiles;
}

nlohmann::json to_json(const MetricReport& r)
{
    nlohmann::json j = nlohmann::json::object();
    if (r.psnr_identical) {
        j["psnr"] = "identical";
    } else if (r.psnr) {
        j["psnr"] = *r.psnr;
    }
    if (r.ssim) j["ssim"] = *r.ssim;
    if (r.clip_i) j["clip_i"] = *r.clip_i;
    if (r.clip_p) j["clip_p"] = *r.clip_p;
    if (r.clip_p_side) j["clip_p_side"] = *r.clip_p_side;
    return j;
}

} // namespace geostyle
