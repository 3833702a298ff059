#include "geostyle/contentloss.hpp"

#include "geostyle/detail/content_forward.hpp"
#include "geostyle/error.hpp"
#include "geostyle/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace geostyle {

namespace detail {

namespace {

void check_map(const Tensor& t, std::size_t layer_index)
{
    if (t.rank() != 3) {
        fail(ErrorKind::shape, "layer " + std::to_string(layer_index) + " must be c x h x w, got " +
                                   shape_string(t.shape()),
             layer_index);
    }
}

} // namespace

LayerCorrelation correlate_layer(const Tensor& layer, std::size_t layer_index)
{
    check_map(layer, layer_index);
    LayerCorrelation lc;
    lc.channels = layer.shape()[0];
    lc.positions = layer.shape()[1] * layer.shape()[2];
    try {
        lc.projection = project_values(layer.values());
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " (layer " + std::to_string(layer_index) + ")", layer_index);
    }
    const auto& z = lc.projection.unit;
    lc.unit.resize(lc.positions * lc.channels);
    lc.norms.resize(lc.positions);
    for (std::size_t p = 0; p < lc.positions; ++p) {
        double sq = 0.0;
        for (std::size_t ch = 0; ch < lc.channels; ++ch) {
            const double v = z[ch * lc.positions + p];
            lc.unit[p * lc.channels + ch] = v;
            sq += v * v;
        }
        const double nrm = std::sqrt(sq);
        if (!(nrm > kDegenerateFeature)) {
            fail(ErrorKind::degenerate_feature, "zero channel vector at position " + std::to_string(p) + " of layer " +
                                                    std::to_string(layer_index),
                 p);
        }
        lc.norms[p] = nrm;
        for (std::size_t ch = 0; ch < lc.channels; ++ch) lc.unit[p * lc.channels + ch] /= nrm;
    }
    return lc;
}

double smooth_l1(double d)
{
    const double a = std::abs(d);
    return a < 1.0 ? 0.5 * d * d : a - 0.5;
}

double smooth_l1_grad(double d)
{
    if (d >= 1.0) return 1.0;
    if (d <= -1.0) return -1.0;
    return d;
}

double psc_layer_value(const LayerCorrelation& source, const LayerCorrelation& target)
{
    const std::size_t P = source.positions;
    const std::size_t C_s = source.channels;
    const std::size_t C_t = target.channels;
    std::vector<double> rows(P);
    parallel_for(P, [&](std::size_t p) {
        const double* sp = source.unit.data() + p * C_s;
        const double* tp = target.unit.data() + p * C_t;
        double row = 0.0;
        for (std::size_t q = 0; q < P; ++q) {
            const double cs = dot({sp, C_s}, {source.unit.data() + q * C_s, C_s});
            const double ct = dot({tp, C_t}, {target.unit.data() + q * C_t, C_t});
            row += smooth_l1(cs - ct);
        }
        rows[p] = row / static_cast<double>(P);
    });
    double total = 0.0;
    for (double r : rows) total += r;
    return total;
}

void check_layer_pairs(const LayerFeatures& source, const LayerFeatures& target)
{
    if (source.empty()) fail(ErrorKind::config, "layer feature list is empty");
    if (source.size() != target.size()) {
        fail(ErrorKind::shape, "source has " + std::to_string(source.size()) + " layers, target has " +
                                   std::to_string(target.size()));
    }
    for (std::size_t l = 0; l < source.size(); ++l) {
        if (source[l].shape() != target[l].shape()) {
            fail(ErrorKind::shape, "layer " + std::to_string(l) + " shapes differ: " + shape_string(source[l].shape()) +
                                       " vs " + shape_string(target[l].shape()),
                 l);
        }
    }
}

ContrastiveForward contrastive_forward(const std::vector<Tensor>& source, const std::vector<Tensor>& target,
                                       double temperature)
{
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        fail(ErrorKind::config, "contrastive temperature must be > 0");
    }
    if (source.empty()) fail(ErrorKind::config, "contrastive loss needs at least one patch");
    if (source.size() != target.size()) {
        fail(ErrorKind::shape, "source and target patch counts differ");
    }
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (source[i].shape() != source[0].shape() || target[i].shape() != source[0].shape()) {
            fail(ErrorKind::shape, "patch " + std::to_string(i) + " shape differs from patch 0", i);
        }
    }
    ContrastiveForward f;
    f.n = source.size();
    for (std::size_t i = 0; i < f.n; ++i) {
        f.norms_q.push_back(norm(target[i].values()));
        f.norms_k.push_back(norm(source[i].values()));
        if (!(f.norms_q.back() > kDegenerateFeature) || !(f.norms_k.back() > kDegenerateFeature)) {
            fail(ErrorKind::degenerate_feature, "zero patch feature at index " + std::to_string(i), i);
        }
    }
    f.cos.resize(f.n * f.n);
    f.lse.resize(f.n);
    double sum = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        double mx = -INFINITY;
        for (std::size_t j = 0; j < f.n; ++j) {
            const double c = dot(target[i].values(), source[j].values()) / (f.norms_q[i] * f.norms_k[j]);
            f.cos[i * f.n + j] = c;
            mx = std::max(mx, c / temperature);
        }
        double acc = 0.0;
        for (std::size_t j = 0; j < f.n; ++j) acc += std::exp(f.cos[i * f.n + j] / temperature - mx);
        f.lse[i] = mx + std::log(acc);
        sum += f.lse[i] - f.cos[i * f.n + i] / temperature;
    }
    f.value = sum / static_cast<double>(f.n);
    return f;
}

} // namespace detail

Tensor project_layout(const Tensor& layer)
{
    return Tensor(layer.shape(), detail::project_values(layer.values()).unit);
}

Tensor self_correlation(const Tensor& z, std::size_t u, std::size_t v)
{
    if (z.rank() != 3) fail(ErrorKind::shape, "self-correlation needs a c x h x w map, got " + shape_string(z.shape()));
    const std::size_t c = z.shape()[0];
    const std::size_t h = z.shape()[1];
    const std::size_t w = z.shape()[2];
    if (u >= h || v >= w) {
        fail(ErrorKind::index, "position (" + std::to_string(u) + "," + std::to_string(v) + ") outside " +
                                   std::to_string(h) + "x" + std::to_string(w));
    }
    const std::size_t P = h * w;
    std::vector<double> norms(P);
    for (std::size_t p = 0; p < P; ++p) {
        double sq = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) sq += z[ch * P + p] * z[ch * P + p];
        norms[p] = std::sqrt(sq);
        if (!(norms[p] > detail::kDegenerateFeature)) {
            fail(ErrorKind::degenerate_feature, "zero channel vector at position " + std::to_string(p), p);
        }
    }
    const std::size_t anchor = u * w + v;
    std::vector<double> row(P);
    for (std::size_t p = 0; p < P; ++p) {
        double d = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) d += z[ch * P + anchor] * z[ch * P + p];
        row[p] = d / (norms[anchor] * norms[p]);
    }
    return Tensor({h, w}, std::move(row));
}

double loss_psc(const LayerFeatures& source, const LayerFeatures& target)
{
    detail::check_layer_pairs(source, target);
    double total = 0.0;
    for (std::size_t l = 0; l < source.size(); ++l) {
        total += detail::psc_layer_value(detail::correlate_layer(source[l], l), detail::correlate_layer(target[l], l));
    }
    return total;
}

double loss_mse(const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape()) {
        fail(ErrorKind::shape, "MSE operands differ in shape: " + shape_string(a.shape()) + " vs " +
                                   shape_string(b.shape()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

double loss_feature_mse(const LayerFeatures& source, const LayerFeatures& target)
{
    detail::check_layer_pairs(source, target);
    double sum = 0.0;
    for (std::size_t l = 0; l < source.size(); ++l) sum += loss_mse(source[l], target[l]);
    return sum / static_cast<double>(source.size());
}

double loss_patch_contrastive(const std::vector<Tensor>& source, const std::vector<Tensor>& target,
                              double temperature)
{
    return detail::contrastive_forward(source, target, temperature).value;
}

double loss_content(const ContentParts& parts, const LossWeights& w)
{
    w.validate();
    return w.ps * parts.psc + w.z * parts.zecon + w.v * parts.vgg + w.m * parts.mse;
}

ContentParts content_parts(const ContentInputs& in, const LossWeights& w)
{
    w.validate();
    ContentParts parts;
    if (w.ps != 0.0) parts.psc = loss_psc(in.source_layers, in.target_layers);
    if (w.z != 0.0) parts.zecon = loss_patch_contrastive(in.source_zecon, in.target_zecon, in.temperature);
    if (w.v != 0.0) parts.vgg = loss_feature_mse(in.source_vgg, in.target_vgg);
    if (w.m != 0.0) parts.mse = loss_mse(in.source_image, in.target_image);
    return parts;
}

double loss_content(const ContentInputs& in, const LossWeights& w)
{
    return loss_content(content_parts(in, w), w);
}

} // namespace geostyle
