#include "geostyle/grad.hpp"

#include "geostyle/detail/content_forward.hpp"
#include "geostyle/detail/style_forward.hpp"
#include "geostyle/error.hpp"
#include "geostyle/parallel.hpp"
#include "geostyle/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace geostyle {

namespace {

constexpr std::array<LossId, 9> kAllLosses = {LossId::pc,  LossId::pd,          LossId::psc,
                                              LossId::mse, LossId::feature_mse, LossId::patch_contrastive,
                                              LossId::style, LossId::content,   LossId::total};

Tensor zeros_like(const Tensor& t)
{
    return Tensor(t.shape(), 0.0);
}

std::vector<Tensor> zeros_like(const std::vector<Tensor>& ts)
{
    std::vector<Tensor> out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(zeros_like(t));
    return out;
}

void scale_into(std::vector<Tensor>& ts, double factor)
{
    for (auto& t : ts) {
        for (double& v : t.values()) v *= factor;
    }
}

std::vector<std::vector<double>> zero_vectors(std::size_t count, std::size_t len)
{
    return std::vector<std::vector<double>>(count, std::vector<double>(len, 0.0));
}

bool trace_has_coincidence(const detail::SurfaceTrace& trace)
{
    return std::any_of(trace.steps.begin(), trace.steps.end(), [](const auto& s) { return s.coincident; });
}

std::string indexed(std::string_view group, std::size_t i)
{
    return std::string(group) + "[" + std::to_string(i) + "]";
}

void add_group(std::vector<std::string>& names, std::string_view group, std::size_t count)
{
    for (std::size_t i = 0; i < count; ++i) names.push_back(indexed(group, i));
}

void put_group(GradResult& r, std::string_view group, const std::vector<Tensor>& grads)
{
    for (std::size_t i = 0; i < grads.size(); ++i) r.grads[indexed(group, i)] = grads[i];
}

} // namespace

LossId parse_loss_id(std::string_view name)
{
    for (LossId id : kAllLosses) {
        if (to_string(id) == name) return id;
    }
    if (name == "vgg") return LossId::feature_mse;
    if (name == "zecon") return LossId::patch_contrastive;
    fail(ErrorKind::config, "unknown loss id '" + std::string(name) + "'");
}

std::string_view to_string(LossId id) noexcept
{
    switch (id) {
    case LossId::pc: return "pc";
    case LossId::pd: return "pd";
    case LossId::psc: return "psc";
    case LossId::mse: return "mse";
    case LossId::feature_mse: return "feature_mse";
    case LossId::patch_contrastive: return "patch_contrastive";
    case LossId::style: return "style";
    case LossId::content: return "content";
    case LossId::total: return "total";
    }
    return "unknown";
}

std::span<const LossId> all_loss_ids() noexcept
{
    return kAllLosses;
}

double loss_value(LossId id, const LossInputs& in, const LossWeights& w)
{
    switch (id) {
    case LossId::pc: return loss_pc(in.style);
    case LossId::pd: return loss_pd(in.style);
    case LossId::psc: return loss_psc(in.content.source_layers, in.content.target_layers);
    case LossId::mse: return loss_mse(in.content.source_image, in.content.target_image);
    case LossId::feature_mse: return loss_feature_mse(in.content.source_vgg, in.content.target_vgg);
    case LossId::patch_contrastive:
        return loss_patch_contrastive(in.content.source_zecon, in.content.target_zecon, in.content.temperature);
    case LossId::style: return loss_style(in.style, w);
    case LossId::content: return loss_content(in.content, w);
    case LossId::total: return loss_style(in.style, w) + loss_content(in.content, w);
    }
    return 0.0;
}

std::vector<std::string> input_names(LossId id, const LossInputs& in)
{
    std::vector<std::string> names;
    const auto style = [&](bool with_source) {
        add_group(names, "target_patches", in.style.target_patches.size());
        if (with_source) add_group(names, "source_patches", in.style.source_patches.size());
        names.emplace_back("target_text");
        if (with_source) names.emplace_back("source_text");
    };
    const auto layers = [&] {
        add_group(names, "source_layers", in.content.source_layers.size());
        add_group(names, "target_layers", in.content.target_layers.size());
    };
    const auto vgg = [&] {
        add_group(names, "source_vgg", in.content.source_vgg.size());
        add_group(names, "target_vgg", in.content.target_vgg.size());
    };
    const auto zecon = [&] {
        add_group(names, "source_zecon", in.content.source_zecon.size());
        add_group(names, "target_zecon", in.content.target_zecon.size());
    };
    const auto image = [&] {
        names.emplace_back("source_image");
        names.emplace_back("target_image");
    };
    switch (id) {
    case LossId::pc: style(false); break;
    case LossId::pd: style(true); break;
    case LossId::psc: layers(); break;
    case LossId::mse: image(); break;
    case LossId::feature_mse: vgg(); break;
    case LossId::patch_contrastive: zecon(); break;
    case LossId::style: style(true); break;
    case LossId::content:
        layers(), zecon(), vgg(), image();
        break;
    case LossId::total:
        style(true), layers(), zecon(), vgg(), image();
        break;
    }
    return names;
}

namespace {

template <typename Inputs>
auto& lookup(Inputs& in, const std::string& name)
{
    const auto open = name.find('[');
    const std::string group = name.substr(0, open);
    if (open == std::string::npos) {
        if (group == "target_text") return in.style.target_text;
        if (group == "source_text") return in.style.source_text;
        if (group == "source_image") return in.content.source_image;
        if (group == "target_image") return in.content.target_image;
        fail(ErrorKind::config, "unknown loss input '" + name + "'");
    }
    std::size_t idx = 0;
    try {
        idx = std::stoul(name.substr(open + 1));
    } catch (...) {
        fail(ErrorKind::config, "bad loss input index in '" + name + "'");
    }
    auto* list = [&]() -> decltype(&in.style.target_patches) {
        if (group == "target_patches") return &in.style.target_patches;
        if (group == "source_patches") return &in.style.source_patches;
        if (group == "source_layers") return &in.content.source_layers;
        if (group == "target_layers") return &in.content.target_layers;
        if (group == "source_vgg") return &in.content.source_vgg;
        if (group == "target_vgg") return &in.content.target_vgg;
        if (group == "source_zecon") return &in.content.source_zecon;
        if (group == "target_zecon") return &in.content.target_zecon;
        return nullptr;
    }();
    if (list == nullptr) fail(ErrorKind::config, "unknown loss input '" + name + "'");
    if (idx >= list->size()) fail(ErrorKind::index, "loss input '" + name + "' out of range");
    return (*list)[idx];
}

} // namespace

const Tensor& input_tensor(const LossInputs& in, const std::string& name)
{
    return lookup(in, name);
}

Tensor& input_tensor(LossInputs& in, const std::string& name)
{
    return lookup(in, name);
}

// ---- style -----------------------------------------------------------------

StyleGradient style_gradient(const StyleInputs& in, double w_pc, double w_pd)
{
    StyleGradient g;
    const bool use_pc = w_pc != 0.0;
    const bool use_pd = w_pd != 0.0;
    if (!use_pc && !use_pd) {
        g.target_patches = zeros_like(in.target_patches);
        g.source_patches = zeros_like(in.source_patches);
        g.target_text = zeros_like(in.target_text);
        g.source_text = zeros_like(in.source_text);
        return g;
    }

    const auto fw = detail::style_forward(in, use_pd);
    const std::size_t n = in.target_patches.size();
    const std::size_t m = fw.weight_sets.size();
    const std::size_t len = fw.target_text.unit.size();
    auto g_target_aug = zero_vectors(m, len);
    auto g_source_aug = zero_vectors(use_pd ? m : 0, len);
    std::vector<double> g_target_text(len, 0.0);
    std::vector<double> g_source_text(len, 0.0);

    double pc = 0.0;
    double pd = 0.0;
    if (use_pc) {
        const auto terms = detail::pc_terms(fw);
        pc = terms.value;
        const double upstream = w_pc / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& d = terms.distances[i];
            g.clamp_boundary = g.clamp_boundary || d.clamped;
            const double coeff = upstream * d.derivative;
            const auto& aug = fw.target_aug(i);
            for (std::size_t k = 0; k < len; ++k) {
                g_target_aug[i][k] += coeff * fw.target_text.unit[k];
                g_target_text[k] += coeff * aug[k];
            }
        }
    }
    if (use_pd) {
        const auto terms = detail::pd_terms(fw);
        pd = terms.value;
        const double upstream = -w_pd / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& c = terms.cosines[i];
            std::vector<double> g_di(len, 0.0);
            std::vector<double> g_dt(len, 0.0);
            detail::cosine_backward_a(c, terms.delta_image[i], terms.delta_text, upstream, g_di);
            const detail::Cosine swapped{c.value, c.norm_b, c.norm_a};
            detail::cosine_backward_a(swapped, terms.delta_text, terms.delta_image[i], upstream, g_dt);
            for (std::size_t k = 0; k < len; ++k) {
                g_target_aug[i][k] += g_di[k];
                g_source_aug[i][k] -= g_di[k];
                g_target_text[k] += g_dt[k];
                g_source_text[k] -= g_dt[k];
            }
        }
    }
    g.value = w_pc * pc + w_pd * pd;

    auto g_target_units = zero_vectors(n, len);
    for (std::size_t i = 0; i < m; ++i) {
        g.clamp_boundary = g.clamp_boundary || trace_has_coincidence(fw.target_traces[i]);
        detail::surface_backward(fw.target_traces[i], fw.target_units, g_target_aug[i], g_target_units);
    }
    for (std::size_t j = 0; j < n; ++j) {
        g.target_patches.emplace_back(in.target_patches[j].shape(),
                                      detail::project_backward(fw.target_proj[j], g_target_units[j]));
    }
    g.target_text = Tensor(in.target_text.shape(), detail::project_backward(fw.target_text, g_target_text));

    if (use_pd) {
        auto g_source_units = zero_vectors(n, len);
        for (std::size_t i = 0; i < m; ++i) {
            g.clamp_boundary = g.clamp_boundary || trace_has_coincidence(fw.source_traces[i]);
            detail::surface_backward(fw.source_traces[i], fw.source_units, g_source_aug[i], g_source_units);
        }
        for (std::size_t j = 0; j < n; ++j) {
            g.source_patches.emplace_back(in.source_patches[j].shape(),
                                          detail::project_backward(fw.source_proj[j], g_source_units[j]));
        }
        g.source_text = Tensor(in.source_text.shape(), detail::project_backward(fw.source_text, g_source_text));
    } else {
        g.source_patches = zeros_like(in.source_patches);
        g.source_text = zeros_like(in.source_text);
    }
    return g;
}

// ---- content ---------------------------------------------------------------

namespace {

/// Pulls per-position unit-vector cotangents back to the raw layer tensor.
Tensor layer_backward(const detail::LayerCorrelation& lc, const std::vector<double>& g_unit, const Shape& shape)
{
    const std::size_t P = lc.positions;
    const std::size_t C = lc.channels;
    std::vector<double> g_z(P * C);
    for (std::size_t p = 0; p < P; ++p) {
        const double* u = lc.unit.data() + p * C;
        const double* g = g_unit.data() + p * C;
        double radial = 0.0;
        for (std::size_t ch = 0; ch < C; ++ch) radial += u[ch] * g[ch];
        for (std::size_t ch = 0; ch < C; ++ch) g_z[ch * P + p] = (g[ch] - u[ch] * radial) / lc.norms[p];
    }
    return Tensor(shape, detail::project_backward(lc.projection, g_z));
}

} // namespace

LayerGradient psc_gradient(const LayerFeatures& source, const LayerFeatures& target)
{
    detail::check_layer_pairs(source, target);
    LayerGradient g;
    for (std::size_t l = 0; l < source.size(); ++l) {
        const auto s = detail::correlate_layer(source[l], l);
        const auto t = detail::correlate_layer(target[l], l);
        g.value += detail::psc_layer_value(s, t);

        const std::size_t P = s.positions;
        const std::size_t C = s.channels;
        std::vector<double> g_s(P * C, 0.0);
        std::vector<double> g_t(P * C, 0.0);
        // C(p,q) is symmetric, so each row p carries both of its appearances
        parallel_for(P, [&](std::size_t p) {
            const double* sp = s.unit.data() + p * C;
            const double* tp = t.unit.data() + p * C;
            double* gs = g_s.data() + p * C;
            double* gt = g_t.data() + p * C;
            for (std::size_t q = 0; q < P; ++q) {
                const double* sq = s.unit.data() + q * C;
                const double* tq = t.unit.data() + q * C;
                const double cs = detail::dot({sp, C}, {sq, C});
                const double ct = detail::dot({tp, C}, {tq, C});
                const double G = 2.0 * detail::smooth_l1_grad(cs - ct) / static_cast<double>(P);
                for (std::size_t ch = 0; ch < C; ++ch) {
                    gs[ch] += G * sq[ch];
                    gt[ch] -= G * tq[ch];
                }
            }
        });
        g.source.push_back(layer_backward(s, g_s, source[l].shape()));
        g.target.push_back(layer_backward(t, g_t, target[l].shape()));
    }
    return g;
}

PairGradient mse_gradient(const Tensor& a, const Tensor& b)
{
    PairGradient g;
    g.value = loss_mse(a, b);
    g.a = zeros_like(a);
    g.b = zeros_like(b);
    const double scale = 2.0 / static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        g.a[i] = scale * (a[i] - b[i]);
        g.b[i] = -g.a[i];
    }
    return g;
}

LayerGradient feature_mse_gradient(const LayerFeatures& source, const LayerFeatures& target)
{
    LayerGradient g;
    g.value = loss_feature_mse(source, target);
    const double inv_layers = 1.0 / static_cast<double>(source.size());
    for (std::size_t l = 0; l < source.size(); ++l) {
        auto pair = mse_gradient(source[l], target[l]);
        for (double& v : pair.a.values()) v *= inv_layers;
        for (double& v : pair.b.values()) v *= inv_layers;
        g.source.push_back(std::move(pair.a));
        g.target.push_back(std::move(pair.b));
    }
    return g;
}

LayerGradient contrastive_gradient(const std::vector<Tensor>& source, const std::vector<Tensor>& target,
                                   double temperature)
{
    const auto f = detail::contrastive_forward(source, target, temperature);
    LayerGradient g;
    g.value = f.value;
    g.source = zeros_like(source);
    g.target = zeros_like(target);
    const std::size_t n = f.n;
    for (std::size_t i = 0; i < n; ++i) {
        const auto q = target[i].values();
        for (std::size_t j = 0; j < n; ++j) {
            const auto k = source[j].values();
            const double c = f.cos[i * n + j];
            const double prob = std::exp(c / temperature - f.lse[i]);
            const double up = (prob - (i == j ? 1.0 : 0.0)) / (static_cast<double>(n) * temperature);
            const detail::Cosine cq{c, f.norms_q[i], f.norms_k[j]};
            const detail::Cosine ck{c, f.norms_k[j], f.norms_q[i]};
            detail::cosine_backward_a(cq, q, k, up, g.target[i].values());
            detail::cosine_backward_a(ck, k, q, up, g.source[j].values());
        }
    }
    return g;
}

// ---- dispatch --------------------------------------------------------------

namespace {

struct ContentGradient {
    double value = 0.0;
    LayerGradient layers;
    LayerGradient zecon;
    LayerGradient vgg;
    PairGradient image;
};

ContentGradient content_gradient(const ContentInputs& in, const LossWeights& w)
{
    w.validate();
    ContentGradient g;
    ContentParts parts;
    if (w.ps != 0.0) {
        g.layers = psc_gradient(in.source_layers, in.target_layers);
        parts.psc = g.layers.value;
        scale_into(g.layers.source, w.ps);
        scale_into(g.layers.target, w.ps);
    } else {
        g.layers.source = zeros_like(in.source_layers);
        g.layers.target = zeros_like(in.target_layers);
    }
    if (w.z != 0.0) {
        g.zecon = contrastive_gradient(in.source_zecon, in.target_zecon, in.temperature);
        parts.zecon = g.zecon.value;
        scale_into(g.zecon.source, w.z);
        scale_into(g.zecon.target, w.z);
    } else {
        g.zecon.source = zeros_like(in.source_zecon);
        g.zecon.target = zeros_like(in.target_zecon);
    }
    if (w.v != 0.0) {
        g.vgg = feature_mse_gradient(in.source_vgg, in.target_vgg);
        parts.vgg = g.vgg.value;
        scale_into(g.vgg.source, w.v);
        scale_into(g.vgg.target, w.v);
    } else {
        g.vgg.source = zeros_like(in.source_vgg);
        g.vgg.target = zeros_like(in.target_vgg);
    }
    if (w.m != 0.0) {
        g.image = mse_gradient(in.source_image, in.target_image);
        parts.mse = g.image.value;
        for (double& v : g.image.a.values()) v *= w.m;
        for (double& v : g.image.b.values()) v *= w.m;
    } else {
        g.image.a = zeros_like(in.source_image);
        g.image.b = zeros_like(in.target_image);
    }
    g.value = loss_content(parts, w);
    return g;
}

void put_style(GradResult& r, const StyleGradient& g, bool with_source)
{
    put_group(r, "target_patches", g.target_patches);
    r.grads["target_text"] = g.target_text;
    if (with_source) {
        put_group(r, "source_patches", g.source_patches);
        r.grads["source_text"] = g.source_text;
    }
    r.clamp_boundary = r.clamp_boundary || g.clamp_boundary;
}

void put_content(GradResult& r, const ContentGradient& g)
{
    put_group(r, "source_layers", g.layers.source);
    put_group(r, "target_layers", g.layers.target);
    put_group(r, "source_zecon", g.zecon.source);
    put_group(r, "target_zecon", g.zecon.target);
    put_group(r, "source_vgg", g.vgg.source);
    put_group(r, "target_vgg", g.vgg.target);
    r.grads["source_image"] = g.image.a;
    r.grads["target_image"] = g.image.b;
}

} // namespace

GradResult grad_eval(LossId id, const LossInputs& in, const LossWeights& w)
{
    GradResult r;
    switch (id) {
    case LossId::pc: {
        const auto g = style_gradient(in.style, 1.0, 0.0);
        r.value = g.value;
        put_style(r, g, false);
        break;
    }
    case LossId::pd: {
        const auto g = style_gradient(in.style, 0.0, 1.0);
        r.value = g.value;
        put_style(r, g, true);
        break;
    }
    case LossId::style: {
        w.validate();
        const auto g = style_gradient(in.style, w.pc, w.pd);
        r.value = g.value;
        put_style(r, g, true);
        break;
    }
    case LossId::psc: {
        const auto g = psc_gradient(in.content.source_layers, in.content.target_layers);
        r.value = g.value;
        put_group(r, "source_layers", g.source);
        put_group(r, "target_layers", g.target);
        break;
    }
    case LossId::mse: {
        const auto g = mse_gradient(in.content.source_image, in.content.target_image);
        r.value = g.value;
        r.grads["source_image"] = g.a;
        r.grads["target_image"] = g.b;
        break;
    }
    case LossId::feature_mse: {
        const auto g = feature_mse_gradient(in.content.source_vgg, in.content.target_vgg);
        r.value = g.value;
        put_group(r, "source_vgg", g.source);
        put_group(r, "target_vgg", g.target);
        break;
    }
    case LossId::patch_contrastive: {
        const auto g = contrastive_gradient(in.content.source_zecon, in.content.target_zecon, in.content.temperature);
        r.value = g.value;
        put_group(r, "source_zecon", g.source);
        put_group(r, "target_zecon", g.target);
        break;
    }
    case LossId::content: {
        const auto g = content_gradient(in.content, w);
        r.value = g.value;
        put_content(r, g);
        break;
    }
    case LossId::total: {
        w.validate();
        const auto s = style_gradient(in.style, w.pc, w.pd);
        const auto c = content_gradient(in.content, w);
        r.value = s.value + c.value;
        put_style(r, s, true);
        put_content(r, c);
        break;
    }
    }
    for (const auto& [name, t] : r.grads) {
        if (!t.all_finite()) fail(ErrorKind::validation, "non-finite gradient for " + name);
    }
    return r;
}

// ---- finite differences ----------------------------------------------------

FdReport fd_check(LossId id, const LossInputs& in, const LossWeights& w, const FdOptions& opts)
{
    if (!(opts.h > 0.0) || !std::isfinite(opts.h)) fail(ErrorKind::config, "finite-difference step h must be > 0");
    if (opts.coords_per_input == 0) fail(ErrorKind::config, "coords_per_input must be >= 1");

    const GradResult analytic = grad_eval(id, in, w);
    FdReport report;
    report.id = id;
    report.value = analytic.value;
    report.clamp_boundary = analytic.clamp_boundary;

    const auto names = input_names(id, in);
    for (std::size_t input_index = 0; input_index < names.size(); ++input_index) {
        const std::string& name = names[input_index];
        const Tensor& grad = analytic.grads.at(name);
        const std::size_t N = grad.size();

        std::vector<std::size_t> coords(N);
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (N > opts.coords_per_input) {
            Rng rng(opts.seed * 0x9E3779B97F4A7C15ull + input_index);
            for (std::size_t i = 0; i < opts.coords_per_input; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng.next() % (N - i));
                std::swap(coords[i], coords[j]);
            }
            coords.resize(opts.coords_per_input);
            std::sort(coords.begin(), coords.end());
        }

        std::vector<double> fd(coords.size());
        parallel_for(coords.size(), [&](std::size_t c) {
            LossInputs probe = in;
            double& x = input_tensor(probe, name)[coords[c]];
            const double x0 = x;
            x = x0 + opts.h;
            const double plus = loss_value(id, probe, w);
            x = x0 - opts.h;
            const double minus = loss_value(id, probe, w);
            fd[c] = (plus - minus) / (2.0 * opts.h);
        });

        FdInputReport ir;
        ir.name = name;
        ir.checked = coords.size();
        for (double v : grad.values()) ir.grad_scale = std::max(ir.grad_scale, std::abs(v));
        double sum = 0.0;
        for (std::size_t c = 0; c < coords.size(); ++c) {
            const double an = grad[coords[c]];
            const double denom = std::max({std::abs(fd[c]), std::abs(an), ir.grad_scale, 1e-8});
            const double rel = std::abs(fd[c] - an) / denom;
            ir.max_rel = std::max(ir.max_rel, rel);
            sum += rel;
        }
        ir.mean_rel = coords.empty() ? 0.0 : sum / static_cast<double>(coords.size());
        report.max_rel = std::max(report.max_rel, ir.max_rel);
        report.inputs.push_back(std::move(ir));
    }
    return report;
}

nlohmann::json to_json(const FdReport& report)
{
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& ir : report.inputs) {
        inputs.push_back({{"name", ir.name},
                          {"checked", ir.checked},
                          {"max_rel", ir.max_rel},
                          {"mean_rel", ir.mean_rel},
                          {"grad_scale", ir.grad_scale}});
    }
    return {{"loss", to_string(report.id)},
            {"value", report.value},
            {"clamp_boundary", report.clamp_boundary},
            {"max_rel", report.max_rel},
            {"inputs", inputs}};
}

LossInputs make_random_inputs(std::uint64_t seed, const RandomInputShape& shape)
{
    Rng rng(seed);
    const auto normal = [&](const Shape& s) {
        std::vector<double> v(element_count(s));
        for (double& x : v) x = rng.normal();
        return Tensor(s, std::move(v));
    };
    const auto uniform = [&](const Shape& s) {
        std::vector<double> v(element_count(s));
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        return Tensor(s, std::move(v));
    };
    LossInputs in;
    for (std::size_t i = 0; i < shape.patches; ++i) in.style.target_patches.push_back(normal({shape.feature_size}));
    for (std::size_t i = 0; i < shape.patches; ++i) in.style.source_patches.push_back(normal({shape.feature_size}));
    in.style.target_text = normal({shape.feature_size});
    in.style.source_text = normal({shape.feature_size});
    for (const auto& s : shape.layers) {
        in.content.source_layers.push_back(normal(s));
        in.content.target_layers.push_back(normal(s));
    }
    for (const auto& s : shape.vgg) {
        in.content.source_vgg.push_back(normal(s));
        in.content.target_vgg.push_back(normal(s));
    }
    for (std::size_t i = 0; i < shape.zecon_patches; ++i) {
        in.content.source_zecon.push_back(normal({shape.zecon_size}));
        in.content.target_zecon.push_back(normal({shape.zecon_size}));
    }
    in.content.source_image = uniform(shape.image);
    in.content.target_image = uniform(shape.image);
    return in;
}

} // namespace geostyle
