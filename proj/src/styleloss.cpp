#include "geostyle/styleloss.hpp"

#include "geostyle/detail/style_forward.hpp"
#include "geostyle/error.hpp"
#include "geostyle/parallel.hpp"

#include <string>

namespace geostyle {

namespace detail {

namespace {

void check_patch_list(const std::vector<Tensor>& patches, std::size_t expected_size, const char* what)
{
    if (patches.size() < 2) {
        fail(ErrorKind::config, std::string(what) + " needs at least 2 patches, got " + std::to_string(patches.size()));
    }
    for (std::size_t i = 0; i < patches.size(); ++i) {
        if (patches[i].size() != expected_size) {
            fail(ErrorKind::shape, std::string(what) + " " + std::to_string(i) + " has " +
                                       std::to_string(patches[i].size()) + " elements, expected " +
                                       std::to_string(expected_size),
                 i);
        }
    }
}

Projection project_indexed(const Tensor& t, std::size_t index)
{
    try {
        return project_values(t.values());
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " (patch " + std::to_string(index) + ")", index);
    }
}

std::vector<SurfaceTrace> augment_traces(const std::vector<std::vector<double>>& units,
                                         const std::vector<WeightSet>& sets)
{
    std::vector<SurfaceTrace> traces(sets.size());
    parallel_for(sets.size(), [&](std::size_t i) { traces[i] = surface_forward(units, sets[i].values()); });
    return traces;
}

} // namespace

StyleForward style_forward(const StyleInputs& in, bool with_source)
{
    in.augment.validate();
    const std::size_t size = in.target_text.size();
    check_patch_list(in.target_patches, size, "target patch feature");
    if (with_source) {
        check_patch_list(in.source_patches, size, "source patch feature");
        if (in.source_patches.size() != in.target_patches.size()) {
            fail(ErrorKind::shape, "source and target patch lists differ in length");
        }
        if (in.source_text.size() != size) fail(ErrorKind::shape, "source and target text features differ in size");
    }

    StyleForward fw;
    const std::size_t n = in.target_patches.size();
    for (std::size_t i = 0; i < n; ++i) {
        fw.target_proj.push_back(project_indexed(in.target_patches[i], i));
        fw.target_units.push_back(fw.target_proj.back().unit);
    }
    fw.target_text = project_values(in.target_text.values());
    fw.weight_sets = generate_weight_sets(n, in.augment);
    fw.target_traces = augment_traces(fw.target_units, fw.weight_sets);
    if (with_source) {
        for (std::size_t i = 0; i < n; ++i) {
            fw.source_proj.push_back(project_indexed(in.source_patches[i], i));
            fw.source_units.push_back(fw.source_proj.back().unit);
        }
        fw.source_text = project_values(in.source_text.values());
        fw.source_traces = augment_traces(fw.source_units, fw.weight_sets);
    }
    return fw;
}

PcTerms pc_terms(const StyleForward& fw)
{
    PcTerms t;
    const std::size_t m = fw.weight_sets.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        t.distances.push_back(unit_angle(fw.target_aug(i), fw.target_text.unit));
        sum += t.distances.back().angle;
    }
    t.value = sum / static_cast<double>(m);
    return t;
}

PdTerms pd_terms(const StyleForward& fw)
{
    PdTerms t;
    const std::size_t m = fw.weight_sets.size();
    const std::size_t len = fw.target_text.unit.size();
    t.delta_text.resize(len);
    for (std::size_t k = 0; k < len; ++k) t.delta_text[k] = fw.target_text.unit[k] - fw.source_text.unit[k];
    if (!(norm(t.delta_text) > kDegenerateDirection)) {
        fail(ErrorKind::degenerate_direction, "target and source text pre-shapes coincide (zero text direction)");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& tgt = fw.target_aug(i);
        const auto& src = fw.source_aug(i);
        std::vector<double> d(len);
        for (std::size_t k = 0; k < len; ++k) d[k] = tgt[k] - src[k];
        if (!(norm(d) > kDegenerateDirection)) {
            fail(ErrorKind::degenerate_direction,
                 "augmented target and source features coincide (zero image direction) at index " + std::to_string(i),
                 i);
        }
        t.cosines.push_back(cosine(d, t.delta_text));
        sum += 1.0 - t.cosines.back().value;
        t.delta_image.push_back(std::move(d));
    }
    t.value = sum / static_cast<double>(m);
    return t;
}

} // namespace detail

double loss_pc(const StyleInputs& in)
{
    return detail::pc_terms(detail::style_forward(in, false)).value;
}

double loss_pd(const StyleInputs& in)
{
    return detail::pd_terms(detail::style_forward(in, true)).value;
}

double loss_style(const StyleInputs& in, const LossWeights& w)
{
    w.validate();
    const bool need_pd = w.pd != 0.0;
    if (w.pc == 0.0 && !need_pd) return 0.0;
    const auto fw = detail::style_forward(in, need_pd);
    const double pc = w.pc != 0.0 ? detail::pc_terms(fw).value : 0.0;
    const double pd = need_pd ? detail::pd_terms(fw).value : 0.0;
    return w.pc * pc + w.pd * pd;
}

} // namespace geostyle
