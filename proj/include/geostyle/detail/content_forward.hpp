#pragma once

#include "geostyle/contentloss.hpp"
#include "geostyle/detail/kernels.hpp"

#include <cstddef>
#include <vector>

namespace geostyle::detail {

inline constexpr double kDegenerateFeature = 1e-12;

/// A projected layer with its per-position unit channel vectors.
struct LayerCorrelation {
    Projection projection;
    std::size_t channels = 0;
    std::size_t positions = 0;      // h * w
    std::vector<double> unit;       // positions x channels, position-major
    std::vector<double> norms;      // per-position norm before normalising
};

LayerCorrelation correlate_layer(const Tensor& layer, std::size_t layer_index);

double smooth_l1(double d);
double smooth_l1_grad(double d);

/// Sum over positions p of mean_q smoothL1(Cs(p,q) - Ct(p,q)). Rows are
/// formed one at a time, never the full (hw)^2 matrix.
double psc_layer_value(const LayerCorrelation& source, const LayerCorrelation& target);

void check_layer_pairs(const LayerFeatures& source, const LayerFeatures& target);

struct ContrastiveForward {
    std::size_t n = 0;
    std::vector<double> norms_q;
    std::vector<double> norms_k;
    std::vector<double> cos;     // n x n, row = query
    std::vector<double> lse;     // per-row log-sum-exp of logits
    double value = 0.0;
};

ContrastiveForward contrastive_forward(const std::vector<Tensor>& source, const std::vector<Tensor>& target,
                                       double temperature);

} // namespace geostyle::detail
