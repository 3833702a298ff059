#pragma once

#include "geostyle/random.hpp"
#include "geostyle/tensor.hpp"
#include "geostyle/weights.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace geostyle {

enum class SigmaMode { ddim, ddpm };
SigmaMode parse_sigma_mode(std::string_view name);
std::string_view to_string(SigmaMode mode) noexcept;

/// standard divides the noise-free part by sqrt(alpha_bar_t), which inverts
/// the forward marginal exactly; eq3_literal divides by sqrt(alpha_t).
enum class DenoiseMode { standard, eq3_literal };
DenoiseMode parse_denoise_mode(std::string_view name);
std::string_view to_string(DenoiseMode mode) noexcept;

/// descent subtracts eta * grad; paper_plus adds it.
enum class GradientSign { descent, paper_plus };
GradientSign parse_gradient_sign(std::string_view name);
std::string_view to_string(GradientSign sign) noexcept;

/// Linear beta ramp over the base steps.
struct BetaSpec {
    double start = 1e-4;
    double end = 0.02;
    void validate() const;
};

struct ScheduleConfig {
    std::size_t T = 1000;
    BetaSpec beta;
    std::size_t T_prime = 50;
    std::size_t t0 = 25;
    SigmaMode sigma = SigmaMode::ddpm;
};

struct Schedule {
    std::size_t T = 0;
    BetaSpec beta;
    /// Indexed by timestep 0..T. Entry 0 is the clean state: beta 0, alpha 1, alpha_bar 1.
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;
    /// respaced[k - 1] is the base timestep of respaced step k = 1..T'.
    std::vector<std::size_t> respaced;
    std::size_t t0 = 0;
    SigmaMode sigma_mode = SigmaMode::ddim;

    [[nodiscard]] std::size_t steps() const noexcept { return respaced.size(); }
    /// Base timestep of respaced step k; k = 0 maps to 0.
    [[nodiscard]] std::size_t timestep(std::size_t k) const;
    [[nodiscard]] double alpha_bar(std::size_t t) const;
    [[nodiscard]] double alpha(std::size_t t) const;
    /// Noise scale of the move from respaced step k to k - 1.
    [[nodiscard]] double sigma(std::size_t k) const;
};

/// Respaced step k sits at round(k T / T'), so the last one is T.
Schedule build_schedule(const ScheduleConfig& cfg = {});

nlohmann::json to_json(const Schedule& s);

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, t in 0..T.
Tensor q_sample(const Tensor& x0, std::size_t t, const Tensor& eps, const Schedule& s);

/// (x_t, t) -> predicted noise of x_t's shape. Must be deterministic.
using NoisePredictor = std::function<Tensor(const Tensor& x_t, std::size_t t)>;

/// Exact posterior-mean noise predictor for data drawn from N(mean, scale^2 I)
/// under the schedule's alpha_bar:
/// eps = sqrt(1 - ab) (x_t - sqrt(ab) mean) / (1 - ab (1 - scale^2)).
/// With scale 0 this is (x_t - sqrt(ab) mean) / sqrt(1 - ab).
NoisePredictor toy_predictor(Tensor mean, double scale, const Schedule& s);

Tensor denoised_from_eps(const Tensor& x_t, const Tensor& eps, std::size_t t, const Schedule& s,
                         DenoiseMode mode = DenoiseMode::standard);
Tensor denoised_estimate(const Tensor& x_t, std::size_t t, const NoisePredictor& predictor, const Schedule& s,
                         DenoiseMode mode = DenoiseMode::standard);

struct InvertOptions {
    /// Fixed-point refinements per step. 0 gives the classic approximation
    /// that evaluates the predictor at the less noisy point.
    std::size_t refine = 100;
    double tolerance = 1e-15; // relative change that ends refinement early
};

/// Deterministic reverse walk from x0 through respaced steps 1..t_stop.
/// Each step solves x_t = sqrt(ab_t) x0_hat(x_t) + sqrt(1 - ab_t) eps(x_t, t)
/// with x0_hat taken from the less noisy point, so a sigma = 0 sampling step
/// maps x_t straight back.
Tensor ddim_invert(const Tensor& x0, const NoisePredictor& predictor, const Schedule& s, std::size_t t_stop,
                   const InvertOptions& opts = {});

/// Loss on the denoised estimate with its image gradient.
class GuidanceObjective {
public:
    virtual ~GuidanceObjective() = default;
    struct Evaluation {
        double value = 0.0;
        Tensor grad;
    };
    virtual Evaluation evaluate(const Tensor& x0_hat) const = 0;
    virtual double value(const Tensor& x0_hat) const { return evaluate(x0_hat).value; }
};

struct GuidanceConfig {
    LossWeights weights;
    double eta = 1.0;
    GradientSign sign = GradientSign::descent;
    DenoiseMode denoise = DenoiseMode::standard;
    std::uint64_t seed = 0;
    void validate() const;
};

struct StepResult {
    Tensor x_prev;
    Tensor x0_hat;      // before guidance
    Tensor x0_guided;   // after guidance
    double loss = 0.0;  // objective at x0_hat; 0 without guidance
    bool guided = false;
};

/// One reverse move from respaced step k to k - 1. Guidance runs when an
/// objective is given; fresh noise is drawn from rng only when sigma_k > 0.
StepResult guided_step(const Tensor& x_t, std::size_t k, const NoisePredictor& predictor, const Schedule& s,
                       const GuidanceConfig& cfg, const GuidanceObjective* objective, Rng& rng);

struct LoopResult {
    Tensor image;
    Tensor x_t0;
    std::vector<double> trace; // objective at each step's denoised estimate, k = t0 .. 1
};

/// Inverts to t0, then runs t0 guided steps down to 0.
LoopResult sample_loop(const Tensor& x0, const NoisePredictor& predictor, const Schedule& s, const GuidanceConfig& cfg,
                       const GuidanceObjective* objective, const InvertOptions& invert = {});

} // namespace geostyle
