#include "geostyle/diffusion.hpp"

#include "geostyle/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace geostyle {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what)
{
    if (a.shape() != b.shape()) {
        fail(ErrorKind::shape, std::string(what) + ": shapes differ, " + shape_string(a.shape()) + " vs " +
                                   shape_string(b.shape()));
    }
}

void check_finite(const Tensor& t, const char* what)
{
    if (!t.all_finite()) fail(ErrorKind::validation, std::string(what) + " produced a non-finite value");
}

double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

SigmaMode parse_sigma_mode(std::string_view name)
{
    if (name == "ddim") return SigmaMode::ddim;
    if (name == "ddpm") return SigmaMode::ddpm;
    fail(ErrorKind::config, "unknown sigma mode '" + std::string(name) + "' (expected ddim or ddpm)");
}

std::string_view to_string(SigmaMode mode) noexcept
{
    return mode == SigmaMode::ddim ? "ddim" : "ddpm";
}

DenoiseMode parse_denoise_mode(std::string_view name)
{
    if (name == "standard") return DenoiseMode::standard;
    if (name == "eq3-literal") return DenoiseMode::eq3_literal;
    fail(ErrorKind::config, "unknown denoise mode '" + std::string(name) + "' (expected standard or eq3-literal)");
}

std::string_view to_string(DenoiseMode mode) noexcept
{
    return mode == DenoiseMode::standard ? "standard" : "eq3-literal";
}

GradientSign parse_gradient_sign(std::string_view name)
{
    if (name == "descent") return GradientSign::descent;
    if (name == "paper-plus") return GradientSign::paper_plus;
    fail(ErrorKind::config, "unknown gradient sign '" + std::string(name) + "' (expected descent or paper-plus)");
}

std::string_view to_string(GradientSign sign) noexcept
{
    return sign == GradientSign::descent ? "descent" : "paper-plus";
}

void BetaSpec::validate() const
{
    if (!(start > 0.0) || !(end < 1.0) || !(start <= end)) {
        fail(ErrorKind::config, "beta schedule needs 0 < start <= end < 1");
    }
}

// ---- schedule --------------------------------------------------------------

std::size_t Schedule::timestep(std::size_t k) const
{
    if (k > respaced.size()) {
        fail(ErrorKind::index, "respaced step " + std::to_string(k) + " outside 0.." + std::to_string(respaced.size()));
    }
    return k == 0 ? 0 : respaced[k - 1];
}

double Schedule::alpha_bar(std::size_t t) const
{
    if (t > T) fail(ErrorKind::index, "timestep " + std::to_string(t) + " outside 0.." + std::to_string(T));
    return alpha_bars[t];
}

double Schedule::alpha(std::size_t t) const
{
    if (t > T) fail(ErrorKind::index, "timestep " + std::to_string(t) + " outside 0.." + std::to_string(T));
    return alphas[t];
}

double Schedule::sigma(std::size_t k) const
{
    if (k == 0 || k > respaced.size()) {
        fail(ErrorKind::index, "respaced step " + std::to_string(k) + " outside 1.." + std::to_string(respaced.size()));
    }
    if (sigma_mode == SigmaMode::ddim) return 0.0;
    const double ab = alpha_bars[timestep(k)];
    const double ab_prev = alpha_bars[timestep(k - 1)];
    return std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_prev);
}

Schedule build_schedule(const ScheduleConfig& cfg)
{
    cfg.beta.validate();
    if (cfg.T_prime < 1 || cfg.T < cfg.T_prime) fail(ErrorKind::config, "schedule needs T >= T' >= 1");
    if (cfg.t0 > cfg.T_prime) fail(ErrorKind::config, "t0 must not exceed T'");

    Schedule s;
    s.T = cfg.T;
    s.beta = cfg.beta;
    s.t0 = cfg.t0;
    s.sigma_mode = cfg.sigma;
    s.betas.assign(cfg.T + 1, 0.0);
    s.alphas.assign(cfg.T + 1, 1.0);
    s.alpha_bars.assign(cfg.T + 1, 1.0);
    for (std::size_t t = 1; t <= cfg.T; ++t) {
        const double frac = cfg.T == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(cfg.T - 1);
        s.betas[t] = cfg.beta.start + (cfg.beta.end - cfg.beta.start) * frac;
        s.alphas[t] = 1.0 - s.betas[t];
        s.alpha_bars[t] = s.alpha_bars[t - 1] * s.alphas[t];
    }
    for (std::size_t k = 1; k <= cfg.T_prime; ++k) {
        s.respaced.push_back((2 * k * cfg.T + cfg.T_prime) / (2 * cfg.T_prime));
    }
    return s;
}

nlohmann::json to_json(const Schedule& s)
{
    nlohmann::json steps = nlohmann::json::array();
    for (std::size_t k = 1; k <= s.steps(); ++k) {
        const std::size_t t = s.timestep(k);
        steps.push_back({{"k", k},
                         {"t", t},
                         {"beta", s.betas[t]},
                         {"alpha", s.alphas[t]},
                         {"alpha_bar", s.alpha_bars[t]},
                         {"alpha_bar_prev", s.alpha_bars[s.timestep(k - 1)]},
                         {"sigma", s.sigma(k)}});
    }
    return {{"T", s.T},
            {"T_prime", s.steps()},
            {"t0", s.t0},
            {"beta_start", s.beta.start},
            {"beta_end", s.beta.end},
            {"sigma_mode", to_string(s.sigma_mode)},
            {"steps", steps}};
}

Tensor q_sample(const Tensor& x0, std::size_t t, const Tensor& eps, const Schedule& s)
{
    check_same_shape(x0, eps, "q_sample");
    const double ab = s.alpha_bar(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    Tensor out(x0.shape(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

NoisePredictor toy_predictor(Tensor mean, double scale, const Schedule& s)
{
    if (!(scale >= 0.0) || !std::isfinite(scale)) fail(ErrorKind::config, "toy predictor scale must be >= 0");
    return [mean = std::move(mean), scale, alpha_bars = s.alpha_bars](const Tensor& x_t, std::size_t t) {
        check_same_shape(x_t, mean, "toy predictor");
        if (t >= alpha_bars.size()) fail(ErrorKind::index, "timestep " + std::to_string(t) + " outside the schedule");
        const double ab = alpha_bars[t];
        const double root_ab = std::sqrt(ab);
        Tensor eps(x_t.shape(), 0.0);
        if (t == 0) return eps;
        if (scale == 0.0) {
            const double inv = 1.0 / std::sqrt(1.0 - ab);
            for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = (x_t[i] - root_ab * mean[i]) * inv;
        } else {
            const double coeff = std::sqrt(1.0 - ab) / (1.0 - ab * (1.0 - scale * scale));
            for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = coeff * (x_t[i] - root_ab * mean[i]);
        }
        return eps;
    };
}

Tensor denoised_from_eps(const Tensor& x_t, const Tensor& eps, std::size_t t, const Schedule& s, DenoiseMode mode)
{
    check_same_shape(x_t, eps, "denoised estimate");
    const double ab = s.alpha_bar(t);
    const double denom_sq = mode == DenoiseMode::standard ? ab : s.alpha(t);
    if (!(denom_sq > 0.0)) fail(ErrorKind::schedule, "denoised estimate needs a positive alpha at t=" + std::to_string(t));
    const double denom = std::sqrt(denom_sq);
    const double noise = std::sqrt(1.0 - ab);
    Tensor out(x_t.shape(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - noise * eps[i]) / denom;
    return out;
}

Tensor denoised_estimate(const Tensor& x_t, std::size_t t, const NoisePredictor& predictor, const Schedule& s,
                         DenoiseMode mode)
{
    const Tensor eps = predictor(x_t, t);
    check_finite(eps, "noise predictor");
    return denoised_from_eps(x_t, eps, t, s, mode);
}

// ---- inversion -------------------------------------------------------------

Tensor ddim_invert(const Tensor& x0, const NoisePredictor& predictor, const Schedule& s, std::size_t t_stop,
                   const InvertOptions& opts)
{
    if (t_stop > s.steps()) {
        fail(ErrorKind::config, "inversion target " + std::to_string(t_stop) + " exceeds " +
                                    std::to_string(s.steps()) + " respaced steps");
    }
    Tensor x = x0;
    for (std::size_t k = 1; k <= t_stop; ++k) {
        const std::size_t t = s.timestep(k);
        const std::size_t t_prev = s.timestep(k - 1);
        const double ab = s.alpha_bars[t];
        const double ab_prev = s.alpha_bars[t_prev];
        const double ratio = std::sqrt(ab / ab_prev);
        const double noise_prev = std::sqrt(1.0 - ab_prev);
        const double noise = std::sqrt(1.0 - ab);
        const auto advance = [&](const Tensor& eps) {
            check_same_shape(x, eps, "noise predictor");
            check_finite(eps, "noise predictor");
            Tensor next(x.shape(), 0.0);
            for (std::size_t i = 0; i < next.size(); ++i) next[i] = ratio * (x[i] - noise_prev * eps[i]) + noise * eps[i];
            return next;
        };
        Tensor guess = advance(predictor(x, t));
        for (std::size_t r = 0; r < opts.refine; ++r) {
            Tensor refined = advance(predictor(guess, t));
            double change = 0.0;
            for (std::size_t i = 0; i < refined.size(); ++i) change = std::max(change, std::abs(refined[i] - guess[i]));
            const double scale = std::max(1.0, max_abs(refined.values()));
            guess = std::move(refined);
            if (change <= opts.tolerance * scale) break;
        }
        x = std::move(guess);
    }
    return x;
}

// ---- guided sampling -------------------------------------------------------

void GuidanceConfig::validate() const
{
    weights.validate();
    if (!(eta > 0.0) || !std::isfinite(eta)) fail(ErrorKind::config, "guidance step scale eta must be > 0");
}

StepResult guided_step(const Tensor& x_t, std::size_t k, const NoisePredictor& predictor, const Schedule& s,
                       const GuidanceConfig& cfg, const GuidanceObjective* objective, Rng& rng)
{
    cfg.validate();
    if (k == 0 || k > s.steps()) {
        fail(ErrorKind::index, "respaced step " + std::to_string(k) + " outside 1.." + std::to_string(s.steps()));
    }
    const std::size_t t = s.timestep(k);
    const double ab_prev = s.alpha_bars[s.timestep(k - 1)];
    const Tensor eps = predictor(x_t, t);
    check_same_shape(x_t, eps, "noise predictor");
    check_finite(eps, "noise predictor");

    StepResult r;
    r.x0_hat = denoised_from_eps(x_t, eps, t, s, cfg.denoise);
    r.x0_guided = r.x0_hat;
    if (objective != nullptr) {
        const auto ev = objective->evaluate(r.x0_hat);
        check_same_shape(r.x0_hat, ev.grad, "guidance gradient");
        check_finite(ev.grad, "guidance gradient");
        r.loss = ev.value;
        r.guided = true;
        const double step = cfg.sign == GradientSign::descent ? -cfg.eta : cfg.eta;
        for (std::size_t i = 0; i < r.x0_guided.size(); ++i) r.x0_guided[i] += step * ev.grad[i];
    }

    const double sigma = s.sigma(k);
    const double root_prev = std::sqrt(ab_prev);
    const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma));
    r.x_prev = Tensor(x_t.shape(), 0.0);
    for (std::size_t i = 0; i < r.x_prev.size(); ++i) {
        r.x_prev[i] = root_prev * r.x0_guided[i] + dir * eps[i];
    }
    if (sigma > 0.0) {
        for (std::size_t i = 0; i < r.x_prev.size(); ++i) r.x_prev[i] += sigma * rng.normal();
    }
    check_finite(r.x_prev, "guided step");
    return r;
}

LoopResult sample_loop(const Tensor& x0, const NoisePredictor& predictor, const Schedule& s, const GuidanceConfig& cfg,
                       const GuidanceObjective* objective, const InvertOptions& invert)
{
    cfg.validate();
    LoopResult out;
    out.x_t0 = ddim_invert(x0, predictor, s, s.t0, invert);
    Rng rng(cfg.seed);
    Tensor x = out.x_t0;
    for (std::size_t k = s.t0; k >= 1; --k) {
        auto step = guided_step(x, k, predictor, s, cfg, objective, rng);
        out.trace.push_back(step.loss);
        x = std::move(step.x_prev);
    }
    out.image = std::move(x);
    return out;
}

} // namespace geostyle
