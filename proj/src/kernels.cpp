#include "geostyle/detail/kernels.hpp"

#include "geostyle/error.hpp"
#include "geostyle/preshape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace geostyle::detail {

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a)
{
    return std::sqrt(dot(a, a));
}

namespace {

void center_row(std::span<double> row)
{
    const double k = static_cast<double>(row.size());
    double sum = 0.0;
    for (double v : row) sum += v;
    const double mean = sum / k;
    for (double& v : row) v -= mean;
    // second pass removes the rounding residue of large offsets
    double residual = 0.0;
    for (double v : row) residual += v;
    residual /= k;
    for (double& v : row) v -= residual;
}

void subtract_row_mean(std::span<double> row)
{
    double sum = 0.0;
    for (double v : row) sum += v;
    const double mean = sum / static_cast<double>(row.size());
    for (double& v : row) v -= mean;
}

} // namespace

Projection project_values(std::span<const double> values)
{
    if (values.empty() || values.size() % 2 != 0) {
        fail(ErrorKind::shape, "landmark reshape needs an even element count, got " + std::to_string(values.size()));
    }
    const std::size_t k = values.size() / 2;
    Projection p;
    p.unit.assign(values.begin(), values.end());
    center_row({p.unit.data(), k});
    center_row({p.unit.data() + k, k});
    p.radius = norm(p.unit);
    if (!(p.radius > kDegenerateNorm)) {
        fail(ErrorKind::degenerate_input, "input is constant per coordinate row (norm after centering " +
                                              std::to_string(p.radius) + ")");
    }
    for (double& v : p.unit) v /= p.radius;
    return p;
}

std::vector<double> project_backward(const Projection& p, std::span<const double> grad_unit)
{
    const std::size_t k = p.unit.size() / 2;
    const double radial = dot(p.unit, grad_unit);
    std::vector<double> g(p.unit.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (grad_unit[i] - p.unit[i] * radial) / p.radius;
    subtract_row_mean({g.data(), k});
    subtract_row_mean({g.data() + k, k});
    return g;
}

ArcCos clamped_acos(double c)
{
    ArcCos r;
    if (c >= 1.0) {
        r.clamped = true;
        r.angle = 0.0;
    } else if (c <= -1.0) {
        r.clamped = true;
        r.angle = std::numbers::pi;
    } else {
        r.angle = std::acos(c);
        r.derivative = -1.0 / std::sqrt(1.0 - c * c);
    }
    return r;
}

ArcCos unit_angle(std::span<const double> a, std::span<const double> b)
{
    const double c = dot(a, b);
    if (std::abs(c) <= 0.5) return clamped_acos(c);
    const double sign = c > 0 ? -1.0 : 1.0;
    double chord2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] + sign * b[i];
        chord2 += d * d;
    }
    const double half = 2.0 * std::asin(std::min(1.0, 0.5 * std::sqrt(chord2)));
    ArcCos r;
    r.angle = c > 0 ? half : std::numbers::pi - half;
    r.clamped = std::abs(c) >= 1.0 || half == 0.0;
    if (!r.clamped) r.derivative = -1.0 / std::sin(r.angle);
    return r;
}

CurveStep curve_step(std::span<const double> a, std::span<const double> b, double s)
{
    CurveStep step;
    step.s = s;
    step.c = dot(a, b);
    step.distance = unit_angle(a, b).angle;
    step.beyond_arc = s > step.distance;
    if (s == 0.0 || step.distance < kCoincident) {
        step.passthrough = true;
        step.coincident = step.distance < kCoincident;
        step.point.assign(a.begin(), a.end());
        return step;
    }
    if (step.distance > std::numbers::pi - kAntipodal) {
        fail(ErrorKind::degenerate_geodesic, "antipodal pre-shapes: the geodesic between them is not unique");
    }
    const double sd = std::sin(step.distance);
    const double cd = std::cos(step.distance);
    const double cs = std::cos(s);
    const double ss = std::sin(s);
    step.alpha = ss / sd;
    step.beta = cs - ss * cd / sd;
    step.point.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        step.point[i] = cs * a[i] + ss * (b[i] - a[i] * cd) / sd;
    }
    step.radius = norm(step.point);
    for (double& v : step.point) v /= step.radius;
    return step;
}

void curve_backward(const CurveStep& step, std::span<const double> a, std::span<const double> b,
                    std::span<const double> grad_point, std::span<double> grad_a, std::span<double> grad_b)
{
    if (step.passthrough) {
        for (std::size_t i = 0; i < grad_a.size(); ++i) grad_a[i] += grad_point[i];
        return;
    }
    const std::size_t n = a.size();
    const double radial = dot(step.point, grad_point);
    std::vector<double> gu(n);
    for (std::size_t i = 0; i < n; ++i) gu[i] = (grad_point[i] - step.point[i] * radial) / step.radius;

    // u = beta(c) a + alpha(c) b with c = <a, b>
    const double sd = std::sin(step.distance);
    const double sd3 = sd * sd * sd;
    const double ss = std::sin(step.s);
    const double dalpha = ss * step.c / sd3;
    const double dbeta = -ss / sd3;
    const double k = dot(gu, a) * dbeta + dot(gu, b) * dalpha;
    for (std::size_t i = 0; i < n; ++i) {
        grad_a[i] += step.beta * gu[i] + k * b[i];
        grad_b[i] += step.alpha * gu[i] + k * a[i];
    }
}

double surface_parameter(std::span<const double> weights, std::size_t j)
{
    double running = 0.0;
    for (std::size_t i = 0; i <= j; ++i) running += weights[i];
    if (running == 0.0) return 0.0;
    return weights[j] / running;
}

SurfaceTrace surface_forward(std::span<const std::vector<double>> taus, std::span<const double> weights)
{
    SurfaceTrace trace;
    trace.steps.reserve(taus.size() > 0 ? taus.size() - 1 : 0);
    for (std::size_t j = 1; j < taus.size(); ++j) {
        const std::vector<double>& mu = j == 1 ? taus[0] : trace.steps.back().point;
        try {
            trace.steps.push_back(curve_step(mu, taus[j], surface_parameter(weights, j)));
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(e.what()) + " (surface step at input " + std::to_string(j) + ")", j);
        }
    }
    return trace;
}

void surface_backward(const SurfaceTrace& trace, std::span<const std::vector<double>> taus,
                      std::span<const double> grad_result, std::vector<std::vector<double>>& grad_taus)
{
    std::vector<double> g(grad_result.begin(), grad_result.end());
    for (std::size_t j = taus.size() - 1; j >= 1; --j) {
        const CurveStep& step = trace.steps[j - 1];
        const std::vector<double>& mu = j == 1 ? taus[0] : trace.steps[j - 2].point;
        std::vector<double> g_mu(g.size(), 0.0);
        curve_backward(step, mu, taus[j], g, g_mu, grad_taus[j]);
        g = std::move(g_mu);
    }
    for (std::size_t i = 0; i < g.size(); ++i) grad_taus[0][i] += g[i];
}

Cosine cosine(std::span<const double> a, std::span<const double> b)
{
    Cosine c;
    c.norm_a = norm(a);
    c.norm_b = norm(b);
    c.value = dot(a, b) / (c.norm_a * c.norm_b);
    return c;
}

void cosine_backward_a(const Cosine& c, std::span<const double> a, std::span<const double> b, double upstream,
                       std::span<double> out)
{
    const double inv = 1.0 / (c.norm_a * c.norm_b);
    const double self = c.value / (c.norm_a * c.norm_a);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += upstream * (b[i] * inv - a[i] * self);
}

} // namespace geostyle::detail
