#pragma once

// Forward kernels shared by the loss values and their hand-written reverse
// passes. Both paths call the same arithmetic so that a gradient evaluation
// reports exactly the value the plain loss returns.

#include <cstddef>
#include <span>
#include <vector>

namespace geostyle::detail {

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

struct Projection {
    std::vector<double> unit;  // centred, unit norm
    double radius = 0.0;       // norm after centering
};

/// Split-half centering followed by normalisation. Throws degenerate_input
/// when the centred norm is <= 1e-12.
Projection project_values(std::span<const double> values);

/// Pull a cotangent on the unit output back to the raw values.
std::vector<double> project_backward(const Projection& p, std::span<const double> grad_unit);

/// arccos(clamp(c)), with clamped set when |c| >= 1.
struct ArcCos {
    double angle = 0.0;
    double derivative = 0.0;  // d angle / d c, zero at the clamp
    bool clamped = false;
};
ArcCos clamped_acos(double c);

/// Angle between unit vectors a and b. Near 0 and pi the chord length is used
/// instead of arccos, which loses half the digits there.
ArcCos unit_angle(std::span<const double> a, std::span<const double> b);

/// One geodesic curve evaluation with everything the reverse pass needs.
struct CurveStep {
    std::vector<double> point;
    double c = 0.0;        // <a, b>
    double distance = 0.0; // arccos(c)
    double s = 0.0;
    double alpha = 0.0;    // coefficient on b
    double beta = 0.0;     // coefficient on a
    double radius = 0.0;   // norm before renormalisation
    bool passthrough = false; // s == 0 or coincident inputs: point == a
    bool coincident = false;
    bool beyond_arc = false;
};

inline constexpr double kCoincident = 1e-9;
inline constexpr double kAntipodal = 1e-9;

/// Throws degenerate_geodesic for antipodal endpoints.
CurveStep curve_step(std::span<const double> a, std::span<const double> b, double s);

/// Accumulates the pull-back of grad_point into grad_a and grad_b.
void curve_backward(const CurveStep& step, std::span<const double> a, std::span<const double> b,
                    std::span<const double> grad_point, std::span<double> grad_a, std::span<double> grad_b);

/// The chain of curve steps that builds one surface point.
struct SurfaceTrace {
    std::vector<CurveStep> steps; // steps[j-1] moves mu_{j} to mu_{j+1}; empty when n == 1
    const std::vector<double>& result(std::span<const std::vector<double>> taus) const
    {
        return steps.empty() ? taus[0] : steps.back().point;
    }
};

/// Curve parameter for step j (0-based, j >= 1): w_j / sum_{i<=j} w_i, or 0
/// while the running sum is still zero.
double surface_parameter(std::span<const double> weights, std::size_t j);

SurfaceTrace surface_forward(std::span<const std::vector<double>> taus, std::span<const double> weights);

/// Accumulates gradients for every tau given a cotangent on the surface point.
void surface_backward(const SurfaceTrace& trace, std::span<const std::vector<double>> taus,
                      std::span<const double> grad_result, std::vector<std::vector<double>>& grad_taus);

/// Cosine of two vectors plus the partials needed to pull back through it.
struct Cosine {
    double value = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
};
Cosine cosine(std::span<const double> a, std::span<const double> b);
/// d cos / d a, scaled by upstream and accumulated into out.
void cosine_backward_a(const Cosine& c, std::span<const double> a, std::span<const double> b, double upstream,
                       std::span<double> out);

} // namespace geostyle::detail
