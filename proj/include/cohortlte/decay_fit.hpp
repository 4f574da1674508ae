#pragma once

#include <span>
#include <vector>

#include "cohortlte/estimators.hpp"

namespace cohortlte {

struct FitPoint {
    double t = 0.0;
    double y = 0.0;
    double variance = 1.0;
};

/// Smallest admissible beta * max(t). Below it exp(-beta t) is close to
/// linear over the observed window and gamma, alpha drift apart with
/// opposite signs.
inline constexpr double kMinDecaySpan = 0.5;

struct FitOptions {
    /// Ignore point variances and weight every point equally.
    bool unit_weights = false;
    /// Candidates with beta * max(t) below this are skipped.
    double min_decay_span = kMinDecaySpan;
};

/// f(t) = gamma + alpha * exp(-beta * t), beta >= 0.
struct DecayFit {
    double gamma = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double weighted_sse = 0.0;
    bool converged = false;
    /// All observations equal; the fit is the constant with alpha = beta = 0.
    bool degenerate = false;
    /// Best weighted SSE after the grid scan and after each refinement step.
    std::vector<double> sse_trace;
};

/// Lower and upper end of the beta grid and its size.
inline constexpr double kBetaMin = 1e-3;
inline constexpr double kBetaMax = 10.0;
inline constexpr int kBetaGridSize = 200;

/// Weighted least-squares fit of the three-parameter decay.
///
/// beta is profiled: for each candidate the model is linear in (gamma, alpha)
/// and solved in closed form. A log-spaced grid over [kBetaMin, kBetaMax]
/// locates the basin, and golden-section search refines beta to relative
/// width 1e-8. Candidates with beta * max(t) < options.min_decay_span are
/// skipped because the basis {1, exp(-beta t)} is then nearly collinear.
///
/// Throws UnfittableCurve for fewer than four points or a non-positive
/// variance.
DecayFit fit_exponential(std::span<const FitPoint> points, FitOptions options = {});

/// Fits the (t, value, variance) triples of a curve.
DecayFit fit_curve(const LearningCurve& curve, FitOptions options = {});

[[nodiscard]] double predict(const DecayFit& fit, double t);

/// Limit of the fitted curve as t grows without bound.
[[nodiscard]] inline double asymptote(const DecayFit& fit) { return fit.gamma; }

}  // namespace cohortlte
