#include "cohortlte/decay_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cohortlte {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRelativeWidth = 1e-8;
constexpr double kConvergedImprovement = 1e-10;

struct Weighted {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> w;
    double max_t = 0.0;
    double sst = 0.0;
    double min_span = kMinDecaySpan;
};

struct Profile {
    double gamma = 0.0;
    double alpha = 0.0;
    double sse = kInf;
};

/// Closed-form weighted linear fit of y on {1, exp(-beta t)}.
Profile profile(const Weighted& data, double beta) {
    if (beta * data.max_t < data.min_span) return {};
    const std::size_t n = data.t.size();
    std::vector<double> x(n);
    double sw = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::exp(-beta * data.t[i]);
        sw += data.w[i];
        sx += data.w[i] * x[i];
        sy += data.w[i] * data.y[i];
    }
    const double xbar = sx / sw;
    const double ybar = sy / sw;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += data.w[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += data.w[i] * (x[i] - xbar) * (data.y[i] - ybar);
    }
    if (!(sxx > 0.0)) return {};
    Profile p;
    p.alpha = sxy / sxx;
    p.gamma = ybar - p.alpha * xbar;
    p.sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = data.y[i] - p.gamma - p.alpha * x[i];
        p.sse += data.w[i] * r * r;
    }
    if (!std::isfinite(p.sse)) return {};
    return p;
}

double grid_beta(int i) {
    const double span = std::log10(kBetaMax / kBetaMin);
    return kBetaMin * std::pow(10.0, span * i / (kBetaGridSize - 1));
}

}  // namespace

DecayFit fit_exponential(std::span<const FitPoint> points, FitOptions options) {
    if (points.size() < kMinFitPoints) {
        throw UnfittableCurve("decay fit needs at least " + std::to_string(kMinFitPoints) +
                              " points, got " + std::to_string(points.size()));
    }
    Weighted data;
    data.min_span = options.min_decay_span;
    for (const auto& p : points) {
        if (!options.unit_weights && !(p.variance > 0.0)) {
            throw UnfittableCurve("decay fit needs positive variances");
        }
        if (!std::isfinite(p.y) || !std::isfinite(p.t) || p.t < 0.0) {
            throw UnfittableCurve("decay fit needs finite observations at t >= 0");
        }
        data.t.push_back(p.t);
        data.y.push_back(p.y);
        data.w.push_back(options.unit_weights ? 1.0 : 1.0 / p.variance);
        data.max_t = std::max(data.max_t, p.t);
    }

    DecayFit fit;
    const bool constant = std::all_of(data.y.begin(), data.y.end(),
                                      [&](double v) { return v == data.y.front(); });
    if (constant) {
        fit.gamma = data.y.front();
        fit.converged = true;
        fit.degenerate = true;
        fit.sse_trace = {0.0};
        return fit;
    }
    {
        double sw = 0.0;
        double sy = 0.0;
        for (std::size_t i = 0; i < data.y.size(); ++i) {
            sw += data.w[i];
            sy += data.w[i] * data.y[i];
        }
        for (std::size_t i = 0; i < data.y.size(); ++i) {
            const double d = data.y[i] - sy / sw;
            data.sst += data.w[i] * d * d;
        }
    }

    int best_i = -1;
    Profile best;
    for (int i = 0; i < kBetaGridSize; ++i) {
        const Profile p = profile(data, grid_beta(i));
        if (p.sse < best.sse) {
            best = p;
            best_i = i;
        }
    }
    if (best_i < 0) {
        throw UnfittableCurve("no admissible decay rate: time span too short");
    }
    double best_beta = grid_beta(best_i);
    fit.sse_trace.push_back(best.sse);

    // golden-section refinement between the grid neighbours
    double lo = grid_beta(std::max(best_i - 1, 0));
    double hi = grid_beta(std::min(best_i + 1, kBetaGridSize - 1));
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    Profile p1 = profile(data, x1);
    Profile p2 = profile(data, x2);
    double previous = best.sse;
    double latest = best.sse;
    while (hi - lo > kRelativeWidth * 0.5 * (hi + lo)) {
        if (p1.sse <= p2.sse) {
            hi = x2;
            x2 = x1;
            p2 = p1;
            x1 = hi - inv_phi * (hi - lo);
            p1 = profile(data, x1);
        } else {
            lo = x1;
            x1 = x2;
            p1 = p2;
            x2 = lo + inv_phi * (hi - lo);
            p2 = profile(data, x2);
        }
        const bool first_better = p1.sse <= p2.sse;
        const Profile& cand = first_better ? p1 : p2;
        if (cand.sse < best.sse) {
            best = cand;
            best_beta = first_better ? x1 : x2;
        }
        previous = latest;
        latest = best.sse;
        fit.sse_trace.push_back(best.sse);
    }

    fit.gamma = best.gamma;
    fit.alpha = best.alpha;
    fit.beta = best_beta;
    fit.weighted_sse = best.sse;
    const double scale = std::max(previous, 1e-12 * data.sst);
    const double improvement = scale > 0.0 ? (previous - latest) / scale : 0.0;
    const bool at_lower_edge = best_beta <= kBetaMin * (1.0 + 1e-6);
    fit.converged = improvement < kConvergedImprovement && !at_lower_edge;
    return fit;
}

DecayFit fit_curve(const LearningCurve& curve, FitOptions options) {
    std::vector<FitPoint> points;
    points.reserve(curve.points.size());
    for (const auto& p : curve.points) {
        points.push_back(FitPoint{static_cast<double>(p.t), p.estimate.value, p.estimate.variance});
    }
    return fit_exponential(points, options);
}

double predict(const DecayFit& fit, double t) {
    if (fit.degenerate || fit.alpha == 0.0) return fit.gamma;
    return fit.gamma + fit.alpha * std::exp(-fit.beta * t);
}

}  // namespace cohortlte
