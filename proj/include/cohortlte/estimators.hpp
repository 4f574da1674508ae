#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cohortlte/cohort_panel.hpp"

namespace cohortlte {

/// What a per-cohort difference compares.
///   Learning:     T_k^{t+k} - T_{t+k}^{t+k}   (exposed k days vs first-day users)
///   Effect:       T_k^{t+k} - C_k^{t+k}       (first-day effect plus learning)
///   ArmTreatment: T_k^{t+k}
///   ArmControl:   C_k^{t+k}
enum class DiffMode { Learning, Effect, ArmTreatment, ArmControl };

struct Estimate {
    double value = 0.0;
    double variance = 0.0;
    /// Cohort offsets k that entered the estimate.
    std::vector<int> k_used;
    /// Normalized inverse-variance weights, parallel to k_used. A single
    /// unweighted difference carries weight 1.
    std::vector<double> weights;

    [[nodiscard]] double std_error() const;
    [[nodiscard]] double ci_lo() const;
    [[nodiscard]] double ci_hi() const;
};

struct CurvePoint {
    int t = 0;
    Estimate estimate;
};

struct LearningCurve {
    DiffMode mode = DiffMode::Learning;
    Method method = Method::MC;
    /// Elapsed days, strictly increasing.
    std::vector<CurvePoint> points;
    /// Enough points (at least 4) for a three-parameter decay fit.
    bool fittable = false;

    /// Mean over points of the 95% interval width 2 * 1.96 * sqrt(variance).
    [[nodiscard]] double mean_ci_width() const;
};

inline constexpr std::size_t kMinFitPoints = 4;

/// Covariance between two cell means. Distinct cohorts are disjoint user sets
/// and contribute zero; a cell with itself gives its variance; a cohort
/// against its own entry-day cell uses the paired user-level estimate.
double cell_covariance(const CohortCell& a, const CohortCell& b);

/// T_0^t - T_t^t. nullopt when either cell is unusable.
std::optional<Estimate> ccd_learning(const CohortPanel& panel, int t);

/// (T_0^t - T_0^0) - (C_0^t - C_0^0), with within-cohort covariances removed
/// from the variance.
std::optional<Estimate> did_learning(const CohortPanel& panel, int t);

/// Single-offset difference. Throws std::out_of_range when t + k >= T;
/// nullopt when a required cell is unusable.
std::optional<Estimate> delta_k(const CohortPanel& panel, int t, int k, DiffMode mode);

/// Inverse-variance weighted combination of delta_k(t) over k = 0 .. T-1-t.
/// `max_k`, when set, restricts the offsets to k <= max_k.
std::optional<Estimate> multicohort_estimate(const CohortPanel& panel, int t, DiffMode mode,
                                             std::optional<int> max_k = std::nullopt);

LearningCurve multicohort_series(const CohortPanel& panel, DiffMode mode);
LearningCurve ccd_series(const CohortPanel& panel);
LearningCurve did_series(const CohortPanel& panel);

/// Arm-level curve of the t0 = 0 cohort only, as used by the baseline
/// lifetime-value extensions.
LearningCurve first_cohort_series(const CohortPanel& panel, Arm arm, Method method);

std::string_view to_string(DiffMode mode);

void write_curve_csv(std::ostream& out,
                     std::span<const std::pair<std::string, const LearningCurve*>> curves);

}  // namespace cohortlte
