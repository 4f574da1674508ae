#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cohortlte/cohort_panel.hpp"
#include "cohortlte/decay_fit.hpp"
#include "cohortlte/estimators.hpp"

namespace cohortlte {

enum class MetricName : std::uint8_t { STE, LTE, dERLV };

std::string_view to_string(MetricName name);

struct MetricEstimate {
    MetricName name = MetricName::STE;
    Method method = Method::MC;
    double value = 0.0;
    double std = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool available = false;
    std::string diagnostic;
};

struct ErlvOptions {
    /// Last elapsed day T* of the summation, inclusive. Defaults to T.
    std::optional<int> horizon;
    /// First elapsed day t* of the summation.
    int offset = 0;
    FitOptions fit;
};

/// The four curves and fits behind a lifetime-value estimate, in the order
/// metric T, metric C, survival T, survival C.
struct ErlvModels {
    std::array<LearningCurve, 4> curves;
    std::array<std::optional<DecayFit>, 4> fits;
};

inline constexpr std::array<const char*, 4> kErlvModelNames = {"f_T", "f_C", "f_S_T", "f_S_C"};

/// Treatment minus control pooled user-day metric mean over calendar days
/// [0, window), active user-days only. The standard error treats the user as
/// the sampling unit (ratio-of-totals linearization per arm).
MetricEstimate estimate_ste(std::span<const UserRecord> records, int window = 7);

/// Weighted variant; weights[i] is the multiplicity of records[i].
MetricEstimate estimate_ste(std::span<const UserRecord> records,
                            std::span<const double> weights, int window);

/// Asymptote of the decay fitted to the multi-cohort effect curve.
MetricEstimate estimate_lte(const CohortPanel& metric_panel, FitOptions fit = {},
                            LearningCurve* curve_out = nullptr, DecayFit* fit_out = nullptr);

/// First-exposure effect T_0^0 - C_0^0 plus the asymptote of the decay fitted
/// to the CCD or DiD learning curve.
MetricEstimate baseline_lte(const CohortPanel& metric_panel, Method method, FitOptions fit = {},
                            LearningCurve* curve_out = nullptr, DecayFit* fit_out = nullptr);

/// Sum over t in [t*, T*] of f_T(t) f_S_T(t) - f_C(t) f_S_C(t), with all four
/// curves from multi-cohort arm-level estimates. Survival predictions are
/// clamped to [0, 1].
MetricEstimate estimate_delta_erlv(const CohortPanel& metric_panel,
                                   const CohortPanel& presence_panel, ErlvOptions options = {},
                                   ErlvModels* models_out = nullptr);

/// Same construction from the t0 = 0 cohorts only.
MetricEstimate baseline_delta_erlv(const CohortPanel& metric_panel,
                                   const CohortPanel& presence_panel, Method method,
                                   ErlvOptions options = {}, ErlvModels* models_out = nullptr);
MetricEstimate baseline_delta_erlv(std::span<const UserRecord> records, Method method,
                                   ErlvOptions options = {});

/// Combines four fits into the truncated lifetime-value difference.
double erlv_sum(const DecayFit& metric_t, const DecayFit& metric_c, const DecayFit& survival_t,
                const DecayFit& survival_c, int first_day, int last_day);

struct AnalysisOptions {
    int window = 7;
    ErlvOptions erlv;
    std::vector<Method> methods{Method::CCD, Method::DiD, Method::MC};
};

struct MethodResult {
    MetricEstimate lte;
    MetricEstimate derlv;
    LearningCurve learning;
    LearningCurve lte_curve;
    std::optional<DecayFit> lte_fit;
    ErlvModels erlv_models;
};

struct AnalysisReport {
    int horizon = 0;
    int erlv_horizon = 0;
    int erlv_offset = 0;
    int window = 7;
    MetricEstimate ste;
    std::map<Method, MethodResult> methods;

    bool bootstrapped = false;
    int replicates = 0;
    int failed_replicates = 0;
    bool unstable = false;
    std::uint64_t seed = 0;
    std::vector<std::string> diagnostics;

    /// True when every requested metric has a point estimate.
    [[nodiscard]] bool complete() const;
};

/// Point estimates of every requested method, without resampling.
AnalysisReport analyze(std::span<const UserRecord> records, const AnalysisOptions& options = {});

inline constexpr double kMaxFailedReplicateShare = 0.2;

/// Point estimates plus user-level bootstrap uncertainty. Users are resampled
/// with replacement within each arm, keeping their entry days; replicate r
/// draws from substream (seed, r). std is the replicate standard deviation and
/// ci95 the 2.5% / 97.5% percentile interval, widened if needed to contain
/// the point value. More than 20% failed replicates marks the report unstable.
AnalysisReport bootstrap_report(std::span<const UserRecord> records, int replicates,
                                std::uint64_t seed, const AnalysisOptions& options = {},
                                unsigned jobs = 1);

}  // namespace cohortlte
