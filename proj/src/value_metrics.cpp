#include "cohortlte/value_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cohortlte/parallel.hpp"
#include "cohortlte/rng.hpp"

namespace cohortlte {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MetricEstimate unavailable(MetricName name, Method method, std::string why) {
    MetricEstimate m;
    m.name = name;
    m.method = method;
    m.value = kNaN;
    m.ci_lo = kNaN;
    m.ci_hi = kNaN;
    m.diagnostic = std::move(why);
    return m;
}

MetricEstimate point(MetricName name, Method method, double value, double std = 0.0) {
    MetricEstimate m;
    m.name = name;
    m.method = method;
    m.value = value;
    m.std = std;
    m.ci_lo = value - kZ95 * std;
    m.ci_hi = value + kZ95 * std;
    m.available = std::isfinite(value);
    return m;
}

double clamp_unit(double s) { return std::clamp(s, 0.0, 1.0); }

/// Fits one curve into `slot`; returns a diagnostic on failure.
std::optional<std::string> fit_into(const LearningCurve& curve, const FitOptions& options,
                                    std::optional<DecayFit>& slot, const char* what) {
    if (!curve.fittable) {
        return std::string(what) + " curve has " + std::to_string(curve.points.size()) +
               " usable points, need " + std::to_string(kMinFitPoints);
    }
    try {
        slot = fit_curve(curve, options);
    } catch (const UnfittableCurve& e) {
        return std::string(what) + ": " + e.what();
    }
    return std::nullopt;
}

MetricEstimate erlv_from_curves(ErlvModels models, Method method, const ErlvOptions& options,
                                int panel_horizon, ErlvModels* models_out) {
    std::string failures;
    for (std::size_t i = 0; i < 4; ++i) {
        if (auto why = fit_into(models.curves[i], options.fit, models.fits[i],
                                kErlvModelNames[i])) {
            if (!failures.empty()) failures += "; ";
            failures += *why;
        }
    }
    MetricEstimate out;
    if (!failures.empty()) {
        out = unavailable(MetricName::dERLV, method, failures);
    } else {
        const int last = options.horizon.value_or(panel_horizon);
        out = point(MetricName::dERLV, method,
                    erlv_sum(*models.fits[0], *models.fits[1], *models.fits[2], *models.fits[3],
                             options.offset, last));
    }
    if (models_out) *models_out = std::move(models);
    return out;
}

void check_panels(const CohortPanel& metric_panel, const CohortPanel& presence_panel) {
    if (metric_panel.mode() != PanelMode::Metric || presence_panel.mode() != PanelMode::Presence) {
        throw std::invalid_argument("lifetime value needs a metric panel and a presence panel");
    }
    if (metric_panel.horizon() != presence_panel.horizon()) {
        throw std::invalid_argument("metric and presence panels differ in horizon");
    }
}

}  // namespace

std::string_view to_string(MetricName name) {
    switch (name) {
        case MetricName::STE: return "STE";
        case MetricName::LTE: return "LTE";
        case MetricName::dERLV: return "dERLV";
    }
    return "?";
}

MetricEstimate estimate_ste(std::span<const UserRecord> records, int window) {
    return estimate_ste(records, {}, window);
}

MetricEstimate estimate_ste(std::span<const UserRecord> records, std::span<const double> weights,
                            int window) {
    if (window < 1) throw std::invalid_argument("STE window must be at least one day");

    struct ArmTotals {
        double users = 0.0;
        double metric = 0.0;
        double days = 0.0;
        double resid_sq = 0.0;
    };
    std::array<ArmTotals, 2> arms{};
    auto user_totals = [&](const UserRecord& rec) {
        double y = 0.0;
        double n = 0.0;
        for (const auto& obs : rec.observations) {
            if (obs.active && obs.day < window) {
                y += obs.metric;
                n += 1.0;
            }
        }
        return std::pair{y, n};
    };
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w == 0.0) continue;
        const auto [y, n] = user_totals(records[i]);
        if (n == 0.0) continue;
        auto& a = arms[static_cast<std::size_t>(records[i].arm)];
        a.users += w;
        a.metric += w * y;
        a.days += w * n;
    }
    for (const auto& a : arms) {
        if (a.days == 0.0) {
            return unavailable(MetricName::STE, Method::MC,
                               "an arm has no active user-days in the first " +
                                   std::to_string(window) + " days");
        }
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w == 0.0) continue;
        const auto [y, n] = user_totals(records[i]);
        if (n == 0.0) continue;
        auto& a = arms[static_cast<std::size_t>(records[i].arm)];
        const double r = y - (a.metric / a.days) * n;
        a.resid_sq += w * r * r;
    }

    const auto& tr = arms[static_cast<std::size_t>(Arm::Treatment)];
    const auto& ct = arms[static_cast<std::size_t>(Arm::Control)];
    const double value = tr.metric / tr.days - ct.metric / ct.days;
    if (tr.users < 2.0 || ct.users < 2.0) {
        auto m = point(MetricName::STE, Method::MC, value);
        m.diagnostic = "fewer than two users in an arm; standard error not estimable";
        return m;
    }
    auto arm_var = [](const ArmTotals& a) {
        return a.resid_sq / (a.days * a.days) * a.users / (a.users - 1.0);
    };
    return point(MetricName::STE, Method::MC, value, std::sqrt(arm_var(tr) + arm_var(ct)));
}

MetricEstimate estimate_lte(const CohortPanel& metric_panel, FitOptions fit,
                            LearningCurve* curve_out, DecayFit* fit_out) {
    if (metric_panel.mode() != PanelMode::Metric) {
        throw std::invalid_argument("LTE needs a metric-mode panel");
    }
    LearningCurve curve = multicohort_series(metric_panel, DiffMode::Effect);
    std::optional<DecayFit> result;
    const auto why = fit_into(curve, fit, result, "effect");
    if (curve_out) *curve_out = std::move(curve);
    if (why) return unavailable(MetricName::LTE, Method::MC, *why);
    if (fit_out) *fit_out = *result;
    auto m = point(MetricName::LTE, Method::MC, asymptote(*result));
    if (!result->converged) m.diagnostic = "effect fit did not converge";
    return m;
}

MetricEstimate baseline_lte(const CohortPanel& metric_panel, Method method, FitOptions fit,
                            LearningCurve* curve_out, DecayFit* fit_out) {
    if (method == Method::MC) return estimate_lte(metric_panel, fit, curve_out, fit_out);
    if (metric_panel.mode() != PanelMode::Metric) {
        throw std::invalid_argument("LTE needs a metric-mode panel");
    }
    LearningCurve curve =
        method == Method::CCD ? ccd_series(metric_panel) : did_series(metric_panel);
    const auto first_day = delta_k(metric_panel, 0, 0, DiffMode::Effect);
    std::optional<DecayFit> result;
    const auto why = fit_into(curve, fit, result, "learning");
    if (curve_out) *curve_out = std::move(curve);
    if (!first_day) {
        return unavailable(MetricName::LTE, method, "first-exposure cohort cells unusable");
    }
    if (why) return unavailable(MetricName::LTE, method, *why);
    if (fit_out) *fit_out = *result;
    auto m = point(MetricName::LTE, method, first_day->value + asymptote(*result));
    if (!result->converged) m.diagnostic = "learning fit did not converge";
    return m;
}

double erlv_sum(const DecayFit& metric_t, const DecayFit& metric_c, const DecayFit& survival_t,
                const DecayFit& survival_c, int first_day, int last_day) {
    double total = 0.0;
    for (int t = first_day; t <= last_day; ++t) {
        const double x = static_cast<double>(t);
        total += predict(metric_t, x) * clamp_unit(predict(survival_t, x)) -
                 predict(metric_c, x) * clamp_unit(predict(survival_c, x));
    }
    return total;
}

MetricEstimate estimate_delta_erlv(const CohortPanel& metric_panel,
                                   const CohortPanel& presence_panel, ErlvOptions options,
                                   ErlvModels* models_out) {
    check_panels(metric_panel, presence_panel);
    ErlvModels models;
    models.curves[0] = multicohort_series(metric_panel, DiffMode::ArmTreatment);
    models.curves[1] = multicohort_series(metric_panel, DiffMode::ArmControl);
    models.curves[2] = multicohort_series(presence_panel, DiffMode::ArmTreatment);
    models.curves[3] = multicohort_series(presence_panel, DiffMode::ArmControl);
    return erlv_from_curves(std::move(models), Method::MC, options, metric_panel.horizon(),
                            models_out);
}

MetricEstimate baseline_delta_erlv(const CohortPanel& metric_panel,
                                   const CohortPanel& presence_panel, Method method,
                                   ErlvOptions options, ErlvModels* models_out) {
    check_panels(metric_panel, presence_panel);
    ErlvModels models;
    models.curves[0] = first_cohort_series(metric_panel, Arm::Treatment, method);
    models.curves[1] = first_cohort_series(metric_panel, Arm::Control, method);
    models.curves[2] = first_cohort_series(presence_panel, Arm::Treatment, method);
    models.curves[3] = first_cohort_series(presence_panel, Arm::Control, method);
    return erlv_from_curves(std::move(models), method, options, metric_panel.horizon(),
                            models_out);
}

MetricEstimate baseline_delta_erlv(std::span<const UserRecord> records, Method method,
                                   ErlvOptions options) {
    const int horizon = infer_horizon(records);
    const auto metric = build_panel(records, horizon, PanelMode::Metric);
    const auto presence = build_panel(records, horizon, PanelMode::Presence);
    return baseline_delta_erlv(metric, presence, method, options);
}

bool AnalysisReport::complete() const {
    if (!ste.available) return false;
    for (const auto& [method, r] : methods) {
        if (!r.lte.available || !r.derlv.available) return false;
    }
    return true;
}

namespace {

AnalysisReport analyze_panels(std::span<const UserRecord> records, std::span<const double> weights,
                              const CohortPanel& metric, const CohortPanel& presence,
                              const AnalysisOptions& options) {
    AnalysisReport report;
    report.horizon = metric.horizon();
    report.erlv_horizon = options.erlv.horizon.value_or(metric.horizon());
    report.erlv_offset = options.erlv.offset;
    report.window = options.window;
    report.ste = estimate_ste(records, weights, options.window);
    if (!report.ste.available) report.diagnostics.push_back("STE: " + report.ste.diagnostic);

    for (Method method : options.methods) {
        MethodResult r;
        DecayFit lte_fit;
        switch (method) {
            case Method::MC:
                r.learning = multicohort_series(metric, DiffMode::Learning);
                r.lte = estimate_lte(metric, options.erlv.fit, &r.lte_curve, &lte_fit);
                r.derlv = estimate_delta_erlv(metric, presence, options.erlv, &r.erlv_models);
                break;
            case Method::CCD:
            case Method::DiD:
                r.lte = baseline_lte(metric, method, options.erlv.fit, &r.lte_curve, &lte_fit);
                r.learning = r.lte_curve;
                r.derlv = baseline_delta_erlv(metric, presence, method, options.erlv,
                                              &r.erlv_models);
                break;
        }
        if (r.lte.available) r.lte_fit = lte_fit;
        const std::string tag(to_string(method));
        if (!r.lte.diagnostic.empty()) report.diagnostics.push_back(tag + " LTE: " + r.lte.diagnostic);
        if (!r.derlv.diagnostic.empty()) {
            report.diagnostics.push_back(tag + " dERLV: " + r.derlv.diagnostic);
        }
        report.methods.emplace(method, std::move(r));
    }
    return report;
}

AnalysisReport analyze_weighted(std::span<const UserRecord> records,
                                std::span<const double> weights, int horizon,
                                const AnalysisOptions& options) {
    const auto metric = build_weighted_panel(records, weights, horizon, PanelMode::Metric);
    const auto presence = build_weighted_panel(records, weights, horizon, PanelMode::Presence);
    return analyze_panels(records, weights, metric, presence, options);
}

double quantile_sorted(const std::vector<double>& v, double p) {
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void apply_bootstrap(MetricEstimate& m, std::vector<double> draws) {
    if (!m.available || draws.size() < 2) return;
    double mean = 0.0;
    for (double d : draws) mean += d;
    mean /= static_cast<double>(draws.size());
    double ss = 0.0;
    for (double d : draws) ss += (d - mean) * (d - mean);
    m.std = std::sqrt(ss / static_cast<double>(draws.size() - 1));
    std::sort(draws.begin(), draws.end());
    m.ci_lo = std::min(quantile_sorted(draws, 0.025), m.value);
    m.ci_hi = std::max(quantile_sorted(draws, 0.975), m.value);
}

}  // namespace

AnalysisReport analyze(std::span<const UserRecord> records, const AnalysisOptions& options) {
    const int horizon = infer_horizon(records);
    const auto metric = build_panel(records, horizon, PanelMode::Metric);
    const auto presence = build_panel(records, horizon, PanelMode::Presence);
    if (options.window > horizon) {
        throw InputError("STE window of " + std::to_string(options.window) +
                         " days exceeds the experiment duration of " + std::to_string(horizon));
    }
    return analyze_panels(records, {}, metric, presence, options);
}

AnalysisReport bootstrap_report(std::span<const UserRecord> records, int replicates,
                                std::uint64_t seed, const AnalysisOptions& options,
                                unsigned jobs) {
    if (replicates < 50) throw std::invalid_argument("bootstrap needs at least 50 replicates");
    AnalysisReport report = analyze(records, options);
    const int horizon = report.horizon;

    std::array<std::vector<std::size_t>, 2> members;
    for (std::size_t i = 0; i < records.size(); ++i) {
        members[static_cast<std::size_t>(records[i].arm)].push_back(i);
    }

    // slot 0: STE; then (LTE, dERLV) per requested method
    const std::size_t n_values = 1 + 2 * options.methods.size();
    std::vector<std::vector<double>> values(static_cast<std::size_t>(replicates));
    parallel_for(static_cast<std::size_t>(replicates), jobs, [&](std::size_t r) {
        Engine rng = make_engine(seed, {stream::kBootstrap, r});
        std::vector<double> weights(records.size(), 0.0);
        for (const auto& arm : members) {
            if (arm.empty()) continue;
            std::uniform_int_distribution<std::size_t> pick(0, arm.size() - 1);
            for (std::size_t j = 0; j < arm.size(); ++j) weights[arm[pick(rng)]] += 1.0;
        }
        const auto rep = analyze_weighted(records, weights, horizon, options);
        std::vector<double> v;
        v.reserve(n_values);
        v.push_back(rep.ste.available ? rep.ste.value : kNaN);
        for (Method m : options.methods) {
            const auto& mr = rep.methods.at(m);
            v.push_back(mr.lte.available ? mr.lte.value : kNaN);
            v.push_back(mr.derlv.available ? mr.derlv.value : kNaN);
        }
        values[r] = std::move(v);
    });

    std::vector<std::vector<double>> draws(n_values);
    int failed = 0;
    for (const auto& v : values) {
        if (std::any_of(v.begin(), v.end(), [](double x) { return !std::isfinite(x); })) {
            ++failed;
            continue;
        }
        for (std::size_t j = 0; j < n_values; ++j) draws[j].push_back(v[j]);
    }

    report.bootstrapped = true;
    report.replicates = replicates;
    report.failed_replicates = failed;
    report.seed = seed;
    report.unstable = failed > kMaxFailedReplicateShare * replicates;
    if (report.unstable) {
        report.diagnostics.push_back(std::to_string(failed) + " of " + std::to_string(replicates) +
                                     " bootstrap replicates failed");
    }
    apply_bootstrap(report.ste, draws[0]);
    std::size_t slot = 1;
    for (Method m : options.methods) {
        auto& mr = report.methods.at(m);
        apply_bootstrap(mr.lte, draws[slot++]);
        apply_bootstrap(mr.derlv, draws[slot++]);
    }
    return report;
}

}  // namespace cohortlte
