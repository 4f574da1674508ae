#include "cohortlte/estimators.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "cohortlte/csv.hpp"

namespace cohortlte {

namespace {

double floored(double variance) { return variance > 0.0 ? variance : kVarianceFloor; }

Estimate single(double value, double variance, int k) {
    return Estimate{value, floored(variance), {k}, {1.0}};
}

/// a - b, with the covariance hook applied.
Estimate difference(const CohortCell& a, const CohortCell& b, int k) {
    const double var = a.var_of_mean + b.var_of_mean - 2.0 * cell_covariance(a, b);
    return single(a.mean - b.mean, var, k);
}

void require_day(const CohortPanel& panel, int t) {
    if (t < 0 || t >= panel.horizon()) {
        throw std::out_of_range("elapsed day " + std::to_string(t) + " outside [0, " +
                                std::to_string(panel.horizon()) + ")");
    }
}

}  // namespace

double Estimate::std_error() const { return std::sqrt(variance); }
double Estimate::ci_lo() const { return value - kZ95 * std_error(); }
double Estimate::ci_hi() const { return value + kZ95 * std_error(); }

double LearningCurve::mean_ci_width() const {
    if (points.empty()) return 0.0;
    double total = 0.0;
    for (const auto& p : points) total += 2.0 * kZ95 * p.estimate.std_error();
    return total / static_cast<double>(points.size());
}

double cell_covariance(const CohortCell& a, const CohortCell& b) {
    if (a.arm != b.arm || a.t0 != b.t0 || !a.usable || !b.usable) return 0.0;
    if (a.t == b.t) return a.var_of_mean;
    if (b.t == b.t0) return a.cov_with_entry;
    if (a.t == a.t0) return b.cov_with_entry;
    // two non-entry days of one cohort: not tracked
    return 0.0;
}

std::optional<Estimate> ccd_learning(const CohortPanel& panel, int t) {
    require_day(panel, t);
    const auto& exposed = panel.cell(Arm::Treatment, 0, t);
    const auto& fresh = panel.cell(Arm::Treatment, t, t);
    if (!exposed.usable || !fresh.usable) return std::nullopt;
    return difference(exposed, fresh, 0);
}

std::optional<Estimate> did_learning(const CohortPanel& panel, int t) {
    require_day(panel, t);
    const auto& tr_t = panel.cell(Arm::Treatment, 0, t);
    const auto& tr_0 = panel.cell(Arm::Treatment, 0, 0);
    const auto& ct_t = panel.cell(Arm::Control, 0, t);
    const auto& ct_0 = panel.cell(Arm::Control, 0, 0);
    if (!tr_t.usable || !tr_0.usable || !ct_t.usable || !ct_0.usable) return std::nullopt;
    const double value = (tr_t.mean - tr_0.mean) - (ct_t.mean - ct_0.mean);
    const double var = tr_t.var_of_mean + tr_0.var_of_mean - 2.0 * cell_covariance(tr_t, tr_0) +
                       ct_t.var_of_mean + ct_0.var_of_mean - 2.0 * cell_covariance(ct_t, ct_0);
    return single(value, var, 0);
}

std::optional<Estimate> delta_k(const CohortPanel& panel, int t, int k, DiffMode mode) {
    if (t < 0 || k < 0 || t + k >= panel.horizon()) {
        throw std::out_of_range("delta_k needs t + k < T (t = " + std::to_string(t) +
                                ", k = " + std::to_string(k) + ", T = " +
                                std::to_string(panel.horizon()) + ")");
    }
    const int day = t + k;
    switch (mode) {
        case DiffMode::Learning: {
            const auto& exposed = panel.cell(Arm::Treatment, k, day);
            const auto& fresh = panel.cell(Arm::Treatment, day, day);
            if (!exposed.usable || !fresh.usable) return std::nullopt;
            return difference(exposed, fresh, k);
        }
        case DiffMode::Effect: {
            const auto& tr = panel.cell(Arm::Treatment, k, day);
            const auto& ct = panel.cell(Arm::Control, k, day);
            if (!tr.usable || !ct.usable) return std::nullopt;
            return difference(tr, ct, k);
        }
        case DiffMode::ArmTreatment:
        case DiffMode::ArmControl: {
            const Arm arm = mode == DiffMode::ArmTreatment ? Arm::Treatment : Arm::Control;
            const auto& c = panel.cell(arm, k, day);
            if (!c.usable) return std::nullopt;
            return single(c.mean, c.var_of_mean, k);
        }
    }
    return std::nullopt;
}

std::optional<Estimate> multicohort_estimate(const CohortPanel& panel, int t, DiffMode mode,
                                             std::optional<int> max_k) {
    require_day(panel, t);
    int last_k = panel.horizon() - 1 - t;
    if (max_k) last_k = std::min(last_k, *max_k);

    std::vector<Estimate> parts;
    for (int k = 0; k <= last_k; ++k) {
        if (auto d = delta_k(panel, t, k, mode)) parts.push_back(std::move(*d));
    }
    if (parts.empty()) return std::nullopt;
    if (parts.size() == 1) return parts.front();

    double precision = 0.0;
    for (const auto& p : parts) precision += 1.0 / p.variance;
    Estimate out;
    out.variance = 1.0 / precision;
    for (const auto& p : parts) {
        const double w = (1.0 / p.variance) / precision;
        out.value += w * p.value;
        out.k_used.push_back(p.k_used.front());
        out.weights.push_back(w);
    }
    return out;
}

namespace {

template <typename PointFn>
LearningCurve make_curve(const CohortPanel& panel, DiffMode mode, Method method, PointFn&& fn) {
    LearningCurve curve;
    curve.mode = mode;
    curve.method = method;
    for (int t = 0; t < panel.horizon(); ++t) {
        if (auto e = fn(t)) curve.points.push_back(CurvePoint{t, std::move(*e)});
    }
    curve.fittable = curve.points.size() >= kMinFitPoints;
    return curve;
}

}  // namespace

LearningCurve multicohort_series(const CohortPanel& panel, DiffMode mode) {
    return make_curve(panel, mode, Method::MC,
                      [&](int t) { return multicohort_estimate(panel, t, mode); });
}

LearningCurve ccd_series(const CohortPanel& panel) {
    return make_curve(panel, DiffMode::Learning, Method::CCD,
                      [&](int t) { return ccd_learning(panel, t); });
}

LearningCurve did_series(const CohortPanel& panel) {
    return make_curve(panel, DiffMode::Learning, Method::DiD,
                      [&](int t) { return did_learning(panel, t); });
}

LearningCurve first_cohort_series(const CohortPanel& panel, Arm arm, Method method) {
    const DiffMode mode = arm == Arm::Treatment ? DiffMode::ArmTreatment : DiffMode::ArmControl;
    return make_curve(panel, mode, method, [&](int t) { return delta_k(panel, t, 0, mode); });
}

std::string_view to_string(DiffMode mode) {
    switch (mode) {
        case DiffMode::Learning: return "learning";
        case DiffMode::Effect: return "effect";
        case DiffMode::ArmTreatment: return "arm_level:T";
        case DiffMode::ArmControl: return "arm_level:C";
    }
    return "?";
}

void write_curve_csv(std::ostream& out,
                     std::span<const std::pair<std::string, const LearningCurve*>> curves) {
    out << "mode,t,value,variance,ci_lo,ci_hi\n";
    for (const auto& [label, curve] : curves) {
        for (const auto& p : curve->points) {
            out << label << ',' << p.t << ',' << format_double(p.estimate.value) << ','
                << format_double(p.estimate.variance) << ','
                << format_double(p.estimate.ci_lo()) << ','
                << format_double(p.estimate.ci_hi()) << '\n';
        }
    }
}

}  // namespace cohortlte
