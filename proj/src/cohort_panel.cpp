#include "cohortlte/cohort_panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "cohortlte/csv.hpp"

namespace cohortlte {

namespace {

constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

std::size_t triangle_size(int horizon) {
    const auto h = static_cast<std::size_t>(horizon);
    return h * (h + 1) / 2;
}

/// Offset of row t0 in a triangle whose rows t0 = 0, 1, ... hold T, T-1, ... cells.
std::size_t row_offset(int horizon, int t0) {
    const auto h = static_cast<std::size_t>(horizon);
    const auto r = static_cast<std::size_t>(t0);
    return r * h - r * (r - 1) / 2;
}

void validate_records(std::span<const UserRecord> records, int horizon) {
    if (records.empty()) {
        throw InputError("event log contains no users");
    }
    std::unordered_set<std::string> seen_ids;
    std::vector<int> days;
    for (const auto& rec : records) {
        if (!seen_ids.insert(rec.user_id).second) {
            throw InputError("duplicate user id '" + rec.user_id + "'");
        }
        if (rec.entry_day < 0 || rec.entry_day >= horizon) {
            throw InputError("user '" + rec.user_id + "' has entry day " +
                             std::to_string(rec.entry_day) + " outside [0, " +
                             std::to_string(horizon) + ")");
        }
        days.clear();
        for (const auto& obs : rec.observations) {
            if (obs.day < rec.entry_day || obs.day >= horizon) {
                throw InputError("user '" + rec.user_id + "' has observation on day " +
                                 std::to_string(obs.day) + " outside [" +
                                 std::to_string(rec.entry_day) + ", " +
                                 std::to_string(horizon) + ")");
            }
            if (!(obs.metric >= 0.0) || !std::isfinite(obs.metric)) {
                throw InputError("user '" + rec.user_id + "' has invalid metric on day " +
                                 std::to_string(obs.day));
            }
            days.push_back(obs.day);
        }
        std::sort(days.begin(), days.end());
        const auto dup = std::adjacent_find(days.begin(), days.end());
        if (dup != days.end()) {
            throw InputError("duplicate observation for (user '" + rec.user_id + "', day " +
                             std::to_string(*dup) + ")");
        }
    }
}

/// Fills `values[d]` with the contribution of `rec` on day entry + d, or NaN
/// when the user does not contribute that day.
void contributions(const UserRecord& rec, int horizon, PanelMode mode,
                   std::vector<double>& values) {
    const int span = horizon - rec.entry_day;
    if (mode == PanelMode::Presence) {
        values.assign(static_cast<std::size_t>(span), 0.0);
        for (const auto& obs : rec.observations) {
            if (obs.active) {
                values[static_cast<std::size_t>(obs.day - rec.entry_day)] = 1.0;
            }
        }
    } else {
        values.assign(static_cast<std::size_t>(span), kAbsent);
        for (const auto& obs : rec.observations) {
            if (obs.active) {
                values[static_cast<std::size_t>(obs.day - rec.entry_day)] = obs.metric;
            }
        }
    }
}

struct CellSums {
    double w = 0.0;
    double sum = 0.0;
    double sq_dev = 0.0;
    // pairs with the entry day
    double pw = 0.0;
    double psum = 0.0;
    double psum_entry = 0.0;
    double cross_dev = 0.0;
};

CohortPanel aggregate(std::span<const UserRecord> records, std::span<const double> weights,
                      int horizon, PanelMode mode) {
    CohortPanel panel(horizon, mode);
    const auto stride = triangle_size(horizon);
    std::vector<CellSums> sums(2 * stride);
    auto slot = [&](Arm arm, int t0, int t) -> CellSums& {
        return sums[static_cast<std::size_t>(arm) * stride + row_offset(horizon, t0) +
                    static_cast<std::size_t>(t - t0)];
    };

    std::vector<double> values;
    std::vector<double> cohort_w(2 * static_cast<std::size_t>(horizon), 0.0);

    for (std::size_t i = 0; i < records.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w == 0.0) continue;
        const auto& rec = records[i];
        cohort_w[static_cast<std::size_t>(rec.arm) * horizon + rec.entry_day] += w;
        contributions(rec, horizon, mode, values);
        const double entry = values[0];
        for (std::size_t d = 0; d < values.size(); ++d) {
            const double x = values[d];
            if (std::isnan(x)) continue;
            auto& s = slot(rec.arm, rec.entry_day, rec.entry_day + static_cast<int>(d));
            s.w += w;
            s.sum += w * x;
            if (!std::isnan(entry)) {
                s.pw += w;
                s.psum += w * x;
                s.psum_entry += w * entry;
            }
        }
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w == 0.0) continue;
        const auto& rec = records[i];
        contributions(rec, horizon, mode, values);
        const double entry = values[0];
        for (std::size_t d = 0; d < values.size(); ++d) {
            const double x = values[d];
            if (std::isnan(x)) continue;
            auto& s = slot(rec.arm, rec.entry_day, rec.entry_day + static_cast<int>(d));
            const double m = s.sum / s.w;
            s.sq_dev += w * (x - m) * (x - m);
            if (!std::isnan(entry)) {
                s.cross_dev += w * (x - s.psum / s.pw) * (entry - s.psum_entry / s.pw);
            }
        }
    }

    for (Arm arm : {Arm::Treatment, Arm::Control}) {
        for (int t0 = 0; t0 < horizon; ++t0) {
            panel.set_cohort_size(
                arm, t0,
                static_cast<std::size_t>(std::llround(
                    cohort_w[static_cast<std::size_t>(arm) * horizon + t0])));
            for (int t = t0; t < horizon; ++t) {
                const auto& s = slot(arm, t0, t);
                auto& c = panel.cell(arm, t0, t);
                c.n = static_cast<std::size_t>(std::llround(s.w));
                c.mean = s.w > 0.0 ? s.sum / s.w : 0.0;
                c.usable = s.w >= 2.0;
                if (!c.usable) continue;
                const double sample_var = std::max(s.sq_dev / (s.w - 1.0), kVarianceFloor);
                c.var_of_mean = sample_var / s.w;
                c.n_paired = static_cast<std::size_t>(std::llround(s.pw));
                if (t == t0) {
                    c.cov_with_entry = c.var_of_mean;
                } else if (s.pw >= 2.0) {
                    const auto& entry_cell = slot(arm, t0, t0);
                    const double s_xy = s.cross_dev / (s.pw - 1.0);
                    c.cov_with_entry = s.pw * s_xy / (s.w * entry_cell.w);
                }
            }
        }
    }
    return panel;
}

}  // namespace

CohortPanel::CohortPanel(int horizon, PanelMode mode)
    : horizon_(horizon), mode_(mode) {
    if (horizon < 1) {
        throw std::invalid_argument("panel horizon must be positive");
    }
    cells_.resize(2 * triangle_size(horizon));
    cohort_sizes_.assign(2 * static_cast<std::size_t>(horizon), 0);
    for (Arm arm : {Arm::Treatment, Arm::Control}) {
        for (int t0 = 0; t0 < horizon; ++t0) {
            for (int t = t0; t < horizon; ++t) {
                auto& c = cells_[index(arm, t0, t)];
                c.arm = arm;
                c.t0 = t0;
                c.t = t;
            }
        }
    }
}

std::size_t CohortPanel::index(Arm arm, int t0, int t) const {
    if (t0 < 0 || t < t0 || t >= horizon_) {
        throw std::out_of_range("cohort cell (" + std::to_string(t0) + ", " +
                                std::to_string(t) + ") outside panel with T = " +
                                std::to_string(horizon_));
    }
    return static_cast<std::size_t>(arm) * triangle_size(horizon_) + row_offset(horizon_, t0) +
           static_cast<std::size_t>(t - t0);
}

const CohortCell& CohortPanel::cell(Arm arm, int t0, int t) const {
    return cells_[index(arm, t0, t)];
}

CohortCell& CohortPanel::cell(Arm arm, int t0, int t) { return cells_[index(arm, t0, t)]; }

std::size_t CohortPanel::cohort_size(Arm arm, int t0) const {
    if (t0 < 0 || t0 >= horizon_) throw std::out_of_range("cohort entry day outside panel");
    return cohort_sizes_[static_cast<std::size_t>(arm) * horizon_ + t0];
}

void CohortPanel::set_cohort_size(Arm arm, int t0, std::size_t n) {
    if (t0 < 0 || t0 >= horizon_) throw std::out_of_range("cohort entry day outside panel");
    cohort_sizes_[static_cast<std::size_t>(arm) * horizon_ + t0] = n;
}

CohortPanel build_panel(std::span<const UserRecord> records, int horizon, PanelMode mode) {
    if (horizon < 2) {
        throw InputError("experiment duration must be at least 2 days");
    }
    validate_records(records, horizon);
    return aggregate(records, {}, horizon, mode);
}

CohortPanel build_weighted_panel(std::span<const UserRecord> records,
                                 std::span<const double> weights, int horizon,
                                 PanelMode mode) {
    if (weights.size() != records.size()) {
        throw std::invalid_argument("weights must match records");
    }
    return aggregate(records, weights, horizon, mode);
}

int infer_horizon(std::span<const UserRecord> records) {
    int horizon = 0;
    for (const auto& rec : records) {
        horizon = std::max(horizon, rec.entry_day + 1);
        for (const auto& obs : rec.observations) horizon = std::max(horizon, obs.day + 1);
    }
    return horizon;
}

void write_panel_csv(std::ostream& out, const CohortPanel& panel) {
    out << "arm,t0,t,n,mean,var_of_mean,usable\n";
    for (const auto& c : panel.cells()) {
        out << (c.arm == Arm::Treatment ? "T" : "C") << ',' << c.t0 << ',' << c.t << ','
            << c.n << ',' << format_double(c.mean) << ',' << format_double(c.var_of_mean)
            << ',' << (c.usable ? 1 : 0) << '\n';
    }
}

}  // namespace cohortlte
