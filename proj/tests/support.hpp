// Shared fixtures and brute-force reference computations for the tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cohortlte/cohort_panel.hpp"
#include "cohortlte/estimators.hpp"
#include "cohortlte/types.hpp"

namespace testing {

using namespace cohortlte;

/// Random log with non-absorbing activity, integer metrics and uneven cohorts.
inline std::vector<UserRecord> random_log(std::uint64_t seed, int n_users, int horizon,
                                          double p_active = 0.8) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> entry(0, horizon - 1);
    std::bernoulli_distribution coin(0.5);
    std::bernoulli_distribution active(p_active);
    std::poisson_distribution<int> clicks(1.5);
    std::vector<UserRecord> out;
    for (int u = 0; u < n_users; ++u) {
        UserRecord r;
        r.user_id = "u" + std::to_string(u);
        r.arm = coin(rng) ? Arm::Treatment : Arm::Control;
        r.entry_day = entry(rng);
        for (int d = r.entry_day; d < horizon; ++d) {
            const bool on = active(rng);
            const double m = clicks(rng) + (r.arm == Arm::Treatment ? 0.5 : 0.0);
            if (on || coin(rng)) r.observations.push_back({d, on ? m : 0.0, on});
        }
        out.push_back(std::move(r));
    }
    return out;
}

struct RefCell {
    std::size_t n = 0;
    double mean = 0.0;
    double var_of_mean = 0.0;
    bool usable = false;
    double cov_with_entry = 0.0;
};

/// Contribution of one user on calendar day `day`, if any.
inline std::optional<double> user_value(const UserRecord& r, int day, PanelMode mode) {
    for (const auto& o : r.observations) {
        if (o.day == day && o.active) return mode == PanelMode::Metric ? o.metric : 1.0;
    }
    if (mode == PanelMode::Presence) return 0.0;
    return std::nullopt;
}

inline RefCell ref_cell(const std::vector<UserRecord>& log, PanelMode mode, Arm arm, int t0,
                        int t) {
    std::vector<double> xs;
    std::vector<std::pair<double, double>> pairs;
    for (const auto& r : log) {
        if (r.arm != arm || r.entry_day != t0) continue;
        const auto x = user_value(r, t, mode);
        if (!x) continue;
        xs.push_back(*x);
        if (const auto y = user_value(r, t0, mode)) pairs.emplace_back(*x, *y);
    }
    RefCell c;
    c.n = xs.size();
    if (xs.empty()) return c;
    double s = 0.0;
    for (double x : xs) s += x;
    c.mean = s / xs.size();
    if (xs.size() < 2) return c;
    c.usable = true;
    double ss = 0.0;
    for (double x : xs) ss += (x - c.mean) * (x - c.mean);
    c.var_of_mean = std::max(ss / (xs.size() - 1), kVarianceFloor) / xs.size();
    if (t == t0) {
        c.cov_with_entry = c.var_of_mean;
    } else if (pairs.size() >= 2) {
        std::size_t n0 = 0;
        for (const auto& r : log) {
            if (r.arm == arm && r.entry_day == t0 && user_value(r, t0, mode)) ++n0;
        }
        double mx = 0.0, my = 0.0;
        for (auto [x, y] : pairs) mx += x, my += y;
        mx /= pairs.size();
        my /= pairs.size();
        double sxy = 0.0;
        for (auto [x, y] : pairs) sxy += (x - mx) * (y - my);
        sxy /= pairs.size() - 1;
        c.cov_with_entry = pairs.size() * sxy / (double(xs.size()) * double(n0));
    }
    return c;
}

struct RefEstimate {
    double value = 0.0;
    double variance = 0.0;
};

inline double floor_var(double v) { return v > 0.0 ? v : kVarianceFloor; }

/// delta_k(t) straight from the reference cells.
inline std::optional<RefEstimate> ref_delta(const std::vector<UserRecord>& log, int horizon,
                                            int t, int k, DiffMode mode) {
    const int day = t + k;
    const auto T = Arm::Treatment;
    const auto C = Arm::Control;
    auto diff = [&](RefCell a, RefCell b, double cov) -> std::optional<RefEstimate> {
        if (!a.usable || !b.usable) return std::nullopt;
        return RefEstimate{a.mean - b.mean, floor_var(a.var_of_mean + b.var_of_mean - 2 * cov)};
    };
    (void)horizon;
    switch (mode) {
        case DiffMode::Learning: {
            const auto a = ref_cell(log, PanelMode::Metric, T, k, day);
            const auto b = ref_cell(log, PanelMode::Metric, T, day, day);
            // same cell only when k = day, i.e. t = 0
            return diff(a, b, t == 0 ? a.var_of_mean : 0.0);
        }
        case DiffMode::Effect:
            return diff(ref_cell(log, PanelMode::Metric, T, k, day),
                        ref_cell(log, PanelMode::Metric, C, k, day), 0.0);
        case DiffMode::ArmTreatment:
        case DiffMode::ArmControl: {
            const auto c =
                ref_cell(log, PanelMode::Metric, mode == DiffMode::ArmTreatment ? T : C, k, day);
            if (!c.usable) return std::nullopt;
            return RefEstimate{c.mean, floor_var(c.var_of_mean)};
        }
    }
    return std::nullopt;
}

struct RefCombined {
    double value = 0.0;
    double variance = 0.0;
    std::vector<int> ks;
    std::vector<double> weights;
};

inline std::optional<RefCombined> ref_multicohort(const std::vector<UserRecord>& log,
                                                  int horizon, int t, DiffMode mode) {
    std::vector<int> ks;
    std::vector<RefEstimate> parts;
    for (int k = 0; t + k < horizon; ++k) {
        if (auto d = ref_delta(log, horizon, t, k, mode)) {
            ks.push_back(k);
            parts.push_back(*d);
        }
    }
    if (parts.empty()) return std::nullopt;
    RefCombined out;
    out.ks = ks;
    double prec = 0.0;
    for (const auto& p : parts) prec += 1.0 / p.variance;
    for (const auto& p : parts) out.weights.push_back(1.0 / p.variance / prec);
    for (std::size_t i = 0; i < parts.size(); ++i) out.value += out.weights[i] * parts[i].value;
    out.variance = parts.size() == 1 ? parts[0].variance : 1.0 / prec;
    return out;
}

inline UserRecord user(std::string id, Arm arm, int entry, std::vector<Observation> obs) {
    return UserRecord{std::move(id), arm, entry, std::move(obs)};
}

}  // namespace testing
