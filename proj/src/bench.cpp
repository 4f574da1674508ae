#include "cohortlte/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cohortlte/cohort_panel.hpp"
#include "cohortlte/estimators.hpp"
#include "cohortlte/parallel.hpp"
#include "cohortlte/value_metrics.hpp"

namespace cohortlte {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool covers_zero(double lo, double hi) { return lo <= 0.0 && 0.0 <= hi; }

}  // namespace

double ParamDist::draw(Engine& rng) const {
    switch (kind) {
        case Kind::Fixed: return a;
        case Kind::Uniform:
            if (a == b) return a;
            return std::uniform_real_distribution<double>(a, b)(rng);
        case Kind::UniformInt:
            return static_cast<double>(std::uniform_int_distribution<int>(
                static_cast<int>(a), static_cast<int>(b))(rng));
        case Kind::Normal:
            if (b == 0.0) return a;
            return std::normal_distribution<double>(a, b)(rng);
    }
    return a;
}

void ParamDist::check(const std::string& name) const {
    const bool ok = std::isfinite(a) && std::isfinite(b) &&
                    (kind == Kind::Normal ? b >= 0.0 : a <= b || kind == Kind::Fixed);
    if (!ok) throw ConfigError("invalid distribution for " + name);
}

void BenchSpec::check() const {
    if (n_sims < 1) throw ConfigError("n_sims must be at least 1");
    if (n_users < 1) throw ConfigError("n_users must be positive");
    if (methods.empty()) throw ConfigError("at least one method is required");
    if (window < 1) throw ConfigError("window must be at least one day");
    if (scenario == Scenario::Scenario2 && bootstrap < 50) {
        throw ConfigError("scenario2 needs at least 50 bootstrap replicates");
    }
    if (horizon && *horizon < 0) throw ConfigError("horizon must be non-negative");
    T.check("T");
    alpha_eff.check("alpha_eff");
    beta_eff.check("beta_eff");
    alpha_churn.check("alpha_churn");
    beta_churn.check("beta_churn");
    if (T.a < 2) throw ConfigError("T must be at least 2");
}

BenchSpec table1_spec() { return BenchSpec{}; }

BenchSpec scenario2_spec() {
    BenchSpec spec;
    spec.scenario = Scenario::Scenario2;
    spec.methods = {Method::MC};
    spec.T = ParamDist::fixed(14);
    spec.alpha_eff = ParamDist::normal(0.1, 0.07);
    spec.alpha_churn = ParamDist::normal(0.2, 0.07);
    spec.beta_eff = ParamDist::fixed(1.0 / 3.0);
    spec.beta_churn = ParamDist::fixed(1.0 / 3.0);
    return spec;
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.n = static_cast<int>(values.size());
    if (values.empty()) {
        s.mean = kNaN;
        s.std = kNaN;
        return s;
    }
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

SimConfig draw_sim_config(const BenchSpec& spec, int sim) {
    Engine rng = make_engine(spec.seed, {stream::kBenchParams, static_cast<std::uint64_t>(sim)});
    SimConfig config = spec.base;
    config.T = static_cast<int>(std::lround(spec.T.draw(rng)));
    config.alpha_eff = spec.alpha_eff.draw(rng);
    config.beta_eff = spec.beta_eff.draw(rng);
    config.alpha_churn = spec.alpha_churn.draw(rng);
    config.beta_churn = spec.beta_churn.draw(rng);
    config.n_users = spec.n_users;
    config.seed = substream_seed(spec.seed, {stream::kBenchData, static_cast<std::uint64_t>(sim)});
    return config;
}

namespace {

SimRow start_row(const BenchSpec& spec, int sim) {
    SimRow row;
    row.sim = sim;
    row.config = draw_sim_config(spec, sim);
    row.erlv_horizon = spec.horizon.value_or(row.config.T);
    row.true_lte = true_lte(row.config);
    row.true_derlv = true_delta_erlv(row.config, row.erlv_horizon);
    return row;
}

SimRow table1_sim(const BenchSpec& spec, int sim) {
    SimRow row = start_row(spec, sim);
    std::vector<UserRecord> records;
    try {
        records = generate(row.config);
    } catch (const ConfigError& e) {
        row.failure = e.what();
        return row;
    }
    const int horizon = row.config.T;
    const auto metric = build_panel(records, horizon, PanelMode::Metric);
    const auto presence = build_panel(records, horizon, PanelMode::Presence);
    ErlvOptions erlv;
    erlv.horizon = row.erlv_horizon;

    row.ok = true;
    for (Method method : spec.methods) {
        MethodSimResult r;
        MetricEstimate lte;
        MetricEstimate derlv;
        if (method == Method::MC) {
            r.ci_width = multicohort_series(metric, DiffMode::Learning).mean_ci_width();
            lte = estimate_lte(metric);
            derlv = estimate_delta_erlv(metric, presence, erlv);
        } else {
            const auto curve = method == Method::CCD ? ccd_series(metric) : did_series(metric);
            r.ci_width = curve.mean_ci_width();
            lte = baseline_lte(metric, method);
            derlv = baseline_delta_erlv(metric, presence, method, erlv);
        }
        r.lte = lte.value;
        r.derlv = derlv.value;
        r.ok = lte.available && derlv.available;
        if (r.ok) {
            r.abs_err_lte = std::abs(r.lte - row.true_lte);
            r.abs_err_derlv = std::abs(r.derlv - row.true_derlv);
        } else {
            r.failure = lte.available ? derlv.diagnostic : lte.diagnostic;
            row.ok = false;
            if (row.failure.empty()) row.failure = std::string(to_string(method)) + ": " + r.failure;
        }
        row.methods.emplace(method, std::move(r));
    }
    return row;
}

SimRow scenario2_sim(const BenchSpec& spec, int sim) {
    SimRow row = start_row(spec, sim);
    std::vector<UserRecord> records;
    try {
        records = generate(row.config);
    } catch (const ConfigError& e) {
        row.failure = e.what();
        return row;
    }
    AnalysisOptions options;
    options.window = spec.window;
    options.methods = {Method::MC};
    options.erlv.horizon = row.erlv_horizon;
    const auto seed = substream_seed(spec.seed, {stream::kBootstrap, static_cast<std::uint64_t>(sim)});
    const auto report = bootstrap_report(records, spec.bootstrap, seed, options, 1);
    const auto& mc = report.methods.at(Method::MC);

    row.ste = report.ste.value;
    row.ste_std = report.ste.std;
    row.lte = mc.lte.value;
    row.lte_lo = mc.lte.ci_lo;
    row.lte_hi = mc.lte.ci_hi;
    row.derlv = mc.derlv.value;
    row.derlv_lo = mc.derlv.ci_lo;
    row.derlv_hi = mc.derlv.ci_hi;
    row.ok = report.complete() && !report.unstable;
    if (!row.ok) {
        row.failure = report.diagnostics.empty() ? "incomplete report" : report.diagnostics.front();
    }

    row.curves.assign(static_cast<std::size_t>(row.config.T), {kNaN, kNaN, kNaN, kNaN});
    auto fill = [&](const LearningCurve& c, std::size_t col) {
        for (const auto& p : c.points) row.curves[static_cast<std::size_t>(p.t)][col] = p.estimate.value;
    };
    const auto& curves = mc.erlv_models.curves;
    fill(curves[0], 0);
    fill(curves[1], 1);
    for (auto& r : row.curves) {
        r[2] = r[0];
        r[3] = r[1];
    }
    std::vector<double> survival_t(row.curves.size(), kNaN);
    std::vector<double> survival_c(row.curves.size(), kNaN);
    for (const auto& p : curves[2].points) survival_t[static_cast<std::size_t>(p.t)] = p.estimate.value;
    for (const auto& p : curves[3].points) survival_c[static_cast<std::size_t>(p.t)] = p.estimate.value;
    for (std::size_t t = 0; t < row.curves.size(); ++t) {
        row.curves[t][2] *= survival_t[t];
        row.curves[t][3] *= survival_c[t];
    }
    return row;
}

template <typename SimFn>
std::vector<SimRow> run_sims(const BenchSpec& spec, SimFn&& fn) {
    spec.check();
    std::vector<SimRow> rows(static_cast<std::size_t>(spec.n_sims));
    parallel_for(rows.size(), spec.jobs,
                 [&](std::size_t i) { rows[i] = fn(spec, static_cast<int>(i)); });
    return rows;
}

}  // namespace

BenchReport run_table1(const BenchSpec& spec) {
    BenchReport report;
    report.scenario = Scenario::Table1;
    report.spec = spec;
    report.rows = run_sims(spec, table1_sim);

    std::map<Method, std::vector<double>> widths;
    std::map<Method, std::vector<double>> lte_err;
    std::map<Method, std::vector<double>> derlv_err;
    std::map<Method, double> paired_width_sum;
    int paired = 0;
    for (const auto& row : report.rows) {
        if (!row.ok) ++report.failed_sims;
        for (const auto& [method, r] : row.methods) {
            auto& agg = report.methods[method];
            if (!r.ok) {
                ++agg.failed;
                continue;
            }
            ++agg.succeeded;
            widths[method].push_back(r.ci_width);
            lte_err[method].push_back(r.abs_err_lte);
            derlv_err[method].push_back(r.abs_err_derlv);
        }
        if (row.ok) {
            ++paired;
            for (const auto& [method, r] : row.methods) paired_width_sum[method] += r.ci_width;
            const auto ccd = row.methods.find(Method::CCD);
            const auto did = row.methods.find(Method::DiD);
            const auto mc = row.methods.find(Method::MC);
            if (ccd != row.methods.end() && did != row.methods.end() && mc != row.methods.end() &&
                mc->second.ci_width < ccd->second.ci_width &&
                ccd->second.ci_width < did->second.ci_width) {
                ++report.width_order_holds;
            }
        }
    }
    for (auto& [method, agg] : report.methods) {
        agg.ci_width = summarize(widths[method]);
        agg.mae_lte = summarize(lte_err[method]);
        agg.mae_derlv = summarize(derlv_err[method]);
    }
    if (paired > 0 && paired_width_sum.count(Method::MC)) {
        for (const auto& [method, total] : paired_width_sum) {
            if (method == Method::MC || total <= 0.0) continue;
            report.width_ratio_mc[method] = paired_width_sum[Method::MC] / total;
        }
    }
    return report;
}

BenchReport run_scenario2(const BenchSpec& spec) {
    BenchReport report;
    report.scenario = Scenario::Scenario2;
    report.spec = spec;
    report.rows = run_sims(spec, scenario2_sim);

    std::vector<double> ste;
    std::vector<double> lte;
    std::vector<double> derlv;
    for (const auto& row : report.rows) {
        if (row.config.alpha_eff < 0.0 || row.config.alpha_churn < 0.0) ++report.negative_alpha_draws;
        if (!row.ok) {
            ++report.failed_sims;
            continue;
        }
        ste.push_back(row.ste);
        lte.push_back(row.lte);
        derlv.push_back(row.derlv);
        if (covers_zero(row.lte_lo, row.lte_hi)) ++report.lte_ci_covers_zero;
        if (covers_zero(row.ste - kZ95 * row.ste_std, row.ste + kZ95 * row.ste_std)) {
            ++report.ste_ci_covers_zero;
        }
        if (covers_zero(row.derlv_lo, row.derlv_hi)) ++report.derlv_ci_covers_zero;
    }
    report.ste = summarize(ste);
    report.lte = summarize(lte);
    report.derlv = summarize(derlv);
    return report;
}

BenchReport run_bench(const BenchSpec& spec) {
    return spec.scenario == Scenario::Table1 ? run_table1(spec) : run_scenario2(spec);
}

}  // namespace cohortlte
