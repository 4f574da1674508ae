#include "cohortlte/report_io.hpp"

#include <cmath>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cohortlte/csv.hpp"

namespace cohortlte {

namespace {

json summary_json(const Summary& s) { return json{{"mean", s.mean}, {"std", s.std}, {"n", s.n}}; }

std::vector<std::pair<std::string, const LearningCurve*>> labelled_curves(
    const AnalysisReport& report) {
    static constexpr std::array<const char*, 4> kErlvCurveNames = {"metric:T", "metric:C",
                                                                   "survival:T", "survival:C"};
    std::vector<std::pair<std::string, const LearningCurve*>> out;
    for (const auto& [method, r] : report.methods) {
        const std::string tag(to_string(method));
        out.emplace_back(tag + "/learning", &r.learning);
        if (method == Method::MC) out.emplace_back(tag + "/effect", &r.lte_curve);
        for (std::size_t i = 0; i < 4; ++i) {
            out.emplace_back(tag + "/" + kErlvCurveNames[i], &r.erlv_models.curves[i]);
        }
    }
    return out;
}

json curve_json(const std::string& label, const LearningCurve& curve) {
    json points = json::array();
    for (const auto& p : curve.points) {
        points.push_back(json{{"t", p.t},
                              {"value", p.estimate.value},
                              {"variance", p.estimate.variance},
                              {"ci95", {p.estimate.ci_lo(), p.estimate.ci_hi()}}});
    }
    return json{{"label", label},
                {"mode", std::string(to_string(curve.mode))},
                {"method", std::string(to_string(curve.method))},
                {"fittable", curve.fittable},
                {"points", std::move(points)}};
}

json optional_fit(const std::optional<DecayFit>& fit) {
    return fit ? json(*fit) : json(nullptr);
}

ParamDist dist_from_json(const json& j, const std::string& name) {
    if (j.is_number()) return ParamDist::fixed(j.get<double>());
    if (!j.is_object() || !j.contains("dist")) {
        throw InputError("parameter '" + name + "' must be a number or {\"dist\": ...}");
    }
    const auto kind = j.at("dist").get<std::string>();
    if (kind == "uniform") return ParamDist::uniform(j.at("low"), j.at("high"));
    if (kind == "uniform_int") return ParamDist::uniform_int(j.at("low"), j.at("high"));
    if (kind == "normal") return ParamDist::normal(j.at("mean"), j.at("std"));
    if (kind == "fixed") return ParamDist::fixed(j.at("value"));
    throw InputError("parameter '" + name + "' has unknown dist '" + kind + "'");
}

json dist_to_json(const ParamDist& d) {
    switch (d.kind) {
        case ParamDist::Kind::Fixed: return d.a;
        case ParamDist::Kind::Uniform: return json{{"dist", "uniform"}, {"low", d.a}, {"high", d.b}};
        case ParamDist::Kind::UniformInt:
            return json{{"dist", "uniform_int"}, {"low", static_cast<int>(d.a)},
                        {"high", static_cast<int>(d.b)}};
        case ParamDist::Kind::Normal: return json{{"dist", "normal"}, {"mean", d.a}, {"std", d.b}};
    }
    return nullptr;
}

std::string scenario_name(Scenario s) { return s == Scenario::Table1 ? "table1" : "scenario2"; }

}  // namespace

void to_json(json& j, const DecayFit& fit) {
    j = json{{"gamma", fit.gamma},         {"alpha", fit.alpha},
             {"beta", fit.beta},           {"weighted_sse", fit.weighted_sse},
             {"converged", fit.converged}, {"degenerate", fit.degenerate}};
}

void to_json(json& j, const MetricEstimate& m) {
    j = json{{"name", std::string(to_string(m.name))},
             {"method", std::string(to_string(m.method))},
             {"value", m.value},
             {"std", m.std},
             {"ci95", {m.ci_lo, m.ci_hi}},
             {"available", m.available}};
    if (!m.diagnostic.empty()) j["diagnostic"] = m.diagnostic;
}

void to_json(json& j, const SimConfig& c) {
    j = json{{"T", c.T},
             {"n_users", c.n_users},
             {"base_rate_shape", c.base_rate_shape},
             {"base_rate_scale", c.base_rate_scale},
             {"base_retention", c.base_retention},
             {"alpha_eff", c.alpha_eff},
             {"beta_eff", c.beta_eff},
             {"alpha_churn", c.alpha_churn},
             {"beta_churn", c.beta_churn},
             {"treatment_share", c.treatment_share},
             {"persistent_effect", c.persistent_effect},
             {"seed", c.seed}};
}

void from_json(const json& j, SimConfig& c) {
    if (!j.is_object()) throw InputError("simulation config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "T") c.T = value.get<int>();
        else if (key == "n_users") c.n_users = value.get<int>();
        else if (key == "base_rate_shape") c.base_rate_shape = value.get<double>();
        else if (key == "base_rate_scale") c.base_rate_scale = value.get<double>();
        else if (key == "base_retention") c.base_retention = value.get<double>();
        else if (key == "alpha_eff") c.alpha_eff = value.get<double>();
        else if (key == "beta_eff") c.beta_eff = value.get<double>();
        else if (key == "alpha_churn") c.alpha_churn = value.get<double>();
        else if (key == "beta_churn") c.beta_churn = value.get<double>();
        else if (key == "treatment_share") c.treatment_share = value.get<double>();
        else if (key == "persistent_effect") c.persistent_effect = value.get<double>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else throw InputError("unknown simulation config field '" + key + "'");
    }
}

json report_to_json(const AnalysisReport& report) {
    json j;
    j["horizon"] = report.horizon;
    j["erlv_horizon"] = report.erlv_horizon;
    j["erlv_offset"] = report.erlv_offset;
    j["window"] = report.window;
    j["ste"] = report.ste;
    j["complete"] = report.complete();

    const auto mc = report.methods.find(Method::MC);
    j["lte"] = mc != report.methods.end() ? json(mc->second.lte) : json(nullptr);
    j["derlv"] = mc != report.methods.end() ? json(mc->second.derlv) : json(nullptr);

    json baselines = json::object();
    json fits = json::object();
    for (const auto& [method, r] : report.methods) {
        const std::string tag(to_string(method));
        if (method != Method::MC) baselines[tag] = json{{"lte", r.lte}, {"derlv", r.derlv}};
        json f;
        f[method == Method::MC ? "effect" : "learning"] = optional_fit(r.lte_fit);
        for (std::size_t i = 0; i < 4; ++i) f[kErlvModelNames[i]] = optional_fit(r.erlv_models.fits[i]);
        fits[tag] = std::move(f);
    }
    j["baselines"] = std::move(baselines);
    j["fits"] = std::move(fits);

    json curves = json::array();
    for (const auto& [label, curve] : labelled_curves(report)) curves.push_back(curve_json(label, *curve));
    j["curves"] = std::move(curves);

    j["bootstrap"] = json{{"enabled", report.bootstrapped},
                          {"replicates", report.replicates},
                          {"failed_replicates", report.failed_replicates},
                          {"unstable", report.unstable},
                          {"seed", report.seed}};
    j["diagnostics"] = report.diagnostics;
    return j;
}

void write_report_curves_csv(std::ostream& out, const AnalysisReport& report) {
    const auto curves = labelled_curves(report);
    write_curve_csv(out, curves);
}

json truth_sidecar(const SimConfig& config, int horizon) {
    return json{{"config", config},
                {"horizon", horizon},
                {"true_lte", true_lte(config)},
                {"true_delta_erlv", true_delta_erlv(config, horizon)}};
}

BenchSpec bench_spec_from_json(const json& j) {
    if (!j.is_object()) throw InputError("bench spec must be a JSON object");
    const std::string scenario = j.value("scenario", std::string("table1"));
    BenchSpec spec;
    if (scenario == "table1") {
        spec = table1_spec();
    } else if (scenario == "scenario2") {
        spec = scenario2_spec();
    } else {
        throw InputError("unknown scenario '" + scenario + "'");
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "scenario") continue;
        if (key == "n_sims") spec.n_sims = value.get<int>();
        else if (key == "seed") spec.seed = value.get<std::uint64_t>();
        else if (key == "n_users") spec.n_users = value.get<int>();
        else if (key == "window") spec.window = value.get<int>();
        else if (key == "bootstrap") spec.bootstrap = value.get<int>();
        else if (key == "jobs") spec.jobs = value.get<unsigned>();
        else if (key == "horizon") {
            if (value.is_string() && value.get<std::string>() == "T") spec.horizon.reset();
            else spec.horizon = value.get<int>();
        } else if (key == "methods") {
            spec.methods.clear();
            for (const auto& m : value) spec.methods.push_back(parse_method(m.get<std::string>()));
        } else if (key == "T") spec.T = dist_from_json(value, key);
        else if (key == "alpha_eff") spec.alpha_eff = dist_from_json(value, key);
        else if (key == "beta_eff") spec.beta_eff = dist_from_json(value, key);
        else if (key == "alpha_churn") spec.alpha_churn = dist_from_json(value, key);
        else if (key == "beta_churn") spec.beta_churn = dist_from_json(value, key);
        else if (key == "base") from_json(value, spec.base);
        else throw InputError("unknown bench spec field '" + key + "'");
    }
    spec.check();
    return spec;
}

json bench_spec_to_json(const BenchSpec& spec) {
    json methods = json::array();
    for (Method m : spec.methods) methods.push_back(std::string(to_string(m)));
    json base = spec.base;
    return json{{"scenario", scenario_name(spec.scenario)},
                {"n_sims", spec.n_sims},
                {"seed", spec.seed},
                {"n_users", spec.n_users},
                {"methods", std::move(methods)},
                {"horizon", spec.horizon ? json(*spec.horizon) : json("T")},
                {"window", spec.window},
                {"bootstrap", spec.bootstrap},
                {"T", dist_to_json(spec.T)},
                {"alpha_eff", dist_to_json(spec.alpha_eff)},
                {"beta_eff", dist_to_json(spec.beta_eff)},
                {"alpha_churn", dist_to_json(spec.alpha_churn)},
                {"beta_churn", dist_to_json(spec.beta_churn)},
                {"base", std::move(base)}};
}

json bench_report_to_json(const BenchReport& report) {
    json j;
    j["scenario"] = scenario_name(report.scenario);
    j["spec"] = bench_spec_to_json(report.spec);
    j["n_sims"] = report.rows.size();
    j["failed_sims"] = report.failed_sims;
    if (report.scenario == Scenario::Table1) {
        json methods = json::object();
        for (const auto& [method, agg] : report.methods) {
            methods[std::string(to_string(method))] = json{{"succeeded", agg.succeeded},
                                                           {"failed", agg.failed},
                                                           {"ci_width", summary_json(agg.ci_width)},
                                                           {"mae_lte", summary_json(agg.mae_lte)},
                                                           {"mae_derlv", summary_json(agg.mae_derlv)}};
        }
        j["methods"] = std::move(methods);
        json ratios = json::object();
        for (const auto& [method, ratio] : report.width_ratio_mc) {
            ratios["MC/" + std::string(to_string(method))] = ratio;
        }
        j["width_ratio"] = std::move(ratios);
        j["width_order_holds"] = report.width_order_holds;
        j["reference_values"] = {
            {"CCD", {{"ci_width", 0.76}, {"mae_lte", 0.15}, {"mae_derlv", 0.88}}},
            {"DiD", {{"ci_width", 1.08}, {"mae_lte", 0.16}, {"mae_derlv", 0.88}}},
            {"MC", {{"ci_width", 0.38}, {"mae_lte", 0.13}, {"mae_derlv", 0.66}}}};
    } else {
        j["ste"] = summary_json(report.ste);
        j["lte"] = summary_json(report.lte);
        j["derlv"] = summary_json(report.derlv);
        j["ste_ci_covers_zero"] = report.ste_ci_covers_zero;
        j["lte_ci_covers_zero"] = report.lte_ci_covers_zero;
        j["derlv_ci_covers_zero"] = report.derlv_ci_covers_zero;
        j["negative_alpha_draws"] = report.negative_alpha_draws;
        j["reference_values"] = {{"ste", 0.32}, {"lte", 0.02}, {"derlv", -0.70}};
    }
    return j;
}

void write_bench_rows_csv(std::ostream& out, const BenchReport& report) {
    const auto f = [](double v) { return format_double(v); };
    auto prefix = [&](const SimRow& row) {
        const auto& c = row.config;
        out << row.sim << ',' << c.T << ',' << f(c.alpha_eff) << ',' << f(c.beta_eff) << ','
            << f(c.alpha_churn) << ',' << f(c.beta_churn) << ',' << f(row.true_lte) << ','
            << f(row.true_derlv);
    };
    const char* head = "sim,T,alpha_eff,beta_eff,alpha_churn,beta_churn,true_lte,true_derlv";
    if (report.scenario == Scenario::Table1) {
        out << head << ",method,ok,ci_width,lte,derlv,abs_err_lte,abs_err_derlv\n";
        for (const auto& row : report.rows) {
            if (row.methods.empty()) {
                prefix(row);
                out << ",,0,,,,,\n";
                continue;
            }
            for (const auto& [method, r] : row.methods) {
                prefix(row);
                out << ',' << to_string(method) << ',' << (r.ok ? 1 : 0) << ',' << f(r.ci_width)
                    << ',' << f(r.lte) << ',' << f(r.derlv) << ',' << f(r.abs_err_lte) << ','
                    << f(r.abs_err_derlv) << '\n';
            }
        }
    } else {
        out << head << ",ok,ste,ste_std,lte,lte_lo,lte_hi,derlv,derlv_lo,derlv_hi\n";
        for (const auto& row : report.rows) {
            prefix(row);
            out << ',' << (row.ok ? 1 : 0) << ',' << f(row.ste) << ',' << f(row.ste_std) << ','
                << f(row.lte) << ',' << f(row.lte_lo) << ',' << f(row.lte_hi) << ','
                << f(row.derlv) << ',' << f(row.derlv_lo) << ',' << f(row.derlv_hi) << '\n';
        }
    }
}

void write_bench_curves_csv(std::ostream& out, const BenchReport& report) {
    out << "t,metric_T,metric_C,weighted_T,weighted_C,n\n";
    std::size_t longest = 0;
    for (const auto& row : report.rows) longest = std::max(longest, row.curves.size());
    for (std::size_t t = 0; t < longest; ++t) {
        std::array<double, 4> total{};
        int n = 0;
        for (const auto& row : report.rows) {
            if (!row.ok || t >= row.curves.size()) continue;
            const auto& v = row.curves[t];
            if (std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); })) continue;
            for (std::size_t i = 0; i < 4; ++i) total[i] += v[i];
            ++n;
        }
        if (n == 0) continue;
        out << t;
        for (double x : total) out << ',' << format_double(x / n);
        out << ',' << n << '\n';
    }
}

}  // namespace cohortlte
