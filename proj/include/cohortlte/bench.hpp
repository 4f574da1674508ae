#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cohortlte/rng.hpp"
#include "cohortlte/simulate.hpp"
#include "cohortlte/types.hpp"

namespace cohortlte {

/// A per-simulation parameter distribution.
struct ParamDist {
    enum class Kind { Fixed, Uniform, UniformInt, Normal };
    Kind kind = Kind::Fixed;
    double a = 0.0;  ///< value, lower bound, or mean
    double b = 0.0;  ///< upper bound or standard deviation

    static ParamDist fixed(double v) { return {Kind::Fixed, v, v}; }
    static ParamDist uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
    static ParamDist uniform_int(int lo, int hi) { return {Kind::UniformInt, double(lo), double(hi)}; }
    static ParamDist normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }

    [[nodiscard]] double draw(Engine& rng) const;
    /// Throws ConfigError for inverted bounds or a negative standard deviation.
    void check(const std::string& name) const;
};

enum class Scenario { Table1, Scenario2 };

struct BenchSpec {
    Scenario scenario = Scenario::Table1;
    int n_sims = 100;
    std::uint64_t seed = 2026;
    int n_users = kDeskUsers;
    std::vector<Method> methods{Method::CCD, Method::DiD, Method::MC};
    /// Fixed T*; unset means T* = T of each simulation.
    std::optional<int> horizon;
    int window = 7;
    /// Bootstrap replicates per simulation (scenario2 only).
    int bootstrap = 200;
    unsigned jobs = 1;

    ParamDist T = ParamDist::uniform_int(7, 14);
    ParamDist alpha_eff = ParamDist::uniform(0.05, 0.2);
    ParamDist beta_eff = ParamDist::uniform(0.1, 0.5);
    ParamDist alpha_churn = ParamDist::uniform(0.0, 0.1);
    ParamDist beta_churn = ParamDist::uniform(0.05, 0.3);

    /// Baseline behaviour shared by every simulation.
    SimConfig base;

    void check() const;
};

/// Parameter ranges of the three-method comparison.
BenchSpec table1_spec();
/// T = 14, alpha_eff ~ N(0.1, 0.07), alpha_churn ~ N(0.2, 0.07),
/// beta_eff = beta_churn = 1/3.
BenchSpec scenario2_spec();

struct MethodSimResult {
    bool ok = false;
    std::string failure;
    double ci_width = 0.0;
    double lte = 0.0;
    double derlv = 0.0;
    double abs_err_lte = 0.0;
    double abs_err_derlv = 0.0;
};

struct SimRow {
    int sim = 0;
    SimConfig config;
    double true_lte = 0.0;
    double true_derlv = 0.0;
    int erlv_horizon = 0;
    bool ok = false;
    std::string failure;

    // table1 scenario
    std::map<Method, MethodSimResult> methods;

    // scenario2
    double ste = 0.0;
    double ste_std = 0.0;
    double lte = 0.0;
    double lte_lo = 0.0;
    double lte_hi = 0.0;
    double derlv = 0.0;
    double derlv_lo = 0.0;
    double derlv_hi = 0.0;
    /// Multi-cohort arm-level curves by elapsed day: metric T, metric C,
    /// metric x presence T, metric x presence C.
    std::vector<std::array<double, 4>> curves;
};

struct Summary {
    int n = 0;
    double mean = 0.0;
    double std = 0.0;
};

Summary summarize(const std::vector<double>& values);

struct MethodAggregate {
    int succeeded = 0;
    int failed = 0;
    Summary ci_width;
    Summary mae_lte;
    Summary mae_derlv;
};

struct BenchReport {
    Scenario scenario = Scenario::Table1;
    BenchSpec spec;
    std::vector<SimRow> rows;
    int failed_sims = 0;

    // table1 scenario
    std::map<Method, MethodAggregate> methods;
    /// Ratio of mean CI widths, MC over each baseline.
    std::map<Method, double> width_ratio_mc;
    /// Sims in which width(MC) < width(CCD) < width(DiD).
    int width_order_holds = 0;

    // scenario2
    Summary ste;
    Summary lte;
    Summary derlv;
    int lte_ci_covers_zero = 0;
    int ste_ci_covers_zero = 0;
    int derlv_ci_covers_zero = 0;
    int negative_alpha_draws = 0;
};

/// Draws the configuration of simulation `sim` from the spec.
SimConfig draw_sim_config(const BenchSpec& spec, int sim);

BenchReport run_table1(const BenchSpec& spec);
BenchReport run_scenario2(const BenchSpec& spec);
BenchReport run_bench(const BenchSpec& spec);

}  // namespace cohortlte
