#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "cohortlte/bench.hpp"
#include "cohortlte/report_io.hpp"

using namespace cohortlte;

namespace {

std::string serialize(const BenchReport& r) {
    std::ostringstream rows;
    write_bench_rows_csv(rows, r);
    return bench_report_to_json(r).dump() + rows.str();
}

}  // namespace

TEST_CASE("single simulation is reproducible") {
    auto spec = table1_spec();
    spec.n_sims = 1;
    spec.n_users = 3000;
    spec.seed = 5;
    const auto a = serialize(run_bench(spec));
    CHECK(a == serialize(run_bench(spec)));
    spec.seed = 6;
    CHECK(a != serialize(run_bench(spec)));
}

TEST_CASE("table1 report does not depend on the thread count") {
    auto spec = table1_spec();
    spec.n_sims = 4;
    spec.n_users = 2000;
    spec.jobs = 1;
    const auto a = serialize(run_bench(spec));
    spec.jobs = 3;
    CHECK(a == serialize(run_bench(spec)));
}

TEST_CASE("table1 aggregates") {
    auto spec = table1_spec();
    spec.n_sims = 6;
    spec.n_users = 5000;
    const auto r = run_table1(spec);
    CHECK(r.rows.size() == 6);
    for (const auto& row : r.rows) {
        CHECK(row.config.T >= 7);
        CHECK(row.config.T <= 14);
        CHECK(row.erlv_horizon == row.config.T);
        CHECK(row.true_lte == 0.0);
    }
    for (const auto& [m, agg] : r.methods) {
        CHECK(agg.succeeded + agg.failed == 6);
        CHECK(agg.ci_width.mean >= 0.0);
        CHECK(agg.mae_lte.mean >= 0.0);
        CHECK(agg.mae_derlv.mean >= 0.0);
    }
    CHECK(r.width_ratio_mc.at(Method::CCD) < 1.0);
    CHECK(r.width_ratio_mc.at(Method::DiD) < 1.0);
}

TEST_CASE("parameter draws follow the spec") {
    auto spec = scenario2_spec();
    int negative = 0;
    for (int i = 0; i < 200; ++i) {
        const auto c = draw_sim_config(spec, i);
        CHECK(c.T == 14);
        CHECK(c.beta_eff == doctest::Approx(1.0 / 3.0));
        negative += c.alpha_eff < 0;
    }
    // N(0.1, 0.07) is negative about 7.7% of the time
    CHECK(negative > 3);
    CHECK(negative < 35);
    CHECK(draw_sim_config(spec, 3).seed == draw_sim_config(spec, 3).seed);
    CHECK(draw_sim_config(spec, 3).seed != draw_sim_config(spec, 4).seed);
}

TEST_CASE("null scenario2 intervals cover zero") {
    auto spec = scenario2_spec();
    spec.n_sims = 4;
    spec.n_users = 4000;
    spec.bootstrap = 60;
    spec.alpha_eff = ParamDist::fixed(0.0);
    spec.alpha_churn = ParamDist::fixed(0.0);
    const auto r = run_scenario2(spec);
    CHECK(r.failed_sims == 0);
    CHECK(r.lte_ci_covers_zero == 4);
    CHECK(r.derlv_ci_covers_zero == 4);
    CHECK(r.ste_ci_covers_zero == 4);
    std::ostringstream curves;
    write_bench_curves_csv(curves, r);
    CHECK(curves.str().find("t,") == 0);
}

TEST_CASE("spec json round trip and validation") {
    auto spec = scenario2_spec();
    spec.n_sims = 7;
    spec.horizon = 20;
    const auto j = bench_spec_to_json(spec);
    const auto back = bench_spec_from_json(j);
    CHECK(bench_spec_to_json(back) == j);
    CHECK_THROWS_AS(bench_spec_from_json(json{{"scenario", "table1"}, {"n_sims", 0}}), ConfigError);
    CHECK_THROWS(bench_spec_from_json(json{{"scenario", "nope"}}));
    CHECK_THROWS(bench_spec_from_json(
        json{{"scenario", "table1"}, {"alpha_eff", {{"dist", "uniform"}, {"low", 1}, {"high", 0}}}}));
}
