#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>

#include "cohortlte/estimators.hpp"
#include "cohortlte/simulate.hpp"
#include "support.hpp"

using namespace cohortlte;

namespace {

CohortCell make_cell(Arm arm, int t0, int t, double mean, double var) {
    CohortCell c;
    c.arm = arm;
    c.t0 = t0;
    c.t = t;
    c.n = 10;
    c.mean = mean;
    c.var_of_mean = var;
    c.usable = true;
    return c;
}

void put(CohortPanel& p, const CohortCell& c) { p.cell(c.arm, c.t0, c.t) = c; }

}  // namespace

TEST_CASE("ccd learning from two cells") {
    CohortPanel p(4, PanelMode::Metric);
    put(p, make_cell(Arm::Treatment, 0, 2, 3.0, 0.5));
    put(p, make_cell(Arm::Treatment, 2, 2, 1.0, 0.5));
    const auto e = ccd_learning(p, 2);
    REQUIRE(e);
    CHECK(e->value == 2.0);
    CHECK(e->variance == 1.0);
    CHECK_FALSE(ccd_learning(p, 1));
}

TEST_CASE("did learning from four cells") {
    CohortPanel p(4, PanelMode::Metric);
    put(p, make_cell(Arm::Treatment, 0, 0, 5.0, 0.1));
    put(p, make_cell(Arm::Treatment, 0, 3, 7.0, 0.1));
    put(p, make_cell(Arm::Control, 0, 0, 5.0, 0.1));
    put(p, make_cell(Arm::Control, 0, 3, 6.0, 0.1));
    const auto e = did_learning(p, 3);
    REQUIRE(e);
    CHECK(e->value == 1.0);
    CHECK(e->variance == doctest::Approx(0.4));
}

TEST_CASE("paired covariance reduces the did variance") {
    CohortPanel p(4, PanelMode::Metric);
    auto t0 = make_cell(Arm::Treatment, 0, 0, 5.0, 0.1);
    t0.cov_with_entry = 0.1;
    auto t3 = make_cell(Arm::Treatment, 0, 3, 7.0, 0.1);
    t3.cov_with_entry = 0.05;
    put(p, t0);
    put(p, t3);
    put(p, make_cell(Arm::Control, 0, 0, 5.0, 0.1));
    put(p, make_cell(Arm::Control, 0, 3, 6.0, 0.1));
    CHECK(did_learning(p, 3)->variance == doctest::Approx(0.3));
    CHECK(cell_covariance(t3, t0) == 0.05);
    CHECK(cell_covariance(t0, t3) == 0.05);
    CHECK(cell_covariance(t3, t3) == 0.1);
    CHECK(cell_covariance(t3, make_cell(Arm::Treatment, 3, 3, 0, 0.1)) == 0.0);
}

TEST_CASE("t = 0 learning is exactly zero") {
    const auto log = testing::random_log(1, 200, 6);
    const auto p = build_panel(log, 6, PanelMode::Metric);
    CHECK(ccd_learning(p, 0)->value == 0.0);
    CHECK(did_learning(p, 0)->value == 0.0);
    CHECK(multicohort_estimate(p, 0, DiffMode::Learning)->value == 0.0);
}

TEST_CASE("delta_k examples") {
    CohortPanel p(5, PanelMode::Metric);
    put(p, make_cell(Arm::Treatment, 1, 3, 4.0, 0.25));
    put(p, make_cell(Arm::Treatment, 3, 3, 3.0, 0.75));
    const auto e = delta_k(p, 2, 1, DiffMode::Learning);
    REQUIRE(e);
    CHECK(e->value == 1.0);
    CHECK(e->variance == 1.0);
    CHECK(e->k_used == std::vector<int>{1});

    put(p, make_cell(Arm::Treatment, 4, 4, 2.5, 0.3));
    const auto arm = delta_k(p, 0, 4, DiffMode::ArmTreatment);
    REQUIRE(arm);
    CHECK(arm->value == 2.5);
    CHECK(arm->variance == 0.3);

    CHECK_THROWS_AS(delta_k(p, 2, 3, DiffMode::Learning), std::out_of_range);
    CHECK_FALSE(delta_k(p, 0, 0, DiffMode::Effect));
}

TEST_CASE("two-term inverse-variance combination") {
    CohortPanel p(3, PanelMode::Metric);
    // effect mode at t = 1: k = 0 uses day 1 cohort 0, k = 1 uses day 2 cohort 1
    put(p, make_cell(Arm::Treatment, 0, 1, 2.0, 0.5));
    put(p, make_cell(Arm::Control, 0, 1, 0.0, 0.5));
    put(p, make_cell(Arm::Treatment, 1, 2, 4.0, 2.0));
    put(p, make_cell(Arm::Control, 1, 2, 0.0, 2.0));
    const auto e = multicohort_estimate(p, 1, DiffMode::Effect);
    REQUIRE(e);
    CHECK(e->weights[0] == doctest::Approx(0.8));
    CHECK(e->weights[1] == doctest::Approx(0.2));
    CHECK(e->value == doctest::Approx(2.4));
    CHECK(e->variance == doctest::Approx(0.8));
    CHECK(e->k_used == std::vector<int>{0, 1});
}

TEST_CASE("equal variances give the plain mean") {
    CohortPanel p(4, PanelMode::Metric);
    const double vals[] = {1.0, 2.5, 6.0};
    for (int k = 0; k < 3; ++k) put(p, make_cell(Arm::Control, k, k + 1, vals[k], 0.3));
    const auto e = multicohort_estimate(p, 1, DiffMode::ArmControl);
    REQUIRE(e);
    CHECK(e->value == doctest::Approx((1.0 + 2.5 + 6.0) / 3));
    CHECK(e->variance == doctest::Approx(0.1));
}

TEST_CASE("restricting to k = 0 reproduces ccd exactly") {
    const auto log = testing::random_log(2, 300, 7);
    const auto p = build_panel(log, 7, PanelMode::Metric);
    for (int t = 0; t < 7; ++t) {
        const auto a = multicohort_estimate(p, t, DiffMode::Learning, 0);
        const auto b = ccd_learning(p, t);
        REQUIRE(a.has_value() == b.has_value());
        if (!a) continue;
        CHECK(a->value == b->value);
        CHECK(a->variance == b->variance);
    }
}

TEST_CASE("estimates match the brute-force reference") {
    for (std::uint64_t seed : {3u, 4u}) {
        const int T = 7;
        const auto log = testing::random_log(seed, 40, T);
        const auto p = build_panel(log, T, PanelMode::Metric);
        for (DiffMode mode : {DiffMode::Learning, DiffMode::Effect, DiffMode::ArmTreatment,
                              DiffMode::ArmControl}) {
            for (int t = 0; t < T; ++t) {
                for (int k = 0; t + k < T; ++k) {
                    const auto got = delta_k(p, t, k, mode);
                    const auto want = testing::ref_delta(log, T, t, k, mode);
                    REQUIRE(got.has_value() == want.has_value());
                    if (!got) continue;
                    CHECK(std::abs(got->value - want->value) <= 1e-12);
                    CHECK(std::abs(got->variance - want->variance) <= 1e-12);
                }
                const auto got = multicohort_estimate(p, t, mode);
                const auto want = testing::ref_multicohort(log, T, t, mode);
                REQUIRE(got.has_value() == want.has_value());
                if (!got) continue;
                CHECK(got->k_used == want->ks);
                for (std::size_t i = 0; i < want->weights.size(); ++i) {
                    CHECK(std::abs(got->weights[i] - want->weights[i]) <= 1e-12);
                }
                CHECK(std::abs(got->value - want->value) <= 1e-12);
                CHECK(std::abs(got->variance - want->variance) <= 1e-12);
            }
        }
    }
}

TEST_CASE("did matches a brute-force reference") {
    const int T = 6;
    const auto log = testing::random_log(8, 60, T);
    const auto p = build_panel(log, T, PanelMode::Metric);
    for (int t = 1; t < T; ++t) {
        const auto e = did_learning(p, t);
        const auto a = testing::ref_cell(log, PanelMode::Metric, Arm::Treatment, 0, t);
        const auto a0 = testing::ref_cell(log, PanelMode::Metric, Arm::Treatment, 0, 0);
        const auto b = testing::ref_cell(log, PanelMode::Metric, Arm::Control, 0, t);
        const auto b0 = testing::ref_cell(log, PanelMode::Metric, Arm::Control, 0, 0);
        REQUIRE(e.has_value() == (a.usable && a0.usable && b.usable && b0.usable));
        if (!e) continue;
        const double v = a.var_of_mean + a0.var_of_mean - 2 * a.cov_with_entry + b.var_of_mean +
                         b0.var_of_mean - 2 * b.cov_with_entry;
        CHECK(std::abs(e->value - ((a.mean - a0.mean) - (b.mean - b0.mean))) <= 1e-12);
        CHECK(std::abs(e->variance - testing::floor_var(v)) <= 1e-12);
    }
}

TEST_CASE("weights sum to one and the combination dominates every part") {
    for (std::uint64_t seed = 10; seed < 30; ++seed) {
        const int T = 5 + static_cast<int>(seed % 6);
        const auto log = testing::random_log(seed, 150, T);
        const auto p = build_panel(log, T, PanelMode::Metric);
        for (DiffMode mode : {DiffMode::Learning, DiffMode::Effect}) {
            for (int t = 0; t < T; ++t) {
                const auto e = multicohort_estimate(p, t, mode);
                if (!e) continue;
                const double total = std::accumulate(e->weights.begin(), e->weights.end(), 0.0);
                CHECK(std::abs(total - 1.0) <= 1e-12);
                for (int k : e->k_used) {
                    CHECK(e->variance <= delta_k(p, t, k, mode)->variance * (1 + 1e-12));
                }
            }
        }
    }
}

TEST_CASE("multi-cohort variance is below ccd and did on simulated data") {
    SimConfig cfg;
    cfg.n_users = 4000;
    cfg.alpha_eff = 0.1;
    cfg.seed = 5;
    const auto log = generate(cfg);
    const auto p = build_panel(log, cfg.T, PanelMode::Metric);
    for (int t = 1; t < cfg.T; ++t) {
        const auto mc = multicohort_estimate(p, t, DiffMode::Learning);
        REQUIRE(mc);
        CHECK(mc->variance <= ccd_learning(p, t)->variance);
        CHECK(mc->variance <= did_learning(p, t)->variance);
    }
}

TEST_CASE("affine shift of treated metrics") {
    const int T = 6;
    auto log = testing::random_log(12, 400, T);
    const auto p = build_panel(log, T, PanelMode::Metric);
    for (auto& r : log) {
        if (r.arm != Arm::Treatment) continue;
        for (auto& o : r.observations) o.metric += 2.0;
    }
    const auto q = build_panel(log, T, PanelMode::Metric);
    for (int t = 0; t < T; ++t) {
        for (int k = 0; t + k < T; ++k) {
            const auto a = delta_k(p, t, k, DiffMode::Learning);
            if (a) CHECK(delta_k(q, t, k, DiffMode::Learning)->value == doctest::Approx(a->value).epsilon(1e-12));
            const auto b = delta_k(p, t, k, DiffMode::Effect);
            if (b) CHECK(delta_k(q, t, k, DiffMode::Effect)->value - b->value == doctest::Approx(2.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("series structure") {
    const auto log = testing::random_log(6, 500, 8);
    const auto p = build_panel(log, 8, PanelMode::Metric);
    for (const auto& c : {multicohort_series(p, DiffMode::Learning), ccd_series(p), did_series(p),
                          first_cohort_series(p, Arm::Control, Method::CCD)}) {
        CHECK(c.points.size() <= 8);
        for (std::size_t i = 1; i < c.points.size(); ++i) CHECK(c.points[i - 1].t < c.points[i].t);
        CHECK(c.fittable == (c.points.size() >= kMinFitPoints));
        CHECK(c.mean_ci_width() >= 0.0);
    }
}

TEST_CASE("null learning curve stays near zero") {
    SimConfig cfg;
    cfg.n_users = 10000;
    cfg.seed = 77;
    const auto log = generate(cfg);
    const auto p = build_panel(log, cfg.T, PanelMode::Metric);
    const auto c = multicohort_series(p, DiffMode::Learning);
    for (const auto& pt : c.points) CHECK(std::abs(pt.estimate.value) <= 4 * pt.estimate.std_error());
}
