#include "exostitch/benchmarks.hpp"
#include "exostitch/estimators.hpp"
#include "oracle.hpp"

#include <doctest.h>

using namespace exostitch;

namespace {

// One Markov variable "v"; series[i] is trajectory i's values over time.
TrajectorySet series_set(const std::vector<std::vector<double>>& series, const std::vector<double>& rewards = {}) {
    TrajectorySet ts;
    ts.markov_names = {"v"};
    for (const auto& s : series) {
        Trajectory tr;
        for (std::size_t t = 0; t < s.size(); ++t) {
            tr.steps.push_back({{{s[t]}, static_cast<int>(t)}, {}, ActionId{0}, rewards.empty() ? 0.0 : rewards[t]});
        }
        ts.trajectories.push_back(tr);
    }
    return ts;
}

} // namespace

TEST_SUITE("estimators") {

TEST_CASE("value estimate") {
    CHECK(value_estimate(series_set({{0, 0, 0}}, {1, 2, 3})) == 6.0);
    auto ts = series_set({{0, 0}, {0, 0}});
    ts.trajectories[0].steps[0].r = 4;
    ts.trajectories[1].steps[1].r = 8;
    CHECK(value_estimate(ts) == 6.0);
    CHECK(return_stddev(ts) == doctest::Approx(std::sqrt(8.0)));
    CHECK_THROWS_AS(value_estimate(TrajectorySet{}), Error);
}

TEST_CASE("quantiles") {
    const std::vector<double> xs{1, 2, 3, 4, 5};
    CHECK(quantile_sorted(xs, 0.5) == 3.0);
    CHECK(quantile_sorted(xs, 0.0) == 1.0);
    CHECK(quantile_sorted(xs, 1.0) == 5.0);
    CHECK(quantile_sorted(xs, 0.1) == doctest::Approx(1.4));
    const std::vector<double> even{1, 2, 3, 4};
    CHECK(quantile_sorted(even, 0.5) == oracle::median(even));
    CHECK(decile_levels().size() == 11);
    CHECK(decile_levels().front() == 0.0);
    CHECK(decile_levels()[1] == doctest::Approx(0.1));
    CHECK(decile_levels().back() == 1.0);

    const auto one = fan_chart(series_set({{3, 7, 9}}), "v");
    for (const auto& row : one.values) {
        for (double v : row) CHECK(v == row.front());
    }
    Rng rng(3);
    const auto truth = rollout_ground_truth(EmberMdp{}, {PolicyClass::fuel, {0.3}}, 40, 10, rng);
    const auto fc = fan_chart(truth, "cumulative_reward");
    CHECK(fc.time_steps.size() == 10);
    for (const auto& row : fc.values) {
        for (std::size_t l = 1; l < row.size(); ++l) CHECK(row[l - 1] <= row[l]);
    }
    CHECK_THROWS_AS(fan_chart(truth, "nope"), Error);
}

TEST_CASE("visual fidelity error") {
    const std::vector<double> levels{0.0, 0.5, 1.0};
    const auto truth = series_set({{0, 0}, {10, 10}, {20, 20}});
    const auto surrogate = series_set({{12, 14}});
    const auto rep = visual_fidelity_error(truth, surrogate, {"v"}, levels);
    CHECK(rep.weighted_total == doctest::Approx(0.3));
    CHECK(rep.heights == std::vector<double>{20.0});
    CHECK(rep.errors[0] == std::vector<double>{2.0, 4.0});
    CHECK(visual_fidelity_error(truth, truth, {"v"}, levels).weighted_total == 0.0);

    // Scale invariance.
    const auto t2 = series_set({{0, 0}, {20, 20}, {40, 40}});
    const auto s2 = series_set({{24, 28}});
    CHECK(visual_fidelity_error(t2, s2, {"v"}, levels).weighted_total == doctest::Approx(0.3));

    // A flat variable is excluded, not divided by zero.
    const auto flat = series_set({{1, 1}, {1, 1}});
    const auto r = visual_fidelity_error(flat, surrogate, {"v", "reward"}, levels);
    CHECK(r.variables.empty());
    CHECK(r.excluded == std::vector<std::string>{"v", "reward"});
    CHECK(r.weighted_total == 0.0);
}

TEST_CASE("bootstrap floor and random baseline") {
    Rng rng(1);
    const auto same = series_set({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
    CHECK(bootstrap_floor(same, {"v"}, 20, rng) == 0.0);
    const auto truth = rollout_ground_truth(EmberMdp{}, {PolicyClass::intensity, {75, 0}}, 30, 20, rng);
    CHECK(bootstrap_floor(truth, {"fuel", "canopy", "reward"}, 100, rng) > 0.0);

    Rng grng(2);
    const auto db = seed_policy_grid(EmberMdp{}, PolicyClass::intensity, grid_of_size({0, 100}, {0, 180}, 8), 5, grng,
                                     DbMode::debiased);
    const auto base = random_baseline(db, 8, rng);
    CHECK(base.size() == 8);
    std::vector<std::size_t> firsts;
    for (const auto& tr : base.trajectories) {
        // Each trajectory is a seed trajectory verbatim.
        std::size_t found = db.size();
        for (const auto& p : db.provenance()) {
            if (db.state(p.first) == tr.steps[0].x && db.exogenous(p.first) == tr.steps[0].w) found = p.first;
        }
        REQUIRE(found < db.size());
        firsts.push_back(found);
        for (std::size_t t = 0; t < tr.length(); ++t) {
            CHECK(tr.steps[t].x == db.state(found + t));
            CHECK(tr.steps[t].a == db.realized_action(found + t));
            CHECK(tr.steps[t].r == db.sets()[found + t].branch(tr.steps[t].a).reward);
        }
    }
    std::sort(firsts.begin(), firsts.end());
    CHECK(std::adjacent_find(firsts.begin(), firsts.end()) == firsts.end());
    CHECK_THROWS_AS(random_baseline(db, 9, rng), ExhaustionError);
}

TEST_CASE("k-dispersion") {
    TransitionDatabase db(DbMode::biased, "custom", {}, {"x"}, {}, {"a"}, 1);
    db.begin_trajectory({PolicyClass::constant, {0}});
    for (double v : {0.0, 1.0, 3.0}) db.append_tuple({0, {{v}, 0}, {}, ActionId{0}, 0.0, {{v}, 1}, {}});
    db.refresh_stats();
    auto m = markov_metric(db);
    m.standardize = false;
    CHECK(k_dispersion(db, 1, m) == 2.0);
    CHECK(k_dispersion(db, 1, m) == oracle::k_dispersion_1d({0, 1, 3}, 1));
    CHECK(k_dispersion(db, 2, m) == oracle::k_dispersion_1d({0, 1, 3}, 2));
    CHECK(k_dispersion(db, 1, m, std::vector<MarkovState>{{{1.0}, 0}}) == 0.0);
    CHECK(k_dispersion(db, 3, m, std::vector<MarkovState>{{{1.0}, 0}}) == 2.0);
    CHECK_THROWS_AS(k_dispersion(db, 3, m), Error);

    Rng rng(4);
    const auto big = populate_debiased(EmberMdp{}, {PolicyClass::fuel, {0.3}}, 40, 3, rng);
    const auto bm = markov_metric(big);
    double prev = 0.0;
    for (std::size_t k = 1; k <= 10; ++k) {
        const double a = k_dispersion(big, k, bm);
        CHECK(a >= prev);
        prev = a;
    }
}

TEST_CASE("bound constants agree with the double-sum oracle") {
    const double vals[] = {0.0, 0.5, 1.0, 2.0};
    for (int h = 1; h <= 10; ++h) {
        for (double a : vals) {
            for (double b : vals) {
                CHECK(mfmci_constant_Ci(a, b, h) == oracle::constant_Ci(a, b, h));
                for (double c : vals) CHECK(mfmc_constant_C(a, b, c, h) == oracle::constant_C(a, b, c, h));
            }
        }
    }
    CHECK(mfmc_constant_C(1, 1, 1, 3) == 11.0);
    CHECK(mfmci_constant_Ci(1, 1, 3) == 6.0);
    CHECK(mfmc_constant_C(0, 2, 2, 5) == 0.0);
    CHECK(mfmc_constant_C(1.5, 7, 3, 1) == 1.5);
    CHECK(mfmci_constant_Ci(2.5, 0.5, 1) == 2.5);
    CHECK(mfmci_constant_Ci(0.5, 2, 6) == mfmc_constant_C(0.5, 2, 0, 6));
    CHECK(bias_bound(2.0, 0.5) == 1.0);
    CHECK(variance_bound(3.0, 9, 2.0, 0.0) == 1.0);
    CHECK(variance_bound(3.0, 9, 2.0, 0.25) == 4.0);
    CHECK_THROWS_AS(mfmc_constant_C(-1, 1, 1, 3), Error);
    CHECK_THROWS_AS(mfmci_constant_Ci(1, 1, 0), Error);
    CHECK_THROWS_AS(bias_bound(1, -1), Error);
}

TEST_CASE("bound reports") {
    const LipschitzConstants L{1.0, 1.0, 1.0, 1.0, 1.0};
    const auto f = factored_bound_report(L, 3, 4, 0.5, 2.0);
    CHECK(f.C == 6.0);
    CHECK(f.bias == 3.0);
    CHECK(f.variance == doctest::Approx(49.0));
    const auto g = full_bound_report(L, 3, 4, 0.5, 2.0);
    CHECK(g.C == 11.0);
    CHECK(to_json(g)["C"] == 11.0);
}

}
