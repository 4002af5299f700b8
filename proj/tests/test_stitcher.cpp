#include "exostitch/benchmarks.hpp"
#include "exostitch/stitcher.hpp"

#include <doctest.h>

#include <set>

using namespace exostitch;

namespace {

using DbPtr = std::shared_ptr<const TransitionDatabase>;

// Two behavior trajectories on the grid: T0 goes right from (0,0), T1 goes up
// from (0,3).
DbPtr two_trajectory_grid(DbMode mode, int h) {
    const GridWorld g;
    auto db = std::make_shared<TransitionDatabase>(mode, g, h);
    const std::pair<std::vector<double>, ActionId> behaviors[] = {{{0, 0}, GridWorld::right}, {{0, 3}, GridWorld::up}};
    for (const auto& [start, action] : behaviors) {
        db->begin_trajectory({PolicyClass::constant, {static_cast<double>(action.index)}});
        MarkovState x{start, 0};
        for (int t = 0; t < h; ++t) {
            const ExogenousDraw draw{};
            if (mode == DbMode::debiased) {
                TransitionSet s;
                s.x = x;
                for (int a = 0; a < 2; ++a) {
                    const auto res = step(g, x, ActionId{a}, draw);
                    s.outcomes.push_back({ActionId{a}, res.reward, res.next.features});
                }
                db->append_set(s, action);
            } else {
                const auto res = step(g, x, action, draw);
                db->append_tuple({0, x, {}, action, res.reward, res.next, {}});
            }
            x = step(g, x, action, draw).next;
        }
    }
    db->refresh_stats();
    return db;
}

std::vector<std::size_t> trajectories_used(const Stitcher& s, const ExclusionLedger& ledger) {
    std::vector<std::size_t> out;
    for (auto id : ledger.history()) out.push_back(s.database().trajectory_of(s.record_of(id)));
    return out;
}

DbPtr ember_db(DbMode mode, std::size_t grid_points, int h, std::uint64_t seed) {
    Rng rng(seed);
    return std::make_shared<const TransitionDatabase>(seed_policy_grid(
        EmberMdp{}, PolicyClass::intensity, grid_of_size({0, 100}, {0, 180}, grid_points), h, rng, mode));
}

} // namespace

TEST_SUITE("stitcher") {

TEST_CASE("gridworld: debiased stays on the rightward trajectory, biased hops") {
    const int h = 5;
    const Policy up{PolicyClass::constant, {0}};
    const auto start = fixed_starts({{0, 0}, 0}, 1);

    const auto deb = two_trajectory_grid(DbMode::debiased, h);
    const Stitcher sd(deb, Algorithm::mfmci, markov_metric(*deb));
    ExclusionLedger ld;
    const auto td = sd.trajectory(up, h, start[0], ld);
    CHECK(trajectories_used(sd, ld) == std::vector<std::size_t>(h, 0));
    // Counterfactual "up" branches of the rightward sets: (1, t-1).
    CHECK(td.steps[0].x.features == std::vector<double>{0, 0});
    for (int t = 1; t < h; ++t) CHECK(td.steps[t].x.features == std::vector<double>{1, t - 1.0});
    for (const auto& s : td.steps) CHECK(s.a == GridWorld::up);

    const auto bia = two_trajectory_grid(DbMode::biased, h);
    const Stitcher sb(bia, Algorithm::mfmci_biased, markov_metric(*bia));
    ExclusionLedger lb;
    const auto tb = sb.trajectory(up, h, start[0], lb);
    CHECK(trajectories_used(sb, lb) == std::vector<std::size_t>(h, 1));
    for (int t = 1; t < h; ++t) CHECK(tb.steps[t].x.features == std::vector<double>{static_cast<double>(t), 3});
    for (const auto& s : tb.steps) CHECK(s.a == GridWorld::up);

    // MFMC on the debiased db adopts the up branch of the nearest set as well.
    const Stitcher sm(deb, Algorithm::mfmc, full_metric(*deb));
    ExclusionLedger lm;
    const auto tm = sm.trajectory(up, h, start[0], lm);
    for (const auto& s : tm.steps) CHECK(s.a == GridWorld::up);
    // The grid only pays on its own final step (t = 9).
    for (const auto& st : td.steps) CHECK(st.r == 0.0);
    for (const auto& st : tb.steps) CHECK(st.r == 0.0);
}

TEST_CASE("zero-distance reproduction of the behavior trajectories") {
    const Policy behavior{PolicyClass::intensity, {50, 90}};
    const int h = 8;
    for (auto mode : {DbMode::debiased, DbMode::biased}) {
        Rng rng(21);
        auto db = std::make_shared<const TransitionDatabase>(
            mode == DbMode::debiased ? populate_debiased(EmberMdp{}, behavior, 6, h, rng)
                                     : populate_biased(EmberMdp{}, behavior, 6, h, rng));
        std::vector<Algorithm> algos{Algorithm::mfmc};
        algos.push_back(mode == DbMode::debiased ? Algorithm::mfmci : Algorithm::mfmci_biased);
        for (auto algo : algos) {
            const auto metric = algo == Algorithm::mfmc ? full_metric(*db) : markov_metric(*db);
            const Stitcher s(db, algo, metric);
            std::vector<StartState> starts;
            for (const auto& p : db->provenance()) starts.push_back({db->state(p.first), db->exogenous(p.first)});
            ExclusionLedger ledger;
            const auto set = s.trajectory_set(behavior, h, starts, ledger);
            for (std::size_t i = 0; i < set.size(); ++i) {
                const auto& p = db->provenance()[i];
                for (int t = 0; t < h; ++t) {
                    const auto rec = p.first + static_cast<std::size_t>(t);
                    const auto& st = set.trajectories[i].steps[static_cast<std::size_t>(t)];
                    CHECK(st.x == db->state(rec));
                    CHECK(st.a == db->realized_action(rec));
                    const double r = mode == DbMode::debiased ? db->sets()[rec].branch(st.a).reward
                                                              : db->tuples()[rec].r;
                    CHECK(st.r == r);
                }
            }
            CHECK(ledger.size() == 6u * h);
        }
    }
}

TEST_CASE("ledger: no record is used twice and exhaustion is reported") {
    const auto db = ember_db(DbMode::debiased, 10, 6, 4);
    const Stitcher s(db, Algorithm::mfmci, markov_metric(*db));
    Rng rng(5);
    const Policy pi{PolicyClass::fuel, {0.3}};

    // n*h == |D| consumes every set exactly once.
    ExclusionLedger ledger;
    const auto starts = sampled_starts(EmberMdp{}, 10, rng);
    const auto set = s.trajectory_set(pi, 6, starts, ledger);
    CHECK(set.size() == 10);
    CHECK(ledger.size() == db->size());
    const std::set<std::size_t> unique(ledger.history().begin(), ledger.history().end());
    CHECK(unique.size() == db->size());

    // One more trajectory has nothing left.
    try {
        s.trajectory_set(pi, 6, sampled_starts(EmberMdp{}, 1, rng), ledger);
        FAIL("expected exhaustion");
    } catch (const ExhaustionError& e) {
        CHECK(e.code() == ErrorCode::exhaustion);
        CHECK(e.time_step() == 0);
        CHECK(e.trajectories_completed() == 0);
    }
    ExclusionLedger fresh;
    try {
        s.trajectory_set(pi, 6, sampled_starts(EmberMdp{}, 11, rng), fresh);
        FAIL("expected exhaustion");
    } catch (const ExhaustionError& e) {
        CHECK(e.trajectories_completed() == 10);
    }
    ExclusionLedger all;
    for (std::size_t i = 0; i < db->size(); ++i) all.exclude(i);
    CHECK_THROWS_AS(nearest_set(*db, {{0.5, 0.5}, 0}, markov_metric(*db), all), ExhaustionError);
}

TEST_CASE("kd-tree and linear stitching agree with the linear nearest_set") {
    const auto db = ember_db(DbMode::debiased, 40, 10, 8);
    const auto metric = markov_metric(*db);
    const Stitcher kd(db, Algorithm::mfmci, metric, {IndexBackend::kd_tree});
    const Stitcher lin(db, Algorithm::mfmci, metric, {IndexBackend::linear});
    Rng rng(9);
    const auto starts = sampled_starts(EmberMdp{}, 20, rng);
    const Policy pi{PolicyClass::location, {0.5}};
    CHECK(kd.trajectory_set(pi, 10, starts) == lin.trajectory_set(pi, 10, starts));

    ExclusionLedger ledger;
    for (int i = 0; i < 50; ++i) {
        const MarkovState x{{uniform01(rng), uniform01(rng)}, i % 10};
        const auto id = kd.match(x, {}, pi, ledger);
        REQUIRE(id.has_value());
        CHECK(*id == nearest_set(*db, x, metric, ledger).set_id);
        ledger.exclude(*id);
    }
}

TEST_CASE("biased MFMCi only adopts action-consistent tuples") {
    const auto db = ember_db(DbMode::biased, 60, 10, 12);
    const Stitcher s(db, Algorithm::mfmci_biased, markov_metric(*db));
    Rng rng(13);
    const Policy pi{PolicyClass::location, {0.5}};
    ExclusionLedger ledger;
    s.trajectory_set(pi, 10, sampled_starts(EmberMdp{}, 20, rng), ledger);
    for (auto id : ledger.history()) {
        const auto& t = db->tuples()[s.record_of(id)];
        CHECK(t.a == evaluate_policy(pi, t.x, t.w));
    }
}

TEST_CASE("MFMC full-tuple ledger ids and determinism") {
    const auto db = ember_db(DbMode::debiased, 20, 10, 14);
    const Stitcher s(db, Algorithm::mfmc, full_metric(*db));
    CHECK(s.record_of(7) == 3);
    Rng a(15), b(15);
    const Policy pi{PolicyClass::intensity, {70, 100}};
    const auto s1 = s.trajectory_set(pi, 10, sampled_starts(EmberMdp{}, 15, a));
    const auto s2 = s.trajectory_set(pi, 10, sampled_starts(EmberMdp{}, 15, b));
    CHECK(s1 == s2);
    for (const auto& tr : s1.trajectories) {
        for (const auto& st : tr.steps) CHECK(st.a == evaluate_policy(pi, st.x, st.w));
    }
}

TEST_CASE("algorithm and database compatibility") {
    const auto deb = ember_db(DbMode::debiased, 4, 3, 1);
    const auto bia = ember_db(DbMode::biased, 4, 3, 1);
    CHECK_THROWS_AS(Stitcher(bia, Algorithm::mfmci, markov_metric(*bia)), Error);
    CHECK_THROWS_AS(Stitcher(deb, Algorithm::mfmci_biased, markov_metric(*deb)), Error);
    CHECK_THROWS_AS(Stitcher(deb, Algorithm::mfmc, markov_metric(*deb), {IndexBackend::kd_tree, true}), Error);
    CHECK(parse_algorithm("mfmci_biased") == Algorithm::mfmci_biased);
    CHECK(to_string(Algorithm::mfmc) == "mfmc");
    CHECK_THROWS_AS(parse_algorithm("nope"), Error);
    const Stitcher s(deb, Algorithm::mfmci, markov_metric(*deb));
    CHECK_THROWS_AS(s.trajectory({PolicyClass::fuel, {0.1}}, 4, fixed_starts({{0.1, 0.5}, 0}, 1)[0],
                                 *std::make_unique<ExclusionLedger>()),
                    Error);
}

}
