#include "exostitch/nearest_index.hpp"
#include "exostitch/benchmarks.hpp"
#include "exostitch/stitcher.hpp"

#include <doctest.h>

#include <random>

using namespace exostitch;

namespace {

std::vector<IndexPoint> random_points(std::size_t n, int buckets, int groups, std::mt19937_64& gen, bool lattice) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> k(0, 4);
    std::vector<IndexPoint> pts;
    for (std::size_t i = 0; i < n; ++i) {
        IndexPoint p;
        p.id = i;
        p.time_step = static_cast<int>(i % static_cast<std::size_t>(buckets));
        p.group = static_cast<int>(i / static_cast<std::size_t>(buckets)) % groups;
        for (int d = 0; d < 3; ++d) p.coords.push_back(lattice ? k(gen) : u(gen));
        pts.push_back(std::move(p));
    }
    return pts;
}

} // namespace

TEST_SUITE("nearest_index") {

TEST_CASE("kd-tree equals linear scan") {
    for (bool lattice : {false, true}) {
        std::mt19937_64 gen(lattice ? 11 : 7);
        auto pts = random_points(3000, 5, 2, gen, lattice);
        const NearestIndex lin(pts, IndexBackend::linear);
        const NearestIndex kd(pts, IndexBackend::kd_tree, 4);
        CHECK(kd.size() == 3000);
        CHECK(kd.bucket_size(2) == 600);
        std::uniform_real_distribution<double> u(-1.2, 1.2);
        std::uniform_int_distribution<int> k(0, 4);
        const std::vector<double> group_offsets{0.0, 0.25};
        for (int i = 0; i < 500; ++i) {
            std::vector<double> q;
            for (int d = 0; d < 3; ++d) q.push_back(lattice ? k(gen) : u(gen));
            NearestIndex::Query query{q, i % 5, {}, {}};
            if (i % 3 == 1) query.group_offsets = group_offsets;
            if (i % 3 == 2) query.time_offset = [](int dt) { return std::optional<double>(0.5 * dt * dt); };
            // Reject a pseudo-random third of the ids.
            const auto accept = [i](std::size_t id) { return (id * 2654435761u + static_cast<unsigned>(i)) % 3 != 0; };
            const auto a = lin.nearest(query, accept);
            const auto b = kd.nearest(query, accept);
            REQUIRE(a.has_value());
            REQUIRE(b.has_value());
            CHECK(a->id == b->id);
            CHECK(a->squared_distance == b->squared_distance);
        }
        CHECK(kd.distance_evaluations() < lin.distance_evaluations());
    }
}

TEST_CASE("ties go to the lowest id") {
    std::vector<IndexPoint> pts;
    for (std::size_t i = 0; i < 20; ++i) pts.push_back({i, 0, 0, {static_cast<double>(i % 2)}});
    for (auto backend : {IndexBackend::linear, IndexBackend::kd_tree}) {
        const NearestIndex idx(pts, backend, 2);
        const std::vector<double> q{1.0};
        CHECK(idx.nearest({q, 0, {}, {}}, [](std::size_t) { return true; })->id == 1);
        CHECK(idx.nearest({q, 0, {}, {}}, [](std::size_t id) { return id > 4; })->id == 5);
        CHECK_FALSE(idx.nearest({q, 1, {}, {}}, [](std::size_t) { return true; }).has_value());
        CHECK_FALSE(idx.nearest({q, 0, {}, {}}, [](std::size_t) { return false; }).has_value());
    }
}

TEST_CASE("k_nearest") {
    std::vector<IndexPoint> pts;
    for (std::size_t i = 0; i < 6; ++i) pts.push_back({i, 0, static_cast<int>(i % 2), {static_cast<double>(i)}});
    const NearestIndex idx(pts, IndexBackend::kd_tree);
    const std::vector<double> q{2.2};
    const auto hits = idx.k_nearest(q, 0, 3, [](std::size_t id) { return id != 2; });
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].id == 3);
    CHECK(hits[1].id == 1);
    CHECK(hits[2].id == 4);
}

TEST_CASE("MFMCi compares Markov features only") {
    Rng rng(2);
    auto db = std::make_shared<const TransitionDatabase>(
        seed_policy_grid(EmberMdp{}, PolicyClass::intensity, grid_of_size({0, 100}, {0, 180}, 20), 10, rng,
                         DbMode::debiased));
    const Stitcher s(db, Algorithm::mfmci, markov_metric(*db), {IndexBackend::linear});
    Rng qrng(3);
    const auto starts = sampled_starts(EmberMdp{}, 5, qrng);
    s.index().reset_counters();
    s.trajectory_set({PolicyClass::fuel, {0.5}}, 10, starts);
    CHECK(s.index().distance_evaluations() > 0);
    CHECK(s.index().feature_comparisons() == s.index().distance_evaluations() * 2);
}

}
