#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace exostitch {

enum class IndexBackend { linear, kd_tree };

struct IndexPoint {
    std::size_t id = 0;
    int time_step = 0;
    int group = 0; // action branch for full-state search, 0 otherwise
    std::vector<double> coords;
};

struct NearestHit {
    std::size_t id = 0;
    double squared_distance = 0.0;
};

/// Exact nearest-neighbor search over points bucketed by (time step, group).
///
/// The total squared distance of a point is
///     squared_euclidean(query, point) + (time_offset(dt) + group_offset[group])
/// and the result is the lexicographic minimum of (distance, id), so ties go to
/// the lowest insertion id. Both backends return identical answers; the
/// kd-tree only prunes subtrees whose lower bound is strictly worse.
class NearestIndex {
public:
    using Accept = std::function<bool(std::size_t id)>;
    /// Additive term for |t - t'|; nullopt means the bucket is infeasible.
    using TimeOffset = std::function<std::optional<double>(int dt)>;

    NearestIndex();
    NearestIndex(std::vector<IndexPoint> points, IndexBackend backend, std::size_t leaf_size = 8);
    NearestIndex(NearestIndex&&) noexcept;
    NearestIndex& operator=(NearestIndex&&) noexcept;
    ~NearestIndex();

    struct Query {
        std::span<const double> coords;
        int time_step = 0;
        TimeOffset time_offset;                 // empty: hard match on time step
        std::span<const double> group_offsets;  // empty: all groups at offset 0
    };

    std::optional<NearestHit> nearest(const Query& q, const Accept& accept) const;

    /// All accepted points in one time bucket (any group), nearest first.
    std::vector<NearestHit> k_nearest(std::span<const double> coords, int time_step, std::size_t k,
                                      const Accept& accept) const;

    std::size_t size() const { return n_points_; }
    std::size_t bucket_size(int time_step) const;
    IndexBackend backend() const { return backend_; }

    std::uint64_t distance_evaluations() const { return evals_.load(std::memory_order_relaxed); }
    std::uint64_t feature_comparisons() const { return comparisons_.load(std::memory_order_relaxed); }
    void reset_counters() const;

private:
    struct Bucket;

    IndexBackend backend_ = IndexBackend::linear;
    std::size_t n_points_ = 0;
    std::map<std::pair<int, int>, std::unique_ptr<Bucket>> buckets_;
    mutable std::atomic<std::uint64_t> evals_{0};
    mutable std::atomic<std::uint64_t> comparisons_{0};
};

} // namespace exostitch
