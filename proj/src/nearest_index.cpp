#include "exostitch/nearest_index.hpp"

#include "exostitch/error.hpp"
#include "exostitch/metric.hpp"

#include <algorithm>
#include <numeric>

namespace exostitch {

namespace {

struct Best {
    bool found = false;
    double d2 = 0.0;
    std::size_t id = 0;

    bool improves(double cand, std::size_t cand_id) const {
        return !found || cand < d2 || (cand == d2 && cand_id < id);
    }
    void take(double cand, std::size_t cand_id) {
        found = true;
        d2 = cand;
        id = cand_id;
    }
    // A subtree whose bound ties the incumbent can still hold a lower id.
    bool prunes(double bound) const { return found && bound > d2; }
};

struct Node {
    int dim = -1; // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    std::size_t begin = 0;
    std::size_t end = 0;
};

} // namespace

struct NearestIndex::Bucket {
    std::vector<IndexPoint> points;
    std::vector<std::size_t> order; // permutation used by the tree leaves
    std::vector<Node> nodes;

    int build(std::size_t begin, std::size_t end, std::size_t leaf_size) {
        Node node;
        node.begin = begin;
        node.end = end;
        const auto dims = points.empty() ? 0 : points.front().coords.size();
        if (end - begin <= leaf_size || dims == 0) {
            nodes.push_back(node);
            return static_cast<int>(nodes.size() - 1);
        }
        // Split on the widest dimension at the median.
        std::size_t best_dim = 0;
        double best_spread = -1.0;
        for (std::size_t d = 0; d < dims; ++d) {
            double lo = points[order[begin]].coords[d], hi = lo;
            for (std::size_t i = begin; i < end; ++i) {
                lo = std::min(lo, points[order[i]].coords[d]);
                hi = std::max(hi, points[order[i]].coords[d]);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        if (best_spread <= 0.0) {
            nodes.push_back(node);
            return static_cast<int>(nodes.size() - 1);
        }
        const auto mid = begin + (end - begin) / 2;
        std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(mid),
                         order.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             return points[a].coords[best_dim] < points[b].coords[best_dim];
                         });
        node.dim = static_cast<int>(best_dim);
        node.split = points[order[mid]].coords[best_dim];
        nodes.push_back(node);
        const int self = static_cast<int>(nodes.size() - 1);
        // Left holds coords <= split, right holds coords >= split.
        const int l = build(begin, mid, leaf_size);
        const int r = build(mid, end, leaf_size);
        nodes[static_cast<std::size_t>(self)].left = l;
        nodes[static_cast<std::size_t>(self)].right = r;
        return self;
    }
};

NearestIndex::NearestIndex(std::vector<IndexPoint> points, IndexBackend backend, std::size_t leaf_size)
    : backend_(backend), n_points_(points.size()) {
    for (auto& p : points) {
        auto& slot = buckets_[{p.time_step, p.group}];
        if (!slot) slot = std::make_unique<Bucket>();
        if (!slot->points.empty() && slot->points.front().coords.size() != p.coords.size()) {
            throw Error(ErrorCode::contract_violation, "index points have inconsistent dimension");
        }
        slot->points.push_back(std::move(p));
    }
    for (auto& [key, bucket] : buckets_) {
        // Insertion order inside a bucket follows id order; keep it sorted.
        std::stable_sort(bucket->points.begin(), bucket->points.end(),
                         [](const IndexPoint& a, const IndexPoint& b) { return a.id < b.id; });
        bucket->order.resize(bucket->points.size());
        std::iota(bucket->order.begin(), bucket->order.end(), std::size_t{0});
        if (backend_ == IndexBackend::kd_tree) bucket->build(0, bucket->points.size(), std::max<std::size_t>(1, leaf_size));
    }
}

NearestIndex::NearestIndex(NearestIndex&& o) noexcept
    : backend_(o.backend_), n_points_(o.n_points_), buckets_(std::move(o.buckets_)) {
    evals_.store(o.evals_.load());
    comparisons_.store(o.comparisons_.load());
}

NearestIndex& NearestIndex::operator=(NearestIndex&& o) noexcept {
    backend_ = o.backend_;
    n_points_ = o.n_points_;
    buckets_ = std::move(o.buckets_);
    evals_.store(o.evals_.load());
    comparisons_.store(o.comparisons_.load());
    return *this;
}

NearestIndex::NearestIndex() = default;
NearestIndex::~NearestIndex() = default;

std::size_t NearestIndex::bucket_size(int time_step) const {
    std::size_t n = 0;
    for (const auto& [key, bucket] : buckets_) {
        if (key.first == time_step) n += bucket->points.size();
    }
    return n;
}

void NearestIndex::reset_counters() const {
    evals_.store(0);
    comparisons_.store(0);
}

std::optional<NearestHit> NearestIndex::nearest(const Query& q, const Accept& accept) const {
    struct Candidate {
        double offset;
        const Bucket* bucket;
    };
    std::vector<Candidate> order;
    for (const auto& [key, bucket] : buckets_) {
        const auto [t, group] = key;
        double offset = 0.0;
        if (q.time_offset) {
            const auto tt = q.time_offset(t - q.time_step);
            if (!tt) continue;
            offset = *tt;
        } else if (t != q.time_step) {
            continue;
        }
        const double g = q.group_offsets.empty() ? 0.0 : q.group_offsets[static_cast<std::size_t>(group)];
        order.push_back({offset + g, bucket.get()});
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const Candidate& a, const Candidate& b) { return a.offset < b.offset; });

    Best best;
    std::uint64_t evals = 0;
    const auto dims = q.coords.size();

    auto consider = [&](const IndexPoint& p, double offset) {
        if (!accept(p.id)) return;
        ++evals;
        const double d2 = squared_euclidean(q.coords, p.coords) + offset;
        if (best.improves(d2, p.id)) best.take(d2, p.id);
    };

    for (const auto& c : order) {
        if (best.prunes(c.offset)) break;
        const auto& b = *c.bucket;
        if (!b.points.empty() && b.points.front().coords.size() != dims) {
            throw Error(ErrorCode::contract_violation, "query dimension does not match the index");
        }
        if (backend_ == IndexBackend::linear || b.nodes.empty()) {
            for (const auto& p : b.points) consider(p, c.offset);
            continue;
        }
        // Iterative depth-first search, nearer child first.
        std::vector<int> stack{0};
        std::vector<double> bounds{c.offset};
        while (!stack.empty()) {
            const int ni = stack.back();
            const double bound = bounds.back();
            stack.pop_back();
            bounds.pop_back();
            if (best.prunes(bound)) continue;
            const Node& node = b.nodes[static_cast<std::size_t>(ni)];
            if (node.dim < 0) {
                for (std::size_t i = node.begin; i < node.end; ++i) consider(b.points[b.order[i]], c.offset);
                continue;
            }
            const double diff = q.coords[static_cast<std::size_t>(node.dim)] - node.split;
            const double far_bound = diff * diff + c.offset;
            const int near = diff <= 0.0 ? node.left : node.right;
            const int far = diff <= 0.0 ? node.right : node.left;
            // Push far first so the near child is explored first.
            stack.push_back(far);
            bounds.push_back(std::max(bound, far_bound));
            stack.push_back(near);
            bounds.push_back(bound);
        }
    }

    evals_.fetch_add(evals, std::memory_order_relaxed);
    comparisons_.fetch_add(evals * dims, std::memory_order_relaxed);
    if (!best.found) return std::nullopt;
    return NearestHit{best.id, best.d2};
}

std::vector<NearestHit> NearestIndex::k_nearest(std::span<const double> coords, int time_step, std::size_t k,
                                                const Accept& accept) const {
    std::vector<NearestHit> all;
    for (const auto& [key, bucket] : buckets_) {
        if (key.first != time_step) continue;
        for (const auto& p : bucket->points) {
            if (!accept(p.id)) continue;
            all.push_back({p.id, squared_euclidean(coords, p.coords)});
        }
    }
    evals_.fetch_add(all.size(), std::memory_order_relaxed);
    comparisons_.fetch_add(all.size() * coords.size(), std::memory_order_relaxed);
    const auto cmp = [](const NearestHit& a, const NearestHit& b) {
        return a.squared_distance < b.squared_distance || (a.squared_distance == b.squared_distance && a.id < b.id);
    };
    if (k < all.size()) {
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), cmp);
        all.resize(k);
    } else {
        std::sort(all.begin(), all.end(), cmp);
    }
    return all;
}

} // namespace exostitch
