#include "exostitch/stitcher.hpp"

#include <limits>

namespace exostitch {

std::string_view to_string(Algorithm a) noexcept {
    switch (a) {
    case Algorithm::mfmc: return "mfmc";
    case Algorithm::mfmci: return "mfmci";
    case Algorithm::mfmci_biased: return "mfmci_biased";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view text) {
    for (auto a : {Algorithm::mfmc, Algorithm::mfmci, Algorithm::mfmci_biased}) {
        if (text == to_string(a)) return a;
    }
    throw Error(ErrorCode::bad_params, "unknown stitching algorithm '" + std::string(text) + "'");
}

void ExclusionLedger::exclude(std::size_t id) {
    if (excluded_.insert(id).second) order_.push_back(id);
}

void ExclusionLedger::reset() {
    excluded_.clear();
    order_.clear();
}

Stitcher::Stitcher(std::shared_ptr<const TransitionDatabase> db, Algorithm algorithm, DistanceMetric metric,
                   StitcherOptions options)
    : db_(std::move(db)), algorithm_(algorithm), metric_(std::move(metric)), options_(options) {
    if (!db_) throw Error(ErrorCode::contract_violation, "stitcher needs a database");
    const auto& db_ref = *db_;
    if (algorithm_ == Algorithm::mfmci && db_ref.mode() != DbMode::debiased) {
        throw Error(ErrorCode::contract_violation, "MFMCi needs a debiased database of transition sets");
    }
    if (algorithm_ == Algorithm::mfmci_biased && db_ref.mode() != DbMode::biased) {
        throw Error(ErrorCode::contract_violation, "biased MFMCi needs a biased database");
    }
    if (options_.match_successor && algorithm_ != Algorithm::mfmci) {
        throw Error(ErrorCode::contract_violation, "successor matching only applies to MFMCi");
    }
    if (algorithm_ != Algorithm::mfmc) {
        // Delta_i never looks at w or a.
        metric_.includes_exogenous = false;
        metric_.includes_action = false;
    }

    std::vector<IndexPoint> points;
    if (algorithm_ == Algorithm::mfmci) {
        points.reserve(db_ref.size());
        for (const auto& set : db_ref.sets()) {
            if (options_.match_successor) {
                const auto next = set.next_state(db_ref.realized_action(set.set_id));
                points.push_back({set.set_id, next.time_step, 0, embed_markov(metric_, next.features)});
            } else {
                points.push_back({set.set_id, set.x.time_step, 0, embed_markov(metric_, set.x.features)});
            }
        }
    } else if (algorithm_ == Algorithm::mfmci_biased) {
        points.reserve(db_ref.size());
        for (const auto& t : db_ref.tuples()) points.push_back({t.tuple_id, t.x.time_step, 0, embed_markov(metric_, t.x.features)});
    } else if (db_ref.mode() == DbMode::biased) {
        for (const auto& t : db_ref.tuples()) {
            points.push_back({t.tuple_id, t.x.time_step, t.a.index, embed_full(metric_, t.x.features, t.w)});
        }
    } else {
        const auto na = static_cast<std::size_t>(db_ref.action_count());
        for (const auto& set : db_ref.sets()) {
            auto coords = embed_full(metric_, set.x.features, set.w);
            for (std::size_t a = 0; a < na; ++a) {
                points.push_back({set.set_id * na + a, set.x.time_step, static_cast<int>(a), coords});
            }
        }
    }
    index_ = NearestIndex(std::move(points), options_.backend);
    group_offsets_.assign(static_cast<std::size_t>(std::max(db_ref.action_count(), 1)), 0.0);
}

std::size_t Stitcher::record_of(std::size_t ledger_id) const {
    if (algorithm_ == Algorithm::mfmc && db_->mode() == DbMode::debiased) {
        return ledger_id / static_cast<std::size_t>(db_->action_count());
    }
    return ledger_id;
}

NearestIndex::Query Stitcher::make_query(std::span<const double> coords, int t) const {
    NearestIndex::Query q;
    q.coords = coords;
    q.time_step = t;
    if (metric_.time_mode == TimeStepMode::weighted) {
        const double weight = metric_.time_weight;
        q.time_offset = [weight](int dt) -> std::optional<double> {
            const double d = static_cast<double>(dt);
            return weight * d * d;
        };
    }
    return q;
}

std::optional<std::size_t> Stitcher::match(const MarkovState& x, std::span<const double> w, const Policy& policy,
                                           const ExclusionLedger& ledger) const {
    const auto& db = *db_;
    if (algorithm_ == Algorithm::mfmc) {
        const auto a = evaluate_policy(policy, x, w);
        const auto coords = embed_full(metric_, x.features, w);
        auto q = make_query(coords, x.time_step);
        std::vector<double> offsets(group_offsets_.size(), 0.0);
        if (metric_.includes_action) {
            for (std::size_t g = 0; g < offsets.size(); ++g) {
                if (static_cast<int>(g) != a.index) offsets[g] = metric_.action_penalty * metric_.action_penalty;
            }
        }
        q.group_offsets = offsets;
        const auto hit = index_.nearest(q, [&](std::size_t id) { return !ledger.contains(id); });
        if (!hit) return std::nullopt;
        return hit->id;
    }

    const auto coords = embed_markov(metric_, x.features);
    const auto q = make_query(coords, x.time_step);
    std::optional<NearestHit> hit;
    if (algorithm_ == Algorithm::mfmci) {
        hit = index_.nearest(q, [&](std::size_t id) { return !ledger.contains(id); });
    } else {
        hit = index_.nearest(q, [&](std::size_t id) {
            if (ledger.contains(id)) return false;
            const auto& t = db.tuples()[id];
            return evaluate_policy(policy, x, t.w) == t.a;
        });
    }
    if (!hit) return std::nullopt;
    return hit->id;
}

namespace {

[[noreturn]] void exhausted(Algorithm a, int t) {
    throw ExhaustionError(std::string(to_string(a)) + ": no admissible database record left at time step " +
                              std::to_string(t),
                          t, 0);
}

} // namespace

Trajectory Stitcher::mfmci(const Policy& policy, int h, const StartState& start, ExclusionLedger& ledger) const {
    const auto& db = *db_;
    Trajectory out;
    out.steps.reserve(static_cast<std::size_t>(h));
    MarkovState x{start.x0.features, 0};
    for (int t = 0; t < h; ++t) {
        x.time_step = t;
        const auto id = match(x, {}, policy, ledger);
        if (!id) exhausted(algorithm_, t);
        const auto& set = db.sets()[*id];
        const auto a = evaluate_policy(policy, x, set.w);
        const auto& outcome = set.branch(a);
        out.steps.push_back(Step{x, set.w, a, outcome.reward});
        ledger.exclude(*id);
        x = MarkovState{outcome.x_next, t + 1};
    }
    return out;
}

Trajectory Stitcher::mfmci_biased(const Policy& policy, int h, const StartState& start,
                                  ExclusionLedger& ledger) const {
    const auto& db = *db_;
    Trajectory out;
    out.steps.reserve(static_cast<std::size_t>(h));
    MarkovState x{start.x0.features, 0};
    for (int t = 0; t < h; ++t) {
        x.time_step = t;
        const auto id = match(x, {}, policy, ledger);
        if (!id) exhausted(algorithm_, t);
        const auto& tuple = db.tuples()[*id];
        out.steps.push_back(Step{x, tuple.w, tuple.a, tuple.r});
        ledger.exclude(*id);
        x = MarkovState{tuple.x_next.features, t + 1};
    }
    return out;
}

Trajectory Stitcher::mfmc(const Policy& policy, int h, const StartState& start, ExclusionLedger& ledger) const {
    const auto& db = *db_;
    if (start.w0.size() != db.exo_names().size()) {
        throw Error(ErrorCode::contract_violation, "MFMC needs a start state with " +
                                                       std::to_string(db.exo_names().size()) + " exogenous values");
    }
    Trajectory out;
    out.steps.reserve(static_cast<std::size_t>(h));
    MarkovState x{start.x0.features, 0};
    std::vector<double> w = start.w0;
    const auto na = static_cast<std::size_t>(db.action_count());
    for (int t = 0; t < h; ++t) {
        x.time_step = t;
        const auto id = match(x, w, policy, ledger);
        if (!id) exhausted(algorithm_, t);
        const auto a = evaluate_policy(policy, x, w);
        const auto record = record_of(*id);

        double r = 0.0;
        std::vector<double> x_next;
        std::vector<double> w_matched;
        if (db.mode() == DbMode::debiased) {
            const auto& set = db.sets()[record];
            const auto& o = set.branch(ActionId{static_cast<int>(*id % na)});
            r = o.reward;
            x_next = o.x_next;
            w_matched = set.w;
        } else {
            const auto& tuple = db.tuples()[record];
            r = tuple.r;
            x_next = tuple.x_next.features;
            w_matched = tuple.w;
        }
        out.steps.push_back(Step{x, w, a, r});
        ledger.exclude(*id);

        // s' = (x', w'): w' is the next exogenous draw of the same seed
        // trajectory. At the end of a seed trajectory there is none, and the
        // matched record's own w stands in.
        const auto succ = db.successor(record);
        w = succ ? db.exogenous(*succ) : w_matched;
        x = MarkovState{std::move(x_next), t + 1};
    }
    return out;
}

Trajectory Stitcher::trajectory(const Policy& policy, int h, const StartState& start, ExclusionLedger& ledger) const {
    if (h < 1) throw Error(ErrorCode::contract_violation, "trajectory horizon must be >= 1");
    validate_policy(policy);
    if (start.x0.features.size() != db_->markov_names().size()) {
        throw Error(ErrorCode::contract_violation, "start state has the wrong Markov dimension");
    }
    switch (algorithm_) {
    case Algorithm::mfmc: return mfmc(policy, h, start, ledger);
    case Algorithm::mfmci: return mfmci(policy, h, start, ledger);
    case Algorithm::mfmci_biased: return mfmci_biased(policy, h, start, ledger);
    }
    return {};
}

TrajectorySet Stitcher::trajectory_set(const Policy& policy, int h, std::span<const StartState> starts,
                                       ExclusionLedger& ledger) const {
    TrajectorySet out;
    out.markov_names = db_->markov_names();
    out.exo_names = db_->exo_names();
    out.trajectories.reserve(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        try {
            out.trajectories.push_back(trajectory(policy, h, starts[i], ledger));
        } catch (const ExhaustionError& e) {
            throw ExhaustionError(std::string(e.what()) + " (trajectory " + std::to_string(i + 1) + " of " +
                                      std::to_string(starts.size()) + "; " + std::to_string(i) + " completed)",
                                  e.time_step(), i);
        }
    }
    return out;
}

TrajectorySet Stitcher::trajectory_set(const Policy& policy, int h, std::span<const StartState> starts) const {
    ExclusionLedger ledger;
    return trajectory_set(policy, h, starts, ledger);
}

std::vector<StartState> fixed_starts(const MarkovState& x0, std::size_t n) {
    return std::vector<StartState>(n, StartState{x0, {}});
}

std::vector<StartState> sampled_starts(const FactoredMdp& mdp, std::size_t n, Rng& rng,
                                       const std::optional<std::vector<double>>& x0) {
    std::vector<StartState> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        StartState s;
        s.x0 = MarkovState{x0 ? *x0 : mdp.sample_initial(rng), 0};
        s.w0 = mdp.sample_exogenous(rng).w;
        out.push_back(std::move(s));
    }
    return out;
}

Trajectory mfmc_trajectory(const Stitcher& s, const Policy& policy, int h, const StartState& start,
                           ExclusionLedger& ledger) {
    if (s.algorithm() != Algorithm::mfmc) throw Error(ErrorCode::contract_violation, "stitcher is not MFMC");
    return s.trajectory(policy, h, start, ledger);
}

Trajectory mfmci_trajectory(const Stitcher& s, const Policy& policy, int h, const MarkovState& x0,
                            ExclusionLedger& ledger) {
    if (s.algorithm() != Algorithm::mfmci) throw Error(ErrorCode::contract_violation, "stitcher is not MFMCi");
    return s.trajectory(policy, h, StartState{x0, {}}, ledger);
}

Trajectory mfmci_biased_trajectory(const Stitcher& s, const Policy& policy, int h, const MarkovState& x0,
                                   ExclusionLedger& ledger) {
    if (s.algorithm() != Algorithm::mfmci_biased) {
        throw Error(ErrorCode::contract_violation, "stitcher is not biased MFMCi");
    }
    return s.trajectory(policy, h, StartState{x0, {}}, ledger);
}

TrajectorySet generate_trajectory_set(const Stitcher& s, const Policy& policy, std::span<const StartState> starts,
                                      int h) {
    return s.trajectory_set(policy, h, starts);
}

const TransitionSet& nearest_set(const TransitionDatabase& db, const MarkovState& x, const DistanceMetric& metric,
                                 const ExclusionLedger& ledger) {
    if (db.mode() != DbMode::debiased) throw Error(ErrorCode::contract_violation, "nearest_set needs transition sets");
    const TransitionSet* best = nullptr;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const auto& set : db.sets()) {
        if (ledger.contains(set.set_id)) continue;
        const auto d2 = squared_distance_markov(x, set.x, metric);
        if (!d2) continue;
        if (!best || *d2 < best_d2) {
            best = &set;
            best_d2 = *d2;
        }
    }
    if (!best) {
        throw ExhaustionError("no feasible transition set left at time step " + std::to_string(x.time_step),
                              x.time_step, 0);
    }
    return *best;
}

} // namespace exostitch
