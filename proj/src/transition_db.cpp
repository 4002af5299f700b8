#include "exostitch/transition_db.hpp"

#include <algorithm>
#include <cmath>

namespace exostitch {

std::string_view to_string(DbMode mode) noexcept { return mode == DbMode::debiased ? "debiased" : "biased"; }

DbMode parse_db_mode(std::string_view text) {
    if (text == "debiased") return DbMode::debiased;
    if (text == "biased") return DbMode::biased;
    throw Error(ErrorCode::configuration, "unknown database mode '" + std::string(text) + "'");
}

const Outcome& TransitionSet::branch(ActionId a) const {
    if (a.index < 0 || static_cast<std::size_t>(a.index) >= outcomes.size()) {
        throw Error(ErrorCode::contract_violation,
                    "set " + std::to_string(set_id) + " has no branch for action " + std::to_string(a.index));
    }
    return outcomes[static_cast<std::size_t>(a.index)];
}

TransitionDatabase::TransitionDatabase(DbMode mode, const FactoredMdp& mdp, int horizon)
    : TransitionDatabase(mode, mdp.name(), mdp.params(), mdp.markov_features(), mdp.exogenous_features(),
                         mdp.action_names(), horizon) {}

TransitionDatabase::TransitionDatabase(DbMode mode, std::string mdp_name, nlohmann::json mdp_params,
                                       std::vector<std::string> markov_names, std::vector<std::string> exo_names,
                                       std::vector<std::string> action_names, int horizon)
    : mode_(mode),
      mdp_name_(std::move(mdp_name)),
      mdp_params_(std::move(mdp_params)),
      markov_names_(std::move(markov_names)),
      exo_names_(std::move(exo_names)),
      action_names_(std::move(action_names)),
      horizon_(horizon) {}

const MarkovState& TransitionDatabase::state(std::size_t record) const {
    return mode_ == DbMode::debiased ? sets_.at(record).x : tuples_.at(record).x;
}

const std::vector<double>& TransitionDatabase::exogenous(std::size_t record) const {
    return mode_ == DbMode::debiased ? sets_.at(record).w : tuples_.at(record).w;
}

ActionId TransitionDatabase::realized_action(std::size_t record) const {
    const auto& traj = provenance_.at(traj_of_.at(record));
    return traj.realized.at(record - traj.first);
}

std::optional<std::size_t> TransitionDatabase::successor(std::size_t record) const {
    const auto& traj = provenance_.at(traj_of_.at(record));
    if (record + 1 < traj.first + traj.length) return record + 1;
    return std::nullopt;
}

void TransitionDatabase::begin_trajectory(const Policy& behavior) {
    provenance_.push_back(SeedTrajectory{behavior, size(), 0, {}});
}

void TransitionDatabase::check_state(const MarkovState& x, const std::vector<double>& w) const {
    if (x.features.size() != markov_names_.size() || w.size() != exo_names_.size()) {
        throw Error(ErrorCode::contract_violation, "record dimensions do not match the database schema");
    }
}

void TransitionDatabase::append_set(TransitionSet set, ActionId realized) {
    if (mode_ != DbMode::debiased) throw Error(ErrorCode::contract_violation, "append_set on a biased database");
    if (provenance_.empty()) throw Error(ErrorCode::contract_violation, "append before begin_trajectory");
    check_state(set.x, set.w);
    if (set.outcomes.size() != action_names_.size()) {
        throw Error(ErrorCode::integrity, "set " + std::to_string(set.set_id) + " has " +
                                              std::to_string(set.outcomes.size()) + " outcomes, expected " +
                                              std::to_string(action_names_.size()));
    }
    set.set_id = sets_.size();
    sets_.push_back(std::move(set));
    traj_of_.push_back(provenance_.size() - 1);
    provenance_.back().length += 1;
    provenance_.back().realized.push_back(realized);
    stats_stale_ = true;
}

void TransitionDatabase::append_tuple(TransitionTuple tuple) {
    if (mode_ != DbMode::biased) throw Error(ErrorCode::contract_violation, "append_tuple on a debiased database");
    if (provenance_.empty()) throw Error(ErrorCode::contract_violation, "append before begin_trajectory");
    check_state(tuple.x, tuple.w);
    tuple.tuple_id = tuples_.size();
    const auto a = tuple.a;
    tuples_.push_back(std::move(tuple));
    traj_of_.push_back(provenance_.size() - 1);
    provenance_.back().length += 1;
    provenance_.back().realized.push_back(a);
    stats_stale_ = true;
}

void TransitionDatabase::refresh_stats() {
    if (empty()) {
        feature_stats_.clear();
        exo_stats_.clear();
    } else {
        feature_stats_ = compute_feature_stats(*this);
        exo_stats_ = compute_exogenous_stats(*this);
    }
    stats_stale_ = false;
}

bool TransitionDatabase::operator==(const TransitionDatabase& o) const {
    return mode_ == o.mode_ && mdp_name_ == o.mdp_name_ && mdp_params_ == o.mdp_params_ &&
           markov_names_ == o.markov_names_ && exo_names_ == o.exo_names_ && action_names_ == o.action_names_ &&
           horizon_ == o.horizon_ && sets_ == o.sets_ && tuples_ == o.tuples_ && provenance_ == o.provenance_;
}

namespace {

template <typename Get>
std::vector<FeatureStat> population_stats(const TransitionDatabase& db, std::size_t dim, Get get) {
    if (db.empty()) throw Error(ErrorCode::empty_database, "feature statistics of an empty database");
    const auto n = static_cast<double>(db.size());
    std::vector<FeatureStat> out(dim);
    for (std::size_t f = 0; f < dim; ++f) {
        double sum = 0.0;
        for (std::size_t i = 0; i < db.size(); ++i) sum += get(i)[f];
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < db.size(); ++i) {
            const double d = get(i)[f] - mean;
            ss += d * d;
        }
        out[f].mean = mean;
        out[f].stddev = std::sqrt(ss / n);
        out[f].constant = !(out[f].stddev > 0.0);
    }
    return out;
}

} // namespace

std::vector<FeatureStat> compute_feature_stats(const TransitionDatabase& db) {
    return population_stats(db, db.markov_names().size(),
                            [&](std::size_t i) -> const std::vector<double>& { return db.state(i).features; });
}

std::vector<FeatureStat> compute_exogenous_stats(const TransitionDatabase& db) {
    return population_stats(db, db.exo_names().size(),
                            [&](std::size_t i) -> const std::vector<double>& { return db.exogenous(i); });
}

namespace {

// Shared body of the two population routines; both consume the Rng in the
// same order so that biased and debiased builds from one seed are paired.
void simulate_trajectory(const FactoredMdp& mdp, const Policy& behavior, int h, Rng& rng, TransitionDatabase& db) {
    db.begin_trajectory(behavior);
    MarkovState x{mdp.sample_initial(rng), 0};
    for (int t = 0; t < h; ++t) {
        const auto draw = mdp.sample_exogenous(rng);
        const auto chosen = evaluate_policy(behavior, x, draw.w);
        if (db.mode() == DbMode::debiased) {
            TransitionSet set;
            set.x = x;
            set.w = draw.w;
            set.z = draw.z;
            for (int a = 0; a < mdp.action_count(); ++a) {
                auto res = step(mdp, x, ActionId{a}, draw);
                set.outcomes.push_back(Outcome{ActionId{a}, res.reward, std::move(res.next.features)});
            }
            MarkovState next = set.next_state(chosen);
            db.append_set(std::move(set), chosen);
            x = std::move(next);
        } else {
            auto res = step(mdp, x, chosen, draw);
            TransitionTuple tuple{0, x, draw.w, chosen, res.reward, res.next, draw.z};
            db.append_tuple(std::move(tuple));
            x = std::move(res.next);
        }
    }
}

TransitionDatabase populate(const FactoredMdp& mdp, const Policy& behavior, std::size_t n, int h, Rng& rng,
                            DbMode mode) {
    if (h < 1) throw Error(ErrorCode::contract_violation, "database horizon must be >= 1");
    validate_policy(behavior);
    TransitionDatabase db(mode, mdp, h);
    for (std::size_t i = 0; i < n; ++i) simulate_trajectory(mdp, behavior, h, rng, db);
    db.refresh_stats();
    return db;
}

} // namespace

TransitionDatabase populate_debiased(const FactoredMdp& mdp, const Policy& behavior, std::size_t n, int h,
                                     Rng& rng) {
    return populate(mdp, behavior, n, h, rng, DbMode::debiased);
}

TransitionDatabase populate_biased(const FactoredMdp& mdp, const Policy& behavior, std::size_t n, int h, Rng& rng) {
    return populate(mdp, behavior, n, h, rng, DbMode::biased);
}

TransitionDatabase seed_policy_grid(const FactoredMdp& mdp, PolicyClass policy_class,
                                    const std::vector<std::vector<double>>& grid, int h, Rng& rng, DbMode mode) {
    if (grid.empty()) throw Error(ErrorCode::configuration, "seed policy grid is empty");
    if (h < 1) throw Error(ErrorCode::contract_violation, "database horizon must be >= 1");
    TransitionDatabase db(mode, mdp, h);
    for (const auto& params : grid) {
        const Policy behavior{policy_class, params};
        validate_policy(behavior);
        simulate_trajectory(mdp, behavior, h, rng, db);
    }
    db.refresh_stats();
    return db;
}

std::vector<std::vector<double>> make_param_grid(const std::vector<std::array<double, 2>>& ranges,
                                                 const std::vector<std::size_t>& counts) {
    if (ranges.size() != counts.size() || ranges.empty()) {
        throw Error(ErrorCode::configuration, "parameter grid needs one count per range");
    }
    std::vector<std::vector<double>> axes;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        if (counts[i] == 0) throw Error(ErrorCode::configuration, "parameter grid axis with zero points");
        std::vector<double> axis;
        const auto [lo, hi] = ranges[i];
        if (counts[i] == 1) {
            axis.push_back(0.5 * (lo + hi));
        } else {
            for (std::size_t k = 0; k < counts[i]; ++k) {
                axis.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(counts[i] - 1));
            }
        }
        axes.push_back(std::move(axis));
    }
    std::vector<std::vector<double>> out{{}};
    for (const auto& axis : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : out) {
            for (double v : axis) {
                auto p = prefix;
                p.push_back(v);
                next.push_back(std::move(p));
            }
        }
        out = std::move(next);
    }
    return out;
}

std::vector<std::vector<double>> grid_of_size(const std::array<double, 2>& range0,
                                              const std::array<double, 2>& range1, std::size_t count) {
    if (count == 0) throw Error(ErrorCode::configuration, "seed grid of size 0");
    auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
    while (k * k < count) ++k;
    auto grid = make_param_grid({range0, range1}, {k, k});
    grid.resize(count);
    return grid;
}

} // namespace exostitch
