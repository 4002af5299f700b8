#pragma once

#include "exostitch/mdp.hpp"

#include <array>
#include <filesystem>
#include <optional>

namespace exostitch {

enum class DbMode { debiased, biased };

std::string_view to_string(DbMode mode) noexcept;
DbMode parse_db_mode(std::string_view text);

struct FeatureStat {
    double mean = 0.0;
    double stddev = 0.0;
    bool constant = false;

    bool operator==(const FeatureStat&) const = default;
};

struct Outcome {
    ActionId action;
    double reward = 0.0;
    std::vector<double> x_next;

    bool operator==(const Outcome&) const = default;
};

/// B(x, w): one simulated outcome per action from a common (x, w, z).
struct TransitionSet {
    std::size_t set_id = 0;
    MarkovState x;
    std::vector<double> w;
    std::vector<Outcome> outcomes; // outcomes[a].action == a
    std::vector<double> z;         // kept in memory only; not persisted

    /// B_a: the outcome for action a.
    const Outcome& branch(ActionId a) const;
    /// B_a^{x'} with the successor time step filled in.
    MarkovState next_state(ActionId a) const { return {branch(a).x_next, x.time_step + 1}; }

    /// Equality ignores z, which does not survive persistence.
    bool operator==(const TransitionSet& o) const {
        return set_id == o.set_id && x == o.x && w == o.w && outcomes == o.outcomes;
    }
};

struct TransitionTuple {
    std::size_t tuple_id = 0;
    MarkovState x;
    std::vector<double> w;
    ActionId a;
    double r = 0.0;
    MarkovState x_next;
    std::vector<double> z;

    bool operator==(const TransitionTuple& o) const {
        return tuple_id == o.tuple_id && x == o.x && w == o.w && a == o.a && r == o.r && x_next == o.x_next;
    }
};

/// One seed trajectory's footprint in the database.
struct SeedTrajectory {
    Policy policy;
    std::size_t first = 0;  // index of its first record
    std::size_t length = 0; // number of consecutive records
    std::vector<ActionId> realized; // behavior action at each step

    bool operator==(const SeedTrajectory&) const = default;
};

/// The transition database D. Records are transition sets in debiased mode and
/// single tuples in biased mode; either way they keep insertion order and are
/// grouped into contiguous seed trajectories.
class TransitionDatabase {
public:
    TransitionDatabase() = default;
    TransitionDatabase(DbMode mode, const FactoredMdp& mdp, int horizon);
    TransitionDatabase(DbMode mode, std::string mdp_name, nlohmann::json mdp_params,
                       std::vector<std::string> markov_names, std::vector<std::string> exo_names,
                       std::vector<std::string> action_names, int horizon);

    DbMode mode() const { return mode_; }
    const std::string& mdp_name() const { return mdp_name_; }
    const nlohmann::json& mdp_params() const { return mdp_params_; }
    const std::vector<std::string>& markov_names() const { return markov_names_; }
    const std::vector<std::string>& exo_names() const { return exo_names_; }
    const std::vector<std::string>& action_names() const { return action_names_; }
    int action_count() const { return static_cast<int>(action_names_.size()); }
    int horizon() const { return horizon_; }

    const std::vector<TransitionSet>& sets() const { return sets_; }
    const std::vector<TransitionTuple>& tuples() const { return tuples_; }
    const std::vector<SeedTrajectory>& provenance() const { return provenance_; }

    /// Number of records: sets when debiased, tuples when biased.
    std::size_t size() const { return mode_ == DbMode::debiased ? sets_.size() : tuples_.size(); }
    bool empty() const { return size() == 0; }

    const MarkovState& state(std::size_t record) const;
    const std::vector<double>& exogenous(std::size_t record) const;
    /// Action the behavior policy took at this record.
    ActionId realized_action(std::size_t record) const;
    /// Next record of the same seed trajectory, if any.
    std::optional<std::size_t> successor(std::size_t record) const;
    std::size_t trajectory_of(std::size_t record) const { return traj_of_.at(record); }

    // Construction (single writer).
    void begin_trajectory(const Policy& behavior);
    void append_set(TransitionSet set, ActionId realized);
    void append_tuple(TransitionTuple tuple);

    const std::vector<FeatureStat>& feature_stats() const { return feature_stats_; }
    const std::vector<FeatureStat>& exo_stats() const { return exo_stats_; }
    bool stats_stale() const { return stats_stale_; }
    void refresh_stats();

    bool operator==(const TransitionDatabase& o) const;

private:
    void check_state(const MarkovState& x, const std::vector<double>& w) const;

    DbMode mode_ = DbMode::debiased;
    std::string mdp_name_;
    nlohmann::json mdp_params_ = nlohmann::json::object();
    std::vector<std::string> markov_names_;
    std::vector<std::string> exo_names_;
    std::vector<std::string> action_names_;
    int horizon_ = 0;

    std::vector<TransitionSet> sets_;
    std::vector<TransitionTuple> tuples_;
    std::vector<SeedTrajectory> provenance_;
    std::vector<std::size_t> traj_of_;

    std::vector<FeatureStat> feature_stats_;
    std::vector<FeatureStat> exo_stats_;
    bool stats_stale_ = true;
};

/// Population mean and standard deviation of every Markov feature over all
/// stored states. Features with zero spread are flagged constant.
std::vector<FeatureStat> compute_feature_stats(const TransitionDatabase& db);
std::vector<FeatureStat> compute_exogenous_stats(const TransitionDatabase& db);

/// Debiased population: n trajectories of h steps under the behavior policy.
/// Every action is simulated from each visited (x, w) with the same (w, z);
/// the behavior action picks the branch that is followed.
TransitionDatabase populate_debiased(const FactoredMdp& mdp, const Policy& behavior, std::size_t n, int h,
                                     Rng& rng);

/// Same trajectories as populate_debiased under the same seed, storing only
/// the tuple the behavior policy took.
TransitionDatabase populate_biased(const FactoredMdp& mdp, const Policy& behavior, std::size_t n, int h, Rng& rng);

/// One seed trajectory per parameter vector, concatenated in grid order. The
/// Rng stream continues across policies, so trajectories use independent draws.
TransitionDatabase seed_policy_grid(const FactoredMdp& mdp, PolicyClass policy_class,
                                    const std::vector<std::vector<double>>& grid, int h, Rng& rng, DbMode mode);

/// Row-major Cartesian grid: counts[i] evenly spaced points over ranges[i]
/// (both endpoints included; a count of 1 takes the midpoint).
std::vector<std::vector<double>> make_param_grid(const std::vector<std::array<double, 2>>& ranges,
                                                 const std::vector<std::size_t>& counts);

/// `count` parameter vectors from a square-ish k x k grid (k = ceil(sqrt(count)))
/// taken in row-major order.
std::vector<std::vector<double>> grid_of_size(const std::array<double, 2>& range0,
                                              const std::array<double, 2>& range1, std::size_t count);

// ------------------------------------------------------------- persistence

inline constexpr int kDatabaseFormatVersion = 1;

/// Writes `manifest.json` and `transitions.csv` into `dir` (created if needed).
void save(const TransitionDatabase& db, const std::filesystem::path& dir);
TransitionDatabase load(const std::filesystem::path& dir);

/// The CSV body exactly as save() writes it.
std::string serialize_transitions(const TransitionDatabase& db);
nlohmann::json make_manifest(const TransitionDatabase& db, const std::string& transitions_csv);

} // namespace exostitch
