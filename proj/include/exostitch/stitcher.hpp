#pragma once

#include "exostitch/metric.hpp"
#include "exostitch/nearest_index.hpp"

#include <memory>
#include <unordered_set>

namespace exostitch {

enum class Algorithm { mfmc, mfmci, mfmci_biased };

std::string_view to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view text);

/// Records consumed during one trajectory-set query. Ids are set ids for
/// MFMCi and tuple ids otherwise (see Stitcher::record_of).
class ExclusionLedger {
public:
    void exclude(std::size_t id);
    bool contains(std::size_t id) const { return excluded_.contains(id); }
    std::size_t size() const { return order_.size(); }
    /// Ids in the order they were consumed.
    const std::vector<std::size_t>& history() const { return order_; }
    void reset();

private:
    std::unordered_set<std::size_t> excluded_;
    std::vector<std::size_t> order_;
};

/// Query start. `w0` is only read by full-state MFMC.
struct StartState {
    MarkovState x0;
    std::vector<double> w0;
};

struct StitcherOptions {
    IndexBackend backend = IndexBackend::kd_tree;
    /// Match the query against each set's realized successor state instead of
    /// its own state (the alternative reading of the MFMCi argmin).
    bool match_successor = false;
};

/// Off-policy trajectory synthesis over an immutable database.
///
///  mfmc          full-state tuples; distance over (x, w, a)
///  mfmci         debiased transition sets; distance over x only
///  mfmci_biased  realized tuples only; distance over x, rejecting tuples
///                whose stored action differs from pi(x, w~)
///
/// A Stitcher is immutable and may be shared across threads; all per-query
/// state lives in the ExclusionLedger passed to each call.
class Stitcher {
public:
    Stitcher(std::shared_ptr<const TransitionDatabase> db, Algorithm algorithm, DistanceMetric metric,
             StitcherOptions options = {});

    Algorithm algorithm() const { return algorithm_; }
    const DistanceMetric& metric() const { return metric_; }
    const TransitionDatabase& database() const { return *db_; }
    const NearestIndex& index() const { return index_; }

    Trajectory trajectory(const Policy& policy, int h, const StartState& start, ExclusionLedger& ledger) const;

    /// n trajectories sharing one ledger, so no record is used twice.
    TrajectorySet trajectory_set(const Policy& policy, int h, std::span<const StartState> starts,
                                 ExclusionLedger& ledger) const;
    TrajectorySet trajectory_set(const Policy& policy, int h, std::span<const StartState> starts) const;

    /// Database record (set or tuple index) behind a ledger id.
    std::size_t record_of(std::size_t ledger_id) const;

    /// One stitching decision: the ledger id of the best admissible candidate
    /// for query state (x, w) under `policy`, or nullopt when none is left.
    /// `w` is only read by MFMC; `policy` picks the action (MFMC) or filters
    /// candidates (biased MFMCi).
    std::optional<std::size_t> match(const MarkovState& x, std::span<const double> w, const Policy& policy,
                                     const ExclusionLedger& ledger) const;

private:
    Trajectory mfmc(const Policy& policy, int h, const StartState& start, ExclusionLedger& ledger) const;
    Trajectory mfmci(const Policy& policy, int h, const StartState& start, ExclusionLedger& ledger) const;
    Trajectory mfmci_biased(const Policy& policy, int h, const StartState& start, ExclusionLedger& ledger) const;
    NearestIndex::Query make_query(std::span<const double> coords, int t) const;

    std::shared_ptr<const TransitionDatabase> db_;
    Algorithm algorithm_;
    DistanceMetric metric_;
    StitcherOptions options_;
    NearestIndex index_;
    std::vector<double> group_offsets_;
};

/// The same start for every trajectory (w0 left empty).
std::vector<StartState> fixed_starts(const MarkovState& x0, std::size_t n);
/// Initial Markov states and exogenous draws from the MDP's samplers.
std::vector<StartState> sampled_starts(const FactoredMdp& mdp, std::size_t n, Rng& rng,
                                       const std::optional<std::vector<double>>& x0 = std::nullopt);

// Free-function forms of the algorithm entry points.
Trajectory mfmc_trajectory(const Stitcher& s, const Policy& policy, int h, const StartState& start,
                           ExclusionLedger& ledger);
Trajectory mfmci_trajectory(const Stitcher& s, const Policy& policy, int h, const MarkovState& x0,
                            ExclusionLedger& ledger);
Trajectory mfmci_biased_trajectory(const Stitcher& s, const Policy& policy, int h, const MarkovState& x0,
                                   ExclusionLedger& ledger);
TrajectorySet generate_trajectory_set(const Stitcher& s, const Policy& policy, std::span<const StartState> starts,
                                      int h);

/// Linear-scan argmin over the non-excluded sets of a debiased database by
/// Delta_i(x, B^x), ties to the lowest set id. Throws ExhaustionError when no
/// feasible set is left.
const TransitionSet& nearest_set(const TransitionDatabase& db, const MarkovState& x, const DistanceMetric& metric,
                                 const ExclusionLedger& ledger);

} // namespace exostitch
