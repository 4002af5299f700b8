#pragma once

#include "exostitch/estimators.hpp"
#include "exostitch/stitcher.hpp"

#include <memory>

namespace exostitch {

enum class QueryAlgorithm { ground_truth, mfmc, mfmci, mfmci_biased, random_baseline };

std::string_view to_string(QueryAlgorithm a) noexcept;
QueryAlgorithm parse_query_algorithm(std::string_view text);

/// One policy query: which trajectories to synthesize and how.
struct PolicyQuery {
    Policy policy;
    QueryAlgorithm algorithm = QueryAlgorithm::mfmci;
    std::size_t n = 30;
    int h = 0;                 // 0: the database (or MDP) horizon
    std::string db_id;
    std::uint64_t seed = 0;
    std::vector<std::string> variables;
    std::vector<double> quantile_levels = decile_levels();
    nlohmann::json metric = nlohmann::json::object();
    std::optional<std::vector<double>> x0;  // fixed initial Markov state
    // Used by ground_truth when there is no database.
    std::string mdp_name;
    nlohmann::json mdp_params = nlohmann::json::object();
};

/// Parses the request body of POST /api/trajectories. Unknown policy classes
/// raise bad_policy; other malformed fields raise bad_params.
PolicyQuery parse_policy_query(const nlohmann::json& j);
nlohmann::json to_json(const PolicyQuery& q);

/// Runs the query. `db` may be null only for ground_truth with an MDP name.
/// Starts (x0 and, for MFMC, w0) are drawn from the MDP samplers with the
/// query seed, so every algorithm sees the same initial states.
TrajectorySet run_query(const PolicyQuery& q, std::shared_ptr<const TransitionDatabase> db);

/// trajectory_id, time_step, action, reward, then every x and w feature.
std::string trajectories_csv(const TrajectorySet& ts);
nlohmann::json to_json(const TrajectorySet& ts);

} // namespace exostitch
