#pragma once

#include "exostitch/estimators.hpp"
#include "exostitch/stitcher.hpp"

#include <functional>
#include <limits>

namespace exostitch {

/// Visual error as a function of database size.
///
/// For every (seed, db size) cell, a debiased and a biased database are grown
/// from the same seed-policy grid with the same random stream, so they hold
/// the same trajectories. Every query policy is then simulated with each
/// algorithm and scored against n ground-truth trajectories.
struct LearningCurveConfig {
    std::string mdp_name = "ember";
    nlohmann::json mdp_params = nlohmann::json::object();

    PolicyClass seed_class = PolicyClass::intensity;
    std::array<double, 2> seed_range0 = {0.0, 100.0};
    std::array<double, 2> seed_range1 = {0.0, 180.0};

    std::vector<Policy> queries;
    std::vector<std::size_t> db_sizes;  // in records (transition sets or tuples)
    std::vector<Algorithm> algorithms = {Algorithm::mfmc, Algorithm::mfmci, Algorithm::mfmci_biased};
    std::size_t n = 30;
    int h = 20;
    std::vector<std::uint64_t> seeds = {1};
    std::vector<std::string> variables;  // empty: every Markov feature + reward + cumulative_reward
    std::size_t bootstrap_reps = 100;
    nlohmann::json metric = nlohmann::json::object();
    double action_penalty = 1e6;
    std::size_t threads = 0;             // 0: hardware concurrency
};

struct LearningCurveRow {
    Algorithm algorithm = Algorithm::mfmci;
    Policy policy;
    std::size_t db_size = 0;
    double weighted_error = std::numeric_limits<double>::quiet_NaN();
    double bootstrap_floor = std::numeric_limits<double>::quiet_NaN();
    double random_baseline = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
    std::string failure;  // non-empty when the cell could not be computed
};

/// Rows ordered by (seed, db size, query, algorithm). Deterministic in the
/// config regardless of thread count.
std::vector<LearningCurveRow> run_learning_curve(const LearningCurveConfig& cfg);

/// Seed-policy grid size for a database of `records` records at horizon h.
std::size_t seed_trajectories_for(std::size_t records, int h);

std::string learning_curve_csv(const std::vector<LearningCurveRow>& rows);
nlohmann::json learning_curve_summary(const LearningCurveConfig& cfg, const std::vector<LearningCurveRow>& rows);

LearningCurveConfig parse_learning_curve_config(const nlohmann::json& j);
nlohmann::json to_json(const LearningCurveConfig& cfg);

/// Mean over seeds of weighted_error (NaN if any seed failed).
double mean_error(const std::vector<LearningCurveRow>& rows, Algorithm a, PolicyClass pc, std::size_t db_size);
double mean_floor(const std::vector<LearningCurveRow>& rows, PolicyClass pc, std::size_t db_size);
double mean_random(const std::vector<LearningCurveRow>& rows, PolicyClass pc, std::size_t db_size);

} // namespace exostitch
