#pragma once

#include "exostitch/transition_db.hpp"

#include <optional>
#include <span>

namespace exostitch {

enum class TimeStepMode { hard_match, weighted };

/// Weighted Euclidean distance over mean/variance standardized features.
///
/// Each feature contributes weight_f * ((u_f - mean_f)/std_f - (v_f - mean_f)/std_f)^2.
/// Constant features (zero spread) are left out. Under hard_match, states at
/// different time steps are infeasible; under `weighted` the time step adds
/// time_weight * (t - t')^2. The action term, when enabled, adds
/// action_penalty^2 on a mismatch, so identical states with different actions
/// are exactly action_penalty apart.
struct DistanceMetric {
    std::vector<double> feature_weights;
    std::vector<FeatureStat> feature_stats;
    std::vector<double> exo_weights;
    std::vector<FeatureStat> exo_stats;
    bool standardize = true;
    TimeStepMode time_mode = TimeStepMode::hard_match;
    double time_weight = 1e6;
    bool includes_exogenous = false;
    bool includes_action = false;
    double action_penalty = 1e6;

    /// Length of the embedded coordinate vector.
    std::size_t embedded_dim() const;
};

/// Metric on the Markov state only, with stats taken from the database.
DistanceMetric markov_metric(const TransitionDatabase& db, std::vector<double> weights = {});

/// Metric on (x, w) plus an action mismatch penalty, for full-state MFMC.
DistanceMetric full_metric(const TransitionDatabase& db, double action_penalty = 1e6,
                           std::vector<double> markov_weights = {}, std::vector<double> exo_weights = {});

nlohmann::json to_json(const DistanceMetric& metric);
/// Reads the serializable part (weights, modes, penalty) from a config block;
/// stats are taken from the database.
DistanceMetric metric_from_config(const TransitionDatabase& db, const nlohmann::json& cfg, bool full_state);

/// Scaled coordinates sqrt(w_f) * (u_f - mean_f) / std_f, constant features dropped.
/// Squared Euclidean distance between embeddings is the feature part of the metric.
std::vector<double> embed_markov(const DistanceMetric& metric, std::span<const double> x);
std::vector<double> embed_full(const DistanceMetric& metric, std::span<const double> x, std::span<const double> w);

/// Sum of squared coordinate differences, accumulated left to right. Every
/// distance in the library goes through this so that argmins agree exactly.
double squared_euclidean(std::span<const double> a, std::span<const double> b);

/// Squared Delta_i; nullopt when the time steps are infeasible.
std::optional<double> squared_distance_markov(const MarkovState& x, const MarkovState& x_db,
                                              const DistanceMetric& metric);
std::optional<double> distance_markov(const MarkovState& x, const MarkovState& x_db, const DistanceMetric& metric);

/// Delta((s, a), (s~, a~)) over (x, w, a). Infeasible time steps give +infinity.
double squared_distance_full(const MarkovState& x, std::span<const double> w, ActionId a, const MarkovState& x_db,
                             std::span<const double> w_db, ActionId a_db, const DistanceMetric& metric);
double distance_full(const MarkovState& x, std::span<const double> w, ActionId a, const MarkovState& x_db,
                     std::span<const double> w_db, ActionId a_db, const DistanceMetric& metric);

/// Additive term for a time-step difference; nullopt when infeasible.
std::optional<double> time_term(const DistanceMetric& metric, int t, int t_db);

} // namespace exostitch
