#pragma once

#include "exostitch/metric.hpp"

#include <optional>
#include <string>
#include <vector>

namespace exostitch {

/// Mean return over the set. Throws on an empty set.
double value_estimate(const TrajectorySet& ts);
/// Sample (n - 1) standard deviation of the returns.
double return_stddev(const TrajectorySet& ts);

std::vector<double> decile_levels();

/// Linear interpolation between order statistics at position p * (n - 1).
/// `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

/// Per-trajectory time series of a named variable: any Markov or exogenous
/// feature name, "action", "reward" or "cumulative_reward" (running sum
/// through step t). Result is [trajectory][t].
std::vector<std::vector<double>> extract_variable(const TrajectorySet& ts, const std::string& variable);
/// Every variable name extract_variable() accepts for this set.
std::vector<std::string> variable_names(const TrajectorySet& ts);

struct QuantileSeries {
    std::string variable;
    std::vector<int> time_steps;
    std::vector<double> levels;
    std::vector<std::vector<double>> values; // [time][level]

    bool operator==(const QuantileSeries&) const = default;
};

QuantileSeries fan_chart(const TrajectorySet& ts, const std::string& variable,
                         const std::vector<double>& levels = decile_levels());

struct FidelityReport {
    std::vector<std::string> variables;       // variables that contribute
    std::vector<std::vector<double>> errors;  // [variable][t], unnormalized
    std::vector<double> heights;              // H_v per contributing variable
    std::vector<std::string> excluded;        // variables with a flat truth chart
    double weighted_total = 0.0;
};

/// error(v, t) = |median_truth - median_surrogate|, normalized by the truth
/// chart height H_v = max_t (top level - bottom level). Variables with
/// H_v == 0 are excluded and listed.
FidelityReport visual_fidelity_error(const TrajectorySet& truth, const TrajectorySet& surrogate,
                                     const std::vector<std::string>& variables,
                                     const std::vector<double>& levels = decile_levels());

/// Mean fidelity error of truth against bootstrap resamples of itself.
double bootstrap_floor(const TrajectorySet& truth, const std::vector<std::string>& variables, std::size_t reps,
                       Rng& rng, const std::vector<double>& levels = decile_levels());

/// n whole seed trajectories, sampled without replacement, following the
/// realized actions.
TrajectorySet random_baseline(const TransitionDatabase& db, std::size_t n, Rng& rng);

/// Max over probes of the distance to the k-th nearest database state in the
/// probe's time-step bucket, under the Markov part of `metric`.
/// Without probes, every database state is a probe and is excluded from its
/// own neighbor list.
double k_dispersion(const TransitionDatabase& db, std::size_t k, const DistanceMetric& metric,
                    const std::optional<std::vector<MarkovState>>& probes = std::nullopt);

/// C = L_R sum_{i=0}^{h-1} sum_{j=0}^{h-i-1} [L_f (1 + L_pi)]^j
double mfmc_constant_C(double L_R, double L_f, double L_pi, int h);
/// C_i = L_Ri sum_{b=0}^{h-1} sum_{j=0}^{h-b-1} L_fi^j
double mfmci_constant_Ci(double L_Ri, double L_fi, int h);

double bias_bound(double C, double alpha);
double variance_bound(double sigma_h, std::size_t n, double C, double alpha);

struct BoundReport {
    bool factored = true;
    double L_R = 0.0, L_f = 0.0, L_pi = 0.0; // full-state constants
    double L_Ri = 0.0, L_fi = 0.0;           // factored constants
    int h = 0;
    std::size_t n = 0;
    double alpha = 0.0;
    double C = 0.0;
    double bias = 0.0;
    double variance = 0.0;
    double sigma_h = 0.0;
};

BoundReport factored_bound_report(const LipschitzConstants& L, int h, std::size_t n, double alpha, double sigma_h);
BoundReport full_bound_report(const LipschitzConstants& L, int h, std::size_t n, double alpha, double sigma_h);
nlohmann::json to_json(const BoundReport& r);
nlohmann::json to_json(const QuantileSeries& q);
nlohmann::json to_json(const FidelityReport& f);

} // namespace exostitch
