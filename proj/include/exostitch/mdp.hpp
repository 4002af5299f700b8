#pragma once

#include "exostitch/error.hpp"
#include "exostitch/rng.hpp"

#include <nlohmann/json.hpp>

#include <compare>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace exostitch {

/// Endogenous state x. `time_step` is part of the state so that stitching can
/// match on it.
struct MarkovState {
    std::vector<double> features;
    int time_step = 0;

    bool operator==(const MarkovState&) const = default;
};

/// One draw of the time-independent exogenous variables w together with the
/// hidden noise z that drives f_x and f_r.
struct ExogenousDraw {
    std::vector<double> w;
    std::vector<double> z;
};

struct ActionId {
    int index = 0;

    constexpr ActionId() = default;
    constexpr explicit ActionId(int i) : index(i) {}
    auto operator<=>(const ActionId&) const = default;
};

/// Smoothness constants. Full-state ones bound f_s, f_r and pi jointly; the
/// factored ones bound f_x and f_r in x alone with (a, w, z) held fixed.
struct LipschitzConstants {
    double L_f = 0.0;
    double L_R = 0.0;
    double L_pi = 0.0;
    double L_fi = 0.0;
    double L_Ri = 0.0;
};

struct StepResult {
    MarkovState next;
    double reward = 0.0;
};

/// Factored-exogenous MDP: Pr(x', w' | x, w, a) = Pr(w') Pr(x' | x, w, a).
///
/// Implementations must be immutable after construction. transition() and
/// reward() are pure functions of their arguments; the only randomness comes
/// from the Rng handed to the two samplers.
class FactoredMdp {
public:
    virtual ~FactoredMdp() = default;

    virtual std::string name() const = 0;
    /// Construction parameters, enough for make_mdp() to rebuild an equal MDP.
    virtual nlohmann::json params() const = 0;

    virtual const std::vector<std::string>& markov_features() const = 0;
    virtual const std::vector<std::string>& exogenous_features() const = 0;
    virtual const std::vector<std::string>& action_names() const = 0;
    virtual int default_horizon() const = 0;

    virtual std::vector<double> transition(const MarkovState& x, ActionId a,
                                           const ExogenousDraw& draw) const = 0;
    virtual double reward(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const = 0;

    virtual ExogenousDraw sample_exogenous(Rng& rng) const = 0;
    virtual std::vector<double> sample_initial(Rng& rng) const = 0;

    virtual std::optional<LipschitzConstants> lipschitz() const { return std::nullopt; }

    std::size_t markov_dim() const { return markov_features().size(); }
    std::size_t exo_dim() const { return exogenous_features().size(); }
    int action_count() const { return static_cast<int>(action_names().size()); }
};

using MdpPtr = std::shared_ptr<const FactoredMdp>;

enum class PolicyClass { intensity, fuel, location, tabular, constant };

std::string_view to_string(PolicyClass cls) noexcept;
PolicyClass parse_policy_class(std::string_view text);

/// Deterministic parametric policy over (x, w).
///
///  intensity  [e_lo, day]         suppress iff w[0] >= e_lo and w[1] > day
///             [e_lo, e_hi, day]   suppress iff e_lo <= w[0] <= e_hi and w[1] > day
///  fuel       [threshold]         suppress iff x[0] >= threshold
///  location   [split]             suppress iff w[2] >= split (ignition in the top half)
///  tabular    [a_0, a_1, ...]     action a_t at time step t (last entry repeats)
///  constant   [a]                 always a
///
/// "Suppress" is action 1 and "let burn" action 0 for the burn-decision MDPs.
struct Policy {
    PolicyClass policy_class = PolicyClass::constant;
    std::vector<double> params;

    bool operator==(const Policy&) const = default;
};

/// Throws ErrorCode::configuration if the parameter arity does not fit the class.
void validate_policy(const Policy& policy);
ActionId evaluate_policy(const Policy& policy, const MarkovState& x, std::span<const double> w);

std::string describe_params(const Policy& policy);

struct Step {
    MarkovState x;
    std::vector<double> w;
    ActionId a;
    double r = 0.0;

    bool operator==(const Step&) const = default;
};

struct Trajectory {
    std::vector<Step> steps;

    std::size_t length() const { return steps.size(); }
    double cumulative_reward() const;
    bool operator==(const Trajectory&) const = default;
};

struct TrajectorySet {
    std::vector<std::string> markov_names;
    std::vector<std::string> exo_names;
    std::vector<Trajectory> trajectories;

    std::size_t size() const { return trajectories.size(); }
    bool empty() const { return trajectories.empty(); }
    bool operator==(const TrajectorySet&) const = default;
};

/// One transition x -> x'. Validates the action and that the MDP produced
/// finite numbers of the declared dimension.
StepResult step(const FactoredMdp& mdp, const MarkovState& x, ActionId a, const ExogenousDraw& draw);

ExogenousDraw sample_exogenous(const FactoredMdp& mdp, Rng& rng);

/// Ground-truth Monte Carlo: n independent on-policy trajectories of length h.
/// Initial states come from the MDP's sampler unless `start` is given.
TrajectorySet rollout_ground_truth(const FactoredMdp& mdp, const Policy& policy, std::size_t n, int h,
                                   Rng& rng, const std::optional<std::vector<double>>& start = std::nullopt);

} // namespace exostitch
