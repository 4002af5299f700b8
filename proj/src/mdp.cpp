#include "exostitch/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace exostitch {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::contract_violation: return "contract_violation";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::exhaustion: return "exhaustion";
    case ErrorCode::empty_database: return "empty_database";
    case ErrorCode::integrity: return "integrity";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::malformed: return "malformed";
    case ErrorCode::checksum: return "checksum";
    case ErrorCode::io: return "io";
    case ErrorCode::bad_policy: return "bad_policy";
    case ErrorCode::unknown_db: return "unknown_db";
    case ErrorCode::unknown_set: return "unknown_set";
    case ErrorCode::bad_params: return "bad_params";
    }
    return "unknown";
}

std::string_view to_string(PolicyClass cls) noexcept {
    switch (cls) {
    case PolicyClass::intensity: return "intensity";
    case PolicyClass::fuel: return "fuel";
    case PolicyClass::location: return "location";
    case PolicyClass::tabular: return "tabular";
    case PolicyClass::constant: return "constant";
    }
    return "unknown";
}

PolicyClass parse_policy_class(std::string_view text) {
    for (auto cls : {PolicyClass::intensity, PolicyClass::fuel, PolicyClass::location, PolicyClass::tabular,
                     PolicyClass::constant}) {
        if (text == to_string(cls)) return cls;
    }
    throw Error(ErrorCode::bad_policy, "unknown policy class '" + std::string(text) + "'");
}

void validate_policy(const Policy& policy) {
    const auto n = policy.params.size();
    bool ok = false;
    switch (policy.policy_class) {
    case PolicyClass::intensity: ok = n == 2 || n == 3; break;
    case PolicyClass::fuel:
    case PolicyClass::location:
    case PolicyClass::constant: ok = n == 1; break;
    case PolicyClass::tabular: ok = n >= 1; break;
    }
    if (!ok) {
        throw Error(ErrorCode::configuration, "policy class '" + std::string(to_string(policy.policy_class)) +
                                                  "' does not accept " + std::to_string(n) + " parameters");
    }
}

namespace {

ActionId suppress_if(bool cond) { return ActionId{cond ? 1 : 0}; }

double need(std::span<const double> v, std::size_t i, const char* what) {
    if (i >= v.size()) {
        throw Error(ErrorCode::contract_violation,
                    std::string("policy reads ") + what + "[" + std::to_string(i) + "] but only " +
                        std::to_string(v.size()) + " values are present");
    }
    return v[i];
}

} // namespace

ActionId evaluate_policy(const Policy& policy, const MarkovState& x, std::span<const double> w) {
    validate_policy(policy);
    const auto& p = policy.params;
    switch (policy.policy_class) {
    case PolicyClass::intensity: {
        const double e = need(w, 0, "w");
        const double d = need(w, 1, "w");
        if (p.size() == 2) return suppress_if(e >= p[0] && d > p[1]);
        return suppress_if(e >= p[0] && e <= p[1] && d > p[2]);
    }
    case PolicyClass::fuel:
        return suppress_if(need(x.features, 0, "x") >= p[0]);
    case PolicyClass::location:
        return suppress_if(need(w, 2, "w") >= p[0]);
    case PolicyClass::tabular: {
        const auto t = std::min<std::size_t>(static_cast<std::size_t>(std::max(x.time_step, 0)), p.size() - 1);
        return ActionId{static_cast<int>(p[t])};
    }
    case PolicyClass::constant:
        return ActionId{static_cast<int>(p[0])};
    }
    return ActionId{0};
}

std::string describe_params(const Policy& policy) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < policy.params.size(); ++i) {
        if (i) os << ';';
        os << policy.params[i];
    }
    return os.str();
}

double Trajectory::cumulative_reward() const {
    double total = 0.0;
    for (const auto& s : steps) total += s.r;
    return total;
}

StepResult step(const FactoredMdp& mdp, const MarkovState& x, ActionId a, const ExogenousDraw& draw) {
    if (a.index < 0 || a.index >= mdp.action_count()) {
        throw Error(ErrorCode::contract_violation, "action index " + std::to_string(a.index) + " is not valid for " +
                                                       mdp.name() + " (" + std::to_string(mdp.action_count()) +
                                                       " actions)");
    }
    if (x.features.size() != mdp.markov_dim()) {
        throw Error(ErrorCode::contract_violation, "state has " + std::to_string(x.features.size()) +
                                                       " features, expected " + std::to_string(mdp.markov_dim()));
    }
    StepResult out;
    out.next.features = mdp.transition(x, a, draw);
    out.next.time_step = x.time_step + 1;
    out.reward = mdp.reward(x, a, draw);

    const bool finite = std::isfinite(out.reward) &&
                        std::all_of(out.next.features.begin(), out.next.features.end(),
                                    [](double v) { return std::isfinite(v); });
    if (!finite || out.next.features.size() != mdp.markov_dim()) {
        std::ostringstream os;
        os.precision(17);
        os << mdp.name() << " produced a non-finite or malformed outcome at t=" << x.time_step << " x=[";
        for (std::size_t i = 0; i < x.features.size(); ++i) os << (i ? "," : "") << x.features[i];
        os << "] a=" << a.index << " w=[";
        for (std::size_t i = 0; i < draw.w.size(); ++i) os << (i ? "," : "") << draw.w[i];
        os << "]";
        throw Error(ErrorCode::numeric, os.str());
    }
    return out;
}

ExogenousDraw sample_exogenous(const FactoredMdp& mdp, Rng& rng) { return mdp.sample_exogenous(rng); }

TrajectorySet rollout_ground_truth(const FactoredMdp& mdp, const Policy& policy, std::size_t n, int h, Rng& rng,
                                   const std::optional<std::vector<double>>& start) {
    if (n < 1 || h < 1) throw Error(ErrorCode::contract_violation, "rollout needs n >= 1 and h >= 1");
    validate_policy(policy);

    TrajectorySet out;
    out.markov_names = mdp.markov_features();
    out.exo_names = mdp.exogenous_features();
    out.trajectories.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Trajectory traj;
        traj.steps.reserve(static_cast<std::size_t>(h));
        MarkovState x{start ? *start : mdp.sample_initial(rng), 0};
        for (int t = 0; t < h; ++t) {
            const auto draw = mdp.sample_exogenous(rng);
            const auto a = evaluate_policy(policy, x, draw.w);
            auto res = step(mdp, x, a, draw);
            traj.steps.push_back(Step{x, draw.w, a, res.reward});
            x = std::move(res.next);
        }
        out.trajectories.push_back(std::move(traj));
    }
    return out;
}

} // namespace exostitch
