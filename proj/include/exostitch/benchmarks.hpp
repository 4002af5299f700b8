#pragma once

#include "exostitch/mdp.hpp"

#include <array>

namespace exostitch {

/// Deterministic grid world with actions {up, right}. Markov state is
/// (row, col); there are no exogenous variables. The final transition of a
/// horizon pays row_weight * row - col_weight * col, every other transition 0.
class GridWorld final : public FactoredMdp {
public:
    struct Params {
        int size = 10;
        int horizon = 10;
        double row_weight = 1.0;
        double col_weight = 1.0;
        std::array<double, 2> start = {0.0, 0.0};
    };

    static constexpr ActionId up{0};
    static constexpr ActionId right{1};

    GridWorld();
    explicit GridWorld(Params p);

    std::string name() const override { return "gridworld"; }
    nlohmann::json params() const override;
    const std::vector<std::string>& markov_features() const override { return markov_; }
    const std::vector<std::string>& exogenous_features() const override { return exo_; }
    const std::vector<std::string>& action_names() const override { return actions_; }
    int default_horizon() const override { return p_.horizon; }

    std::vector<double> transition(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const override;
    double reward(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const override;
    ExogenousDraw sample_exogenous(Rng& rng) const override;
    std::vector<double> sample_initial(Rng& rng) const override;

private:
    Params p_;
    std::vector<std::string> markov_{"row", "col"};
    std::vector<std::string> exo_{};
    std::vector<std::string> actions_{"up", "right"};
};

/// Burn-or-suppress analog of a wildfire management MDP.
///
/// x = (fuel, canopy) in [0,1]^2; w = (severity e ~ U[0,100], day d ~ U[0,180],
/// position p ~ U[0,1]); z = (z_burn ~ U[0,1]).
///
///   burn    = k_a * z_burn * e * fuel,   k = 0.004 (let burn), 0.0004 (suppress)
///   fuel'   = clamp(fuel - burn + 0.05)
///   canopy' = clamp(canopy - burn + 0.02)
///   r       = -10 * burn - (5 if suppress)
///
/// With a positive `grid_step`, fuel' and canopy' are rounded to that grid so
/// the Markov state space is finite.
class EmberMdp final : public FactoredMdp {
public:
    struct Params {
        int horizon = 20;
        std::array<double, 2> initial_fuel = {0.1, 0.1};
        std::array<double, 2> initial_canopy = {0.5, 0.5};
        double grid_step = 0.0;
    };

    static constexpr ActionId let_burn{0};
    static constexpr ActionId suppress{1};

    EmberMdp();
    explicit EmberMdp(Params p);

    std::string name() const override { return "ember"; }
    nlohmann::json params() const override;
    const std::vector<std::string>& markov_features() const override { return markov_; }
    const std::vector<std::string>& exogenous_features() const override { return exo_; }
    const std::vector<std::string>& action_names() const override { return actions_; }
    int default_horizon() const override { return p_.horizon; }

    std::vector<double> transition(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const override;
    double reward(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const override;
    ExogenousDraw sample_exogenous(Rng& rng) const override;
    std::vector<double> sample_initial(Rng& rng) const override;

    /// Fraction of fuel consumed by the fire; shared by transition and reward.
    static double burn(double fuel, ActionId a, double severity, double z_burn);

    static constexpr double severity_max = 100.0;
    static constexpr double day_max = 180.0;

private:
    double snap(double v) const;

    Params p_;
    std::vector<std::string> markov_{"fuel", "canopy"};
    std::vector<std::string> exo_{"severity", "day", "position"};
    std::vector<std::string> actions_{"let_burn", "suppress"};
};

/// Linear MDP with exactly known Lipschitz constants:
///
///   x' = A x + b * a + C w + sigma_z * z,   z ~ N(0, I)
///   r  = c . x + d * a + e . w
///
/// with w ~ U[0,1]^q. In the Euclidean norm, L_fi = ||A||_2 and L_Ri = ||c||_2.
/// The full-state constants treat s = (x, w) and use |a - a'| as action metric.
class LinearLipschitzMdp final : public FactoredMdp {
public:
    struct Params {
        int horizon = 5;
        std::vector<std::vector<double>> A = {{0.6, 0.2}, {-0.1, 0.5}};
        std::vector<double> b = {0.5, -0.3};
        std::vector<std::vector<double>> C = {{0.4}, {0.2}};
        double sigma_z = 0.1;
        std::vector<double> c = {1.0, 0.5};
        double d = -0.2;
        std::vector<double> e = {0.3};
        std::vector<double> x0 = {0.0, 0.0};
        double initial_spread = 1.0;
    };

    LinearLipschitzMdp();
    explicit LinearLipschitzMdp(Params p);

    std::string name() const override { return "linear"; }
    nlohmann::json params() const override;
    const std::vector<std::string>& markov_features() const override { return markov_; }
    const std::vector<std::string>& exogenous_features() const override { return exo_; }
    const std::vector<std::string>& action_names() const override { return actions_; }
    int default_horizon() const override { return p_.horizon; }

    std::vector<double> transition(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const override;
    double reward(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const override;
    ExogenousDraw sample_exogenous(Rng& rng) const override;
    std::vector<double> sample_initial(Rng& rng) const override;
    std::optional<LipschitzConstants> lipschitz() const override { return constants_; }

private:
    Params p_;
    LipschitzConstants constants_;
    std::vector<std::string> markov_;
    std::vector<std::string> exo_;
    std::vector<std::string> actions_{"a0", "a1"};
};

/// Largest singular value of a dense row-major matrix.
double spectral_norm(const std::vector<std::vector<double>>& m);

/// Builds a benchmark MDP by name ("gridworld", "ember", "linear"). Missing
/// parameters take their defaults; unknown names raise ErrorCode::configuration.
MdpPtr make_mdp(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

} // namespace exostitch
