#include "exostitch/benchmarks.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace exostitch {

namespace {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

Eigen::MatrixXd to_eigen(const std::vector<std::vector<double>>& m) {
    const auto rows = static_cast<Eigen::Index>(m.size());
    const auto cols = rows ? static_cast<Eigen::Index>(m.front().size()) : 0;
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(m[r].size()) != cols) {
            throw Error(ErrorCode::configuration, "ragged matrix in MDP parameters");
        }
        for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = m[r][c];
    }
    return out;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace

double spectral_norm(const std::vector<std::vector<double>>& m) {
    const auto e = to_eigen(m);
    if (e.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
    return svd.singularValues()(0);
}

// ---------------------------------------------------------------- GridWorld

GridWorld::GridWorld() : GridWorld(Params{}) {}

GridWorld::GridWorld(Params p) : p_(p) {
    if (p_.size < 1 || p_.horizon < 1) throw Error(ErrorCode::configuration, "gridworld needs size, horizon >= 1");
}

nlohmann::json GridWorld::params() const {
    return {{"size", p_.size},
            {"horizon", p_.horizon},
            {"row_weight", p_.row_weight},
            {"col_weight", p_.col_weight},
            {"start", p_.start}};
}

std::vector<double> GridWorld::transition(const MarkovState& x, ActionId a, const ExogenousDraw&) const {
    auto next = x.features;
    const double limit = p_.size - 1;
    if (a == up) next[0] = std::min(next[0] + 1.0, limit);
    else next[1] = std::min(next[1] + 1.0, limit);
    return next;
}

double GridWorld::reward(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const {
    if (x.time_step + 1 != p_.horizon) return 0.0;
    const auto next = transition(x, a, draw);
    return p_.row_weight * next[0] - p_.col_weight * next[1];
}

ExogenousDraw GridWorld::sample_exogenous(Rng&) const { return {}; }

std::vector<double> GridWorld::sample_initial(Rng&) const { return {p_.start[0], p_.start[1]}; }

// ----------------------------------------------------------------- EmberMdp

EmberMdp::EmberMdp() : EmberMdp(Params{}) {}

EmberMdp::EmberMdp(Params p) : p_(p) {
    if (p_.horizon < 1) throw Error(ErrorCode::configuration, "ember horizon must be >= 1");
    if (p_.grid_step < 0.0) throw Error(ErrorCode::configuration, "ember grid_step must be >= 0");
}

nlohmann::json EmberMdp::params() const {
    return {{"horizon", p_.horizon},
            {"initial_fuel", p_.initial_fuel},
            {"initial_canopy", p_.initial_canopy},
            {"grid_step", p_.grid_step}};
}

double EmberMdp::burn(double fuel, ActionId a, double severity, double z_burn) {
    const double k = a == suppress ? 0.0004 : 0.004;
    return k * z_burn * severity * fuel;
}

double EmberMdp::snap(double v) const {
    if (p_.grid_step <= 0.0) return v;
    return clamp01(std::round(v / p_.grid_step) * p_.grid_step);
}

std::vector<double> EmberMdp::transition(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const {
    const double fuel = x.features[0];
    const double canopy = x.features[1];
    const double b = burn(fuel, a, draw.w[0], draw.z[0]);
    return {snap(clamp01(fuel - b + 0.05)), snap(clamp01(canopy - b + 0.02))};
}

double EmberMdp::reward(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const {
    const double b = burn(x.features[0], a, draw.w[0], draw.z[0]);
    return -10.0 * b - (a == suppress ? 5.0 : 0.0);
}

ExogenousDraw EmberMdp::sample_exogenous(Rng& rng) const {
    ExogenousDraw d;
    d.w = {uniform(rng, 0.0, severity_max), uniform(rng, 0.0, day_max), uniform01(rng)};
    d.z = {uniform01(rng)};
    return d;
}

std::vector<double> EmberMdp::sample_initial(Rng& rng) const {
    const double fuel = uniform(rng, p_.initial_fuel[0], p_.initial_fuel[1]);
    const double canopy = uniform(rng, p_.initial_canopy[0], p_.initial_canopy[1]);
    return {snap(fuel), snap(canopy)};
}

// ------------------------------------------------------- LinearLipschitzMdp

LinearLipschitzMdp::LinearLipschitzMdp() : LinearLipschitzMdp(Params{}) {}

LinearLipschitzMdp::LinearLipschitzMdp(Params p) : p_(std::move(p)) {
    const auto m = p_.A.size();
    const auto q = p_.e.size();
    const bool shapes_ok = m > 0 && p_.b.size() == m && p_.C.size() == m && p_.c.size() == m && p_.x0.size() == m &&
                           std::all_of(p_.A.begin(), p_.A.end(), [m](const auto& r) { return r.size() == m; }) &&
                           std::all_of(p_.C.begin(), p_.C.end(), [q](const auto& r) { return r.size() == q; });
    if (!shapes_ok || p_.horizon < 1) throw Error(ErrorCode::configuration, "inconsistent linear MDP dimensions");

    for (std::size_t i = 0; i < m; ++i) markov_.push_back("x" + std::to_string(i));
    for (std::size_t i = 0; i < q; ++i) exo_.push_back("w" + std::to_string(i));

    constants_.L_fi = spectral_norm(p_.A);
    constants_.L_Ri = norm2(p_.c);

    // Full state s = (x, w): f_s is [A C] s + b a, reward [c e] . s + d a.
    std::vector<std::vector<double>> AC = p_.A;
    for (std::size_t r = 0; r < m; ++r) AC[r].insert(AC[r].end(), p_.C[r].begin(), p_.C[r].end());
    std::vector<double> ce = p_.c;
    ce.insert(ce.end(), p_.e.begin(), p_.e.end());
    constants_.L_f = std::max(spectral_norm(AC), norm2(p_.b));
    constants_.L_R = std::max(norm2(ce), std::abs(p_.d));
    constants_.L_pi = 0.0;
}

nlohmann::json LinearLipschitzMdp::params() const {
    return {{"horizon", p_.horizon}, {"A", p_.A},         {"b", p_.b},   {"C", p_.C},
            {"sigma_z", p_.sigma_z}, {"c", p_.c},         {"d", p_.d},   {"e", p_.e},
            {"x0", p_.x0},           {"initial_spread", p_.initial_spread}};
}

std::vector<double> LinearLipschitzMdp::transition(const MarkovState& x, ActionId a,
                                                   const ExogenousDraw& draw) const {
    const auto m = p_.A.size();
    std::vector<double> next(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double v = p_.b[i] * a.index + p_.sigma_z * draw.z[i];
        for (std::size_t j = 0; j < m; ++j) v += p_.A[i][j] * x.features[j];
        for (std::size_t j = 0; j < draw.w.size(); ++j) v += p_.C[i][j] * draw.w[j];
        next[i] = v;
    }
    return next;
}

double LinearLipschitzMdp::reward(const MarkovState& x, ActionId a, const ExogenousDraw& draw) const {
    double r = p_.d * a.index;
    for (std::size_t i = 0; i < p_.c.size(); ++i) r += p_.c[i] * x.features[i];
    for (std::size_t j = 0; j < p_.e.size(); ++j) r += p_.e[j] * draw.w[j];
    return r;
}

ExogenousDraw LinearLipschitzMdp::sample_exogenous(Rng& rng) const {
    ExogenousDraw d;
    d.w.resize(p_.e.size());
    for (auto& v : d.w) v = uniform01(rng);
    d.z.resize(p_.A.size());
    for (auto& v : d.z) v = standard_normal(rng);
    return d;
}

std::vector<double> LinearLipschitzMdp::sample_initial(Rng& rng) const {
    auto x = p_.x0;
    for (auto& v : x) v += uniform(rng, -p_.initial_spread, p_.initial_spread);
    return x;
}

// ----------------------------------------------------------------- factory

MdpPtr make_mdp(const std::string& name, const nlohmann::json& params) {
    try {
        if (name == "gridworld") {
            GridWorld::Params p;
            read_opt(params, "size", p.size);
            read_opt(params, "horizon", p.horizon);
            read_opt(params, "row_weight", p.row_weight);
            read_opt(params, "col_weight", p.col_weight);
            read_opt(params, "start", p.start);
            return std::make_shared<GridWorld>(p);
        }
        if (name == "ember") {
            EmberMdp::Params p;
            read_opt(params, "horizon", p.horizon);
            read_opt(params, "initial_fuel", p.initial_fuel);
            read_opt(params, "initial_canopy", p.initial_canopy);
            read_opt(params, "grid_step", p.grid_step);
            return std::make_shared<EmberMdp>(p);
        }
        if (name == "linear") {
            LinearLipschitzMdp::Params p;
            read_opt(params, "horizon", p.horizon);
            read_opt(params, "A", p.A);
            read_opt(params, "b", p.b);
            read_opt(params, "C", p.C);
            read_opt(params, "sigma_z", p.sigma_z);
            read_opt(params, "c", p.c);
            read_opt(params, "d", p.d);
            read_opt(params, "e", p.e);
            read_opt(params, "x0", p.x0);
            read_opt(params, "initial_spread", p.initial_spread);
            return std::make_shared<LinearLipschitzMdp>(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::configuration, "bad parameters for MDP '" + name + "': " + e.what());
    }
    throw Error(ErrorCode::configuration, "unknown MDP '" + name + "'");
}

} // namespace exostitch
