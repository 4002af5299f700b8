#include "exostitch/metric.hpp"

#include <cmath>
#include <limits>

namespace exostitch {

namespace {

void embed_into(std::vector<double>& out, std::span<const double> v, const std::vector<double>& weights,
                const std::vector<FeatureStat>& stats, bool standardize) {
    if (v.size() != weights.size() || (standardize && v.size() != stats.size())) {
        throw Error(ErrorCode::contract_violation, "feature arity " + std::to_string(v.size()) +
                                                       " does not match the metric (" +
                                                       std::to_string(weights.size()) + ")");
    }
    for (std::size_t f = 0; f < v.size(); ++f) {
        if (standardize) {
            if (stats[f].constant) continue;
            out.push_back(std::sqrt(weights[f]) * ((v[f] - stats[f].mean) / stats[f].stddev));
        } else {
            out.push_back(std::sqrt(weights[f]) * v[f]);
        }
    }
}

std::size_t live(const std::vector<FeatureStat>& stats, std::size_t n, bool standardize) {
    if (!standardize) return n;
    std::size_t k = 0;
    for (const auto& s : stats) k += s.constant ? 0 : 1;
    return k;
}

std::vector<double> weights_or_ones(std::vector<double> w, std::size_t n, const char* what) {
    if (w.empty()) return std::vector<double>(n, 1.0);
    if (w.size() != n) throw Error(ErrorCode::configuration, std::string(what) + " weight count does not match");
    for (double v : w) {
        if (!(v >= 0.0)) throw Error(ErrorCode::configuration, std::string(what) + " weights must be nonnegative");
    }
    return w;
}

void require_stats(const TransitionDatabase& db) {
    if (db.empty()) throw Error(ErrorCode::empty_database, "cannot build a metric over an empty database");
    if (db.stats_stale()) throw Error(ErrorCode::contract_violation, "database feature stats are stale");
}

} // namespace

std::size_t DistanceMetric::embedded_dim() const {
    auto n = live(feature_stats, feature_weights.size(), standardize);
    if (includes_exogenous) n += live(exo_stats, exo_weights.size(), standardize);
    return n;
}

DistanceMetric markov_metric(const TransitionDatabase& db, std::vector<double> weights) {
    require_stats(db);
    DistanceMetric m;
    m.feature_weights = weights_or_ones(std::move(weights), db.markov_names().size(), "Markov");
    m.feature_stats = db.feature_stats();
    m.exo_weights = std::vector<double>(db.exo_names().size(), 1.0);
    m.exo_stats = db.exo_stats();
    return m;
}

DistanceMetric full_metric(const TransitionDatabase& db, double action_penalty, std::vector<double> markov_weights,
                           std::vector<double> exo_weights) {
    auto m = markov_metric(db, std::move(markov_weights));
    m.exo_weights = weights_or_ones(std::move(exo_weights), db.exo_names().size(), "exogenous");
    m.includes_exogenous = true;
    m.includes_action = true;
    m.action_penalty = action_penalty;
    return m;
}

nlohmann::json to_json(const DistanceMetric& metric) {
    return {{"markov_weights", metric.feature_weights},
            {"exogenous_weights", metric.exo_weights},
            {"standardize", metric.standardize},
            {"time_step_mode", metric.time_mode == TimeStepMode::hard_match ? "hard_match" : "weighted"},
            {"time_weight", metric.time_weight},
            {"includes_exogenous", metric.includes_exogenous},
            {"includes_action", metric.includes_action},
            {"action_penalty", metric.action_penalty}};
}

DistanceMetric metric_from_config(const TransitionDatabase& db, const nlohmann::json& cfg, bool full_state) {
    try {
        const auto mw = cfg.value("markov_weights", std::vector<double>{});
        const auto ew = cfg.value("exogenous_weights", std::vector<double>{});
        auto m = full_state ? full_metric(db, cfg.value("action_penalty", 1e6), mw, ew) : markov_metric(db, mw);
        m.standardize = cfg.value("standardize", true);
        const auto mode = cfg.value("time_step_mode", std::string("hard_match"));
        if (mode == "hard_match") m.time_mode = TimeStepMode::hard_match;
        else if (mode == "weighted") m.time_mode = TimeStepMode::weighted;
        else throw Error(ErrorCode::configuration, "unknown time_step_mode '" + mode + "'");
        m.time_weight = cfg.value("time_weight", 1e6);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::configuration, std::string("metric config: ") + e.what());
    }
}

std::vector<double> embed_markov(const DistanceMetric& metric, std::span<const double> x) {
    std::vector<double> out;
    out.reserve(x.size());
    embed_into(out, x, metric.feature_weights, metric.feature_stats, metric.standardize);
    return out;
}

std::vector<double> embed_full(const DistanceMetric& metric, std::span<const double> x, std::span<const double> w) {
    std::vector<double> out;
    out.reserve(x.size() + w.size());
    embed_into(out, x, metric.feature_weights, metric.feature_stats, metric.standardize);
    if (metric.includes_exogenous) embed_into(out, w, metric.exo_weights, metric.exo_stats, metric.standardize);
    return out;
}

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::optional<double> time_term(const DistanceMetric& metric, int t, int t_db) {
    if (metric.time_mode == TimeStepMode::hard_match) {
        if (t != t_db) return std::nullopt;
        return 0.0;
    }
    const double dt = static_cast<double>(t - t_db);
    return metric.time_weight * dt * dt;
}

std::optional<double> squared_distance_markov(const MarkovState& x, const MarkovState& x_db,
                                              const DistanceMetric& metric) {
    const auto tt = time_term(metric, x.time_step, x_db.time_step);
    if (!tt) return std::nullopt;
    const auto a = embed_markov(metric, x.features);
    const auto b = embed_markov(metric, x_db.features);
    return squared_euclidean(a, b) + *tt;
}

std::optional<double> distance_markov(const MarkovState& x, const MarkovState& x_db, const DistanceMetric& metric) {
    const auto d2 = squared_distance_markov(x, x_db, metric);
    if (!d2) return std::nullopt;
    return std::sqrt(*d2);
}

double squared_distance_full(const MarkovState& x, std::span<const double> w, ActionId a, const MarkovState& x_db,
                             std::span<const double> w_db, ActionId a_db, const DistanceMetric& metric) {
    const auto tt = time_term(metric, x.time_step, x_db.time_step);
    if (!tt) return std::numeric_limits<double>::infinity();
    const auto p = embed_full(metric, x.features, w);
    const auto q = embed_full(metric, x_db.features, w_db);
    const double action = metric.includes_action && a != a_db ? metric.action_penalty * metric.action_penalty : 0.0;
    return squared_euclidean(p, q) + (*tt + action);
}

double distance_full(const MarkovState& x, std::span<const double> w, ActionId a, const MarkovState& x_db,
                     std::span<const double> w_db, ActionId a_db, const DistanceMetric& metric) {
    return std::sqrt(squared_distance_full(x, w, a, x_db, w_db, a_db, metric));
}

} // namespace exostitch
