#include "exostitch/query.hpp"

#include "exostitch/benchmarks.hpp"

#include <cstdio>

namespace exostitch {

std::string_view to_string(QueryAlgorithm a) noexcept {
    switch (a) {
    case QueryAlgorithm::ground_truth: return "ground_truth";
    case QueryAlgorithm::mfmc: return "mfmc";
    case QueryAlgorithm::mfmci: return "mfmci";
    case QueryAlgorithm::mfmci_biased: return "mfmci_biased";
    case QueryAlgorithm::random_baseline: return "random_baseline";
    }
    return "unknown";
}

QueryAlgorithm parse_query_algorithm(std::string_view text) {
    for (auto a : {QueryAlgorithm::ground_truth, QueryAlgorithm::mfmc, QueryAlgorithm::mfmci,
                   QueryAlgorithm::mfmci_biased, QueryAlgorithm::random_baseline}) {
        if (text == to_string(a)) return a;
    }
    throw Error(ErrorCode::bad_params, "unknown algorithm '" + std::string(text) + "'");
}

PolicyQuery parse_policy_query(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::bad_params, "request body must be a JSON object");
    PolicyQuery q;
    try {
        q.policy.policy_class = parse_policy_class(j.at("policy_class").get<std::string>());
        q.policy.params = j.value("params", std::vector<double>{});
        q.algorithm = parse_query_algorithm(j.value("algorithm", std::string("mfmci")));
        q.n = j.value("n", q.n);
        q.h = j.value("h", q.h);
        q.db_id = j.value("db_id", std::string{});
        q.seed = j.value("seed", q.seed);
        q.variables = j.value("variables", q.variables);
        q.quantile_levels = j.value("quantile_levels", q.quantile_levels);
        q.metric = j.value("metric", nlohmann::json::object());
        if (j.contains("x0") && !j.at("x0").is_null()) q.x0 = j.at("x0").get<std::vector<double>>();
        q.mdp_name = j.value("mdp", std::string{});
        q.mdp_params = j.value("mdp_params", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::bad_params, std::string("policy query: ") + e.what());
    }
    try {
        validate_policy(q.policy);
    } catch (const Error& e) {
        throw Error(ErrorCode::bad_params, e.what());
    }
    if (q.n == 0) throw Error(ErrorCode::bad_params, "n must be >= 1");
    if (q.h < 0) throw Error(ErrorCode::bad_params, "h must be >= 1");
    return q;
}

nlohmann::json to_json(const PolicyQuery& q) {
    return {{"policy_class", to_string(q.policy.policy_class)},
            {"params", q.policy.params},
            {"algorithm", to_string(q.algorithm)},
            {"n", q.n},
            {"h", q.h},
            {"db_id", q.db_id},
            {"seed", q.seed},
            {"variables", q.variables},
            {"quantile_levels", q.quantile_levels},
            {"metric", q.metric},
            {"x0", q.x0 ? nlohmann::json(*q.x0) : nlohmann::json(nullptr)},
            {"mdp", q.mdp_name},
            {"mdp_params", q.mdp_params}};
}

TrajectorySet run_query(const PolicyQuery& q, std::shared_ptr<const TransitionDatabase> db) {
    MdpPtr mdp;
    if (db) mdp = make_mdp(db->mdp_name(), db->mdp_params());
    else if (q.algorithm == QueryAlgorithm::ground_truth && !q.mdp_name.empty()) mdp = make_mdp(q.mdp_name, q.mdp_params);
    else throw Error(ErrorCode::bad_params, std::string(to_string(q.algorithm)) + " needs a database");

    const int h = q.h > 0 ? q.h : (db ? db->horizon() : mdp->default_horizon());
    if (db && q.algorithm != QueryAlgorithm::ground_truth && h > db->horizon()) {
        throw Error(ErrorCode::bad_params, "h = " + std::to_string(h) + " exceeds the database horizon " +
                                               std::to_string(db->horizon()));
    }
    if (q.x0 && q.x0->size() != mdp->markov_dim()) {
        throw Error(ErrorCode::bad_params, "x0 has the wrong dimension");
    }

    Rng rng(q.seed);
    switch (q.algorithm) {
    case QueryAlgorithm::ground_truth: return rollout_ground_truth(*mdp, q.policy, q.n, h, rng, q.x0);
    case QueryAlgorithm::random_baseline: {
        auto ts = random_baseline(*db, q.n, rng);
        for (auto& t : ts.trajectories) t.steps.resize(std::min<std::size_t>(t.steps.size(), static_cast<std::size_t>(h)));
        return ts;
    }
    default: break;
    }
    Algorithm alg = Algorithm::mfmci;
    if (q.algorithm == QueryAlgorithm::mfmc) alg = Algorithm::mfmc;
    if (q.algorithm == QueryAlgorithm::mfmci_biased) alg = Algorithm::mfmci_biased;
    const bool full = alg == Algorithm::mfmc;
    StitcherOptions opts;
    opts.match_successor = q.metric.value("match_successor", false);
    const Stitcher stitcher(db, alg, metric_from_config(*db, q.metric, full), opts);
    const auto starts = sampled_starts(*mdp, q.n, rng, q.x0);
    return stitcher.trajectory_set(q.policy, h, starts);
}

namespace {

void append_number(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

} // namespace

std::string trajectories_csv(const TrajectorySet& ts) {
    std::string out = "trajectory_id,time_step,action,reward";
    for (const auto& n : ts.markov_names) out += ",x_" + n;
    for (const auto& n : ts.exo_names) out += ",w_" + n;
    out += '\n';
    for (std::size_t i = 0; i < ts.size(); ++i) {
        for (const auto& s : ts.trajectories[i].steps) {
            out += std::to_string(i) + ',' + std::to_string(s.x.time_step) + ',' + std::to_string(s.a.index) + ',';
            append_number(out, s.r);
            for (double v : s.x.features) {
                out += ',';
                append_number(out, v);
            }
            for (double v : s.w) {
                out += ',';
                append_number(out, v);
            }
            out += '\n';
        }
    }
    return out;
}

nlohmann::json to_json(const TrajectorySet& ts) {
    nlohmann::json trajs = nlohmann::json::array();
    for (const auto& t : ts.trajectories) {
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& s : t.steps) {
            steps.push_back({{"t", s.x.time_step}, {"x", s.x.features}, {"w", s.w}, {"a", s.a.index}, {"r", s.r}});
        }
        trajs.push_back(std::move(steps));
    }
    return {{"markov_names", ts.markov_names}, {"exogenous_names", ts.exo_names}, {"trajectories", trajs}};
}

} // namespace exostitch
