#include "exostitch/learning_curve.hpp"

#include "exostitch/benchmarks.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

namespace exostitch {

std::size_t seed_trajectories_for(std::size_t records, int h) {
    if (h < 1 || records < static_cast<std::size_t>(h) || records % static_cast<std::size_t>(h) != 0) {
        throw Error(ErrorCode::configuration, "database size " + std::to_string(records) +
                                                  " is not a positive multiple of the horizon " + std::to_string(h));
    }
    return records / static_cast<std::size_t>(h);
}

namespace {

struct Cell {
    std::uint64_t seed;
    std::size_t db_size;
};

std::vector<std::string> default_variables(const FactoredMdp& mdp) {
    auto v = mdp.markov_features();
    v.push_back("reward");
    v.push_back("cumulative_reward");
    return v;
}

std::vector<LearningCurveRow> run_cell(const LearningCurveConfig& cfg, const FactoredMdp& mdp, const Cell& cell) {
    const auto n_seed = seed_trajectories_for(cell.db_size, cfg.h);
    const auto grid = grid_of_size(cfg.seed_range0, cfg.seed_range1, n_seed);
    const auto variables = cfg.variables.empty() ? default_variables(mdp) : cfg.variables;

    // Same stream for both databases: identical trajectories, different storage.
    const auto db_seed = derive_seed(cell.seed, {0, cell.db_size});
    Rng rng_debiased(db_seed);
    Rng rng_biased(db_seed);
    auto debiased = std::make_shared<const TransitionDatabase>(
        seed_policy_grid(mdp, cfg.seed_class, grid, cfg.h, rng_debiased, DbMode::debiased));
    auto biased = std::make_shared<const TransitionDatabase>(
        seed_policy_grid(mdp, cfg.seed_class, grid, cfg.h, rng_biased, DbMode::biased));

    std::vector<LearningCurveRow> rows;
    for (std::size_t qi = 0; qi < cfg.queries.size(); ++qi) {
        const auto& policy = cfg.queries[qi];
        Rng truth_rng(derive_seed(cell.seed, {1, qi}));
        const auto truth = rollout_ground_truth(mdp, policy, cfg.n, cfg.h, truth_rng);
        Rng boot_rng(derive_seed(cell.seed, {4, qi}));
        const double floor = bootstrap_floor(truth, variables, cfg.bootstrap_reps, boot_rng);

        double baseline = std::numeric_limits<double>::quiet_NaN();
        std::string baseline_failure;
        try {
            Rng base_rng(derive_seed(cell.seed, {3, cell.db_size, qi}));
            baseline = visual_fidelity_error(truth, random_baseline(*debiased, cfg.n, base_rng), variables)
                           .weighted_total;
        } catch (const Error& e) {
            baseline_failure = std::string("random_baseline: ") + e.what();
        }

        for (auto alg : cfg.algorithms) {
            LearningCurveRow row;
            row.algorithm = alg;
            row.policy = policy;
            row.db_size = cell.db_size;
            row.bootstrap_floor = floor;
            row.random_baseline = baseline;
            row.seed = cell.seed;
            row.failure = baseline_failure;
            try {
                const bool full = alg == Algorithm::mfmc;
                auto db = alg == Algorithm::mfmci_biased ? biased : debiased;
                auto metric_cfg = cfg.metric;
                if (full && !metric_cfg.contains("action_penalty")) metric_cfg["action_penalty"] = cfg.action_penalty;
                const Stitcher stitcher(db, alg, metric_from_config(*db, metric_cfg, full));
                Rng start_rng(derive_seed(cell.seed, {2, cell.db_size, qi}));
                const auto starts = sampled_starts(mdp, cfg.n, start_rng);
                const auto sur = stitcher.trajectory_set(policy, cfg.h, starts);
                row.weighted_error = visual_fidelity_error(truth, sur, variables).weighted_total;
            } catch (const Error& e) {
                row.failure += (row.failure.empty() ? "" : "; ") + std::string(to_string(e.code())) + ": " + e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::vector<LearningCurveRow> run_learning_curve(const LearningCurveConfig& cfg) {
    if (cfg.queries.empty() || cfg.db_sizes.empty() || cfg.algorithms.empty() || cfg.seeds.empty()) {
        throw Error(ErrorCode::configuration, "learning curve needs queries, db sizes, algorithms and seeds");
    }
    for (const auto& q : cfg.queries) validate_policy(q);
    for (auto s : cfg.db_sizes) seed_trajectories_for(s, cfg.h);
    const auto mdp = make_mdp(cfg.mdp_name, cfg.mdp_params);

    std::vector<Cell> cells;
    for (auto seed : cfg.seeds) {
        for (auto size : cfg.db_sizes) cells.push_back({seed, size});
    }
    std::vector<std::vector<LearningCurveRow>> results(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());

    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                results[i] = run_cell(cfg, *mdp, cells[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<LearningCurveRow> rows;
    for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

std::string learning_curve_csv(const std::vector<LearningCurveRow>& rows) {
    std::string out = "algorithm,policy_class,policy_params,db_size,weighted_error,bootstrap_floor,random_baseline,seed\n";
    for (const auto& r : rows) {
        out += std::string(to_string(r.algorithm)) + ',' + std::string(to_string(r.policy.policy_class)) + ',' +
               describe_params(r.policy) + ',' + std::to_string(r.db_size) + ',' + fmt(r.weighted_error) + ',' +
               fmt(r.bootstrap_floor) + ',' + fmt(r.random_baseline) + ',' + std::to_string(r.seed) + '\n';
    }
    return out;
}

namespace {

template <typename Pick>
double mean_over_seeds(const std::vector<LearningCurveRow>& rows, Pick pick) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : rows) {
        if (auto v = pick(r)) {
            sum += *v;
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

} // namespace

double mean_error(const std::vector<LearningCurveRow>& rows, Algorithm a, PolicyClass pc, std::size_t db_size) {
    return mean_over_seeds(rows, [&](const LearningCurveRow& r) -> std::optional<double> {
        if (r.algorithm != a || r.policy.policy_class != pc || r.db_size != db_size) return std::nullopt;
        return r.weighted_error;
    });
}

double mean_floor(const std::vector<LearningCurveRow>& rows, PolicyClass pc, std::size_t db_size) {
    // Every algorithm row repeats the floor; use the first algorithm seen.
    const auto a = rows.empty() ? Algorithm::mfmci : rows.front().algorithm;
    return mean_over_seeds(rows, [&](const LearningCurveRow& r) -> std::optional<double> {
        if (r.algorithm != a || r.policy.policy_class != pc || r.db_size != db_size) return std::nullopt;
        return r.bootstrap_floor;
    });
}

double mean_random(const std::vector<LearningCurveRow>& rows, PolicyClass pc, std::size_t db_size) {
    const auto a = rows.empty() ? Algorithm::mfmci : rows.front().algorithm;
    return mean_over_seeds(rows, [&](const LearningCurveRow& r) -> std::optional<double> {
        if (r.algorithm != a || r.policy.policy_class != pc || r.db_size != db_size) return std::nullopt;
        return r.random_baseline;
    });
}

nlohmann::json learning_curve_summary(const LearningCurveConfig& cfg, const std::vector<LearningCurveRow>& rows) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& r : rows) {
        if (r.failure.empty()) continue;
        failures.push_back({{"algorithm", to_string(r.algorithm)},
                            {"policy_class", to_string(r.policy.policy_class)},
                            {"policy_params", describe_params(r.policy)},
                            {"db_size", r.db_size},
                            {"seed", r.seed},
                            {"message", r.failure}});
    }
    // NaN is not JSON; means over failed cells come out as null.
    auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& q : cfg.queries) {
        for (auto a : cfg.algorithms) {
            nlohmann::json points = nlohmann::json::array();
            for (auto size : cfg.db_sizes) {
                points.push_back({{"db_size", size},
                                  {"weighted_error", num(mean_error(rows, a, q.policy_class, size))},
                                  {"bootstrap_floor", num(mean_floor(rows, q.policy_class, size))},
                                  {"random_baseline", num(mean_random(rows, q.policy_class, size))}});
            }
            curves.push_back({{"algorithm", to_string(a)},
                              {"policy_class", to_string(q.policy_class)},
                              {"policy_params", describe_params(q)},
                              {"points", points}});
        }
    }
    return {{"config", to_json(cfg)},
            {"rows", rows.size()},
            {"complete", failures.empty()},
            {"failures", failures},
            {"curves", curves}};
}

LearningCurveConfig parse_learning_curve_config(const nlohmann::json& j) {
    try {
        LearningCurveConfig cfg;
        if (j.contains("mdp")) {
            cfg.mdp_name = j.at("mdp").value("name", cfg.mdp_name);
            cfg.mdp_params = j.at("mdp").value("params", nlohmann::json::object());
        }
        if (j.contains("seed_policy")) {
            const auto& s = j.at("seed_policy");
            cfg.seed_class = parse_policy_class(s.value("class", std::string("intensity")));
            if (s.contains("ranges")) {
                const auto r = s.at("ranges").get<std::vector<std::array<double, 2>>>();
                if (r.size() != 2) throw Error(ErrorCode::configuration, "seed_policy.ranges needs two ranges");
                cfg.seed_range0 = r[0];
                cfg.seed_range1 = r[1];
            }
        }
        for (const auto& q : j.at("queries")) {
            Policy p{parse_policy_class(q.at("class").get<std::string>()), q.at("params").get<std::vector<double>>()};
            validate_policy(p);
            cfg.queries.push_back(std::move(p));
        }
        cfg.db_sizes = j.at("db_sizes").get<std::vector<std::size_t>>();
        if (j.contains("algorithms")) {
            cfg.algorithms.clear();
            for (const auto& a : j.at("algorithms")) cfg.algorithms.push_back(parse_algorithm(a.get<std::string>()));
        }
        cfg.n = j.value("n", cfg.n);
        cfg.h = j.value("h", cfg.h);
        cfg.seeds = j.value("seeds", cfg.seeds);
        cfg.variables = j.value("variables", cfg.variables);
        cfg.bootstrap_reps = j.value("bootstrap_reps", cfg.bootstrap_reps);
        cfg.metric = j.value("metric", nlohmann::json::object());
        cfg.action_penalty = j.value("action_penalty", cfg.action_penalty);
        cfg.threads = j.value("threads", cfg.threads);
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::configuration, std::string("learning-curve config: ") + e.what());
    }
}

nlohmann::json to_json(const LearningCurveConfig& cfg) {
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& q : cfg.queries) queries.push_back({{"class", to_string(q.policy_class)}, {"params", q.params}});
    nlohmann::json algs = nlohmann::json::array();
    for (auto a : cfg.algorithms) algs.push_back(to_string(a));
    // `threads` is left out: it does not change results.
    return {{"mdp", {{"name", cfg.mdp_name}, {"params", cfg.mdp_params}}},
            {"seed_policy",
             {{"class", to_string(cfg.seed_class)}, {"ranges", {cfg.seed_range0, cfg.seed_range1}}}},
            {"queries", queries},
            {"db_sizes", cfg.db_sizes},
            {"algorithms", algs},
            {"n", cfg.n},
            {"h", cfg.h},
            {"seeds", cfg.seeds},
            {"variables", cfg.variables},
            {"bootstrap_reps", cfg.bootstrap_reps},
            {"metric", cfg.metric},
            {"action_penalty", cfg.action_penalty}};
}

} // namespace exostitch
