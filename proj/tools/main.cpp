// exostitch command-line entry point: build-db, simulate, learning-curve, serve.

#include "exostitch/benchmarks.hpp"
#include "exostitch/config.hpp"
#include "exostitch/learning_curve.hpp"
#include "exostitch/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>

using namespace exostitch;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;
constexpr int kExhausted = 3;

Service* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

std::vector<double> split_numbers(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size() && !text.empty()) {
        const auto end = text.find(',', start);
        const auto item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::bad_params, "not a number: '" + item + "'");
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

int build_db(const std::string& config, const std::string& mode, const std::string& out,
             std::optional<std::uint64_t> seed) {
    auto cfg = parse_build_config(read_json_file(config));
    if (!mode.empty()) cfg.mode = parse_db_mode(mode);
    if (seed) cfg.seed = *seed;
    const auto db = build_database(cfg);
    save(db, out);
    std::printf("database: %s\nmode: %s\nrecords: %zu\nhorizon: %d\nseed trajectories: %zu\nseed policy: %s\n",
                out.c_str(), std::string(to_string(db.mode())).c_str(), db.size(), db.horizon(),
                db.provenance().size(), std::string(to_string(cfg.seed_class)).c_str());
    return 0;
}

struct SimulateFlags {
    std::string algorithm = "mfmci";
    std::string policy;
    std::string params;
    std::size_t n = 30;
    int h = 0;
    std::string db;
    std::string mdp;
    std::string mdp_params = "{}";
    std::uint64_t seed = 0;
    std::string x0;
    std::string metric = "{}";
    std::string out;
};

int simulate(const SimulateFlags& f) {
    nlohmann::json req{{"policy_class", f.policy},
                       {"params", split_numbers(f.params)},
                       {"algorithm", f.algorithm},
                       {"n", f.n},
                       {"h", f.h},
                       {"seed", f.seed}};
    try {
        req["metric"] = nlohmann::json::parse(f.metric);
        req["mdp_params"] = nlohmann::json::parse(f.mdp_params);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::bad_params, std::string("invalid JSON flag: ") + e.what());
    }
    if (!f.x0.empty()) req["x0"] = split_numbers(f.x0);
    if (!f.mdp.empty()) req["mdp"] = f.mdp;
    const auto q = parse_policy_query(req);

    std::shared_ptr<const TransitionDatabase> db;
    if (!f.db.empty()) db = std::make_shared<const TransitionDatabase>(load(f.db));
    else if (q.algorithm != QueryAlgorithm::ground_truth) throw Error(ErrorCode::bad_params, "--db is required");
    else if (q.mdp_name.empty()) throw Error(ErrorCode::bad_params, "ground_truth without --db needs --mdp");

    const auto ts = run_query(q, db);
    const auto csv = trajectories_csv(ts);
    if (f.out.empty()) std::cout << csv;
    else write_text_file(f.out, csv);
    std::fprintf(f.out.empty() ? stderr : stdout, "value estimate: %.17g (n=%zu, h=%zu)\n", value_estimate(ts),
                 ts.size(), ts.trajectories.front().length());
    return 0;
}

int learning_curve(const std::string& config, const std::string& out_csv, const std::string& out_json,
                   std::optional<std::size_t> threads) {
    auto cfg = parse_learning_curve_config(read_json_file(config));
    if (threads) cfg.threads = *threads;
    const auto rows = run_learning_curve(cfg);
    const auto summary = learning_curve_summary(cfg, rows);
    write_text_file(out_csv, learning_curve_csv(rows));
    write_text_file(out_json, summary.dump(2) + "\n");
    std::printf("rows: %zu\nfailed cells: %zu\ncsv: %s\nsummary: %s\n", rows.size(), summary["failures"].size(),
                out_csv.c_str(), out_json.c_str());
    if (!summary["complete"].get<bool>()) {
        std::fprintf(stderr, "learning curve incomplete: see \"failures\" in %s\n", out_json.c_str());
        return kExhausted;
    }
    return 0;
}

int serve(const std::string& db_dir, const std::string& ui_dir, const std::string& host, int port) {
    Service service(ServiceOptions{db_dir, ui_dir});
    if (service.database_ids().empty()) throw Error(ErrorCode::empty_database, "no database found under " + db_dir);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::printf("serving %zu database(s) on http://%s:%d\n", service.database_ids().size(), host.c_str(), port);
    std::fflush(stdout);
    service.listen(host, port);
    g_service = nullptr;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trajectory synthesis from a transition database"};
    app.require_subcommand(1);

    auto* build = app.add_subcommand("build-db", "Simulate seed trajectories and write a transition database");
    std::string build_config, build_mode, build_out;
    std::optional<std::uint64_t> build_seed;
    build->add_option("--config", build_config, "Build config (JSON)")->required()->check(CLI::ExistingFile);
    build->add_option("--mode", build_mode, "debiased or biased (overrides the config)")
        ->check(CLI::IsMember({"debiased", "biased"}));
    build->add_option("--out", build_out, "Output directory")->required();
    build->add_option("--seed", build_seed, "RNG seed (overrides the config)");

    auto* sim = app.add_subcommand("simulate", "Synthesize trajectories for a policy");
    SimulateFlags sf;
    sim->set_help_flag("--help", "Print this help message and exit"); // --h is the horizon
    sim->add_option("--algorithm", sf.algorithm, "ground_truth, mfmc, mfmci, mfmci_biased or random_baseline")
        ->check(CLI::IsMember({"ground_truth", "mfmc", "mfmci", "mfmci_biased", "random_baseline"}));
    sim->add_option("--policy", sf.policy, "Policy class")->required();
    sim->add_option("--params", sf.params, "Comma-separated policy parameters");
    sim->add_option("--n", sf.n, "Number of trajectories");
    sim->add_option("--h", sf.h, "Horizon (default: the database horizon)");
    sim->add_option("--db", sf.db, "Database directory")->check(CLI::ExistingDirectory);
    sim->add_option("--mdp", sf.mdp, "MDP name for ground_truth without a database");
    sim->add_option("--mdp-params", sf.mdp_params, "MDP parameters (JSON)");
    sim->add_option("--seed", sf.seed, "RNG seed");
    sim->add_option("--x0", sf.x0, "Fixed initial Markov state, comma-separated");
    sim->add_option("--metric", sf.metric, "Distance metric config (JSON)");
    sim->add_option("--out", sf.out, "Output CSV (default: stdout)");

    auto* lc = app.add_subcommand("learning-curve", "Visual error as a function of database size");
    std::string lc_config, lc_csv, lc_json;
    std::optional<std::size_t> lc_threads;
    lc->add_option("--config", lc_config, "Learning-curve config (JSON)")->required()->check(CLI::ExistingFile);
    lc->add_option("--out-csv", lc_csv, "Result table")->required();
    lc->add_option("--out-json", lc_json, "Summary")->required();
    lc->add_option("--threads", lc_threads, "Worker threads (results do not depend on it)");

    auto* srv = app.add_subcommand("serve", "HTTP/JSON service for the explorer UI");
    std::string db_dir, ui_dir, host = "127.0.0.1";
    int port = 8080;
    srv->add_option("--db-dir", db_dir, "Database directory")->envname("EXOSTITCH_DB_DIR")->required();
    srv->add_option("--ui-dir", ui_dir, "Static UI bundle")->envname("EXOSTITCH_UI_DIR");
    srv->add_option("--host", host, "Bind address")->envname("EXOSTITCH_HOST");
    srv->add_option("--port", port, "Port")->envname("EXOSTITCH_PORT");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << sub->help();
        return kUsageError;
    }

    try {
        if (*build) return build_db(build_config, build_mode, build_out, build_seed);
        if (*sim) return simulate(sf);
        if (*lc) return learning_curve(lc_config, lc_csv, lc_json, lc_threads);
        if (*srv) return serve(db_dir, ui_dir, host, port);
    } catch (const ExhaustionError& e) {
        std::cerr << "error [exhaustion]: " << e.what() << '\n';
        return kExhausted;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}
