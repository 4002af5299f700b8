#include "exostitch/config.hpp"

#include "exostitch/benchmarks.hpp"

#include <fstream>
#include <sstream>

namespace exostitch {

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::configuration, path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

BuildConfig parse_build_config(const nlohmann::json& j) {
    try {
        BuildConfig cfg;
        const auto& mdp = j.at("mdp");
        cfg.mdp_name = mdp.at("name").get<std::string>();
        cfg.mdp_params = mdp.value("params", nlohmann::json::object());
        cfg.horizon = j.value("horizon", 0);
        cfg.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("mode")) cfg.mode = parse_db_mode(j.at("mode").get<std::string>());

        const auto& sp = j.at("seed_policy");
        cfg.seed_class = parse_policy_class(sp.at("class").get<std::string>());
        if (sp.contains("grid")) {
            cfg.grid = sp.at("grid").get<std::vector<std::vector<double>>>();
        } else if (sp.contains("ranges")) {
            const auto ranges = sp.at("ranges").get<std::vector<std::array<double, 2>>>();
            if (sp.contains("counts")) {
                cfg.grid = make_param_grid(ranges, sp.at("counts").get<std::vector<std::size_t>>());
            } else {
                if (ranges.size() != 2) throw Error(ErrorCode::configuration, "seed_policy.size needs two ranges");
                cfg.grid = grid_of_size(ranges[0], ranges[1], sp.at("size").get<std::size_t>());
            }
        } else {
            const auto params = sp.at("params").get<std::vector<double>>();
            cfg.grid.assign(sp.value("trajectories", std::size_t{1}), params);
        }
        if (cfg.grid.empty()) throw Error(ErrorCode::configuration, "seed_policy yields no trajectories");
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::configuration, std::string("build config: ") + e.what());
    }
}

TransitionDatabase build_database(const BuildConfig& cfg) {
    const auto mdp = make_mdp(cfg.mdp_name, cfg.mdp_params);
    const int h = cfg.horizon > 0 ? cfg.horizon : mdp->default_horizon();
    Rng rng(cfg.seed);
    return seed_policy_grid(*mdp, cfg.seed_class, cfg.grid, h, rng, cfg.mode);
}

} // namespace exostitch
