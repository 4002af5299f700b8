#pragma once

#include "exostitch/transition_db.hpp"

#include <filesystem>

namespace exostitch {

/// Database build recipe, as read from a JSON config:
///
///   {
///     "mdp": {"name": "ember", "params": {...}},
///     "horizon": 20,
///     "seed": 7,
///     "mode": "debiased",                      // optional; the CLI flag wins
///     "seed_policy": {
///       "class": "intensity",
///       // one of:
///       "params": [50, 90], "trajectories": 36,   // one behavior policy, n runs
///       "grid": [[0, 90], [50, 120], ...],        // one run per listed vector
///       "ranges": [[0, 100], [0, 180]], "counts": [6, 6],   // Cartesian grid
///       "ranges": [[0, 100], [0, 180]], "size": 25          // square-ish grid
///     }
///   }
struct BuildConfig {
    std::string mdp_name = "ember";
    nlohmann::json mdp_params = nlohmann::json::object();
    int horizon = 0; // 0: the MDP's default horizon
    std::uint64_t seed = 0;
    DbMode mode = DbMode::debiased;
    PolicyClass seed_class = PolicyClass::intensity;
    std::vector<std::vector<double>> grid; // one seed trajectory per entry
};

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

BuildConfig parse_build_config(const nlohmann::json& j);
TransitionDatabase build_database(const BuildConfig& cfg);

} // namespace exostitch
