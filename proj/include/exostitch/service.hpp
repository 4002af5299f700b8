#pragma once

#include "exostitch/query.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <thread>

namespace exostitch {

inline constexpr const char* kApiVersion = "1";

struct ServiceOptions {
    std::filesystem::path db_dir;  // a database, or a directory of databases
    std::filesystem::path ui_dir;  // static UI bundle; skipped if empty
    std::size_t inline_limit = 2000; // max n*h steps returned inline
};

/// JSON endpoints over a fixed set of loaded databases.
///
/// Handlers are plain functions of (request, databases) so they can be tested
/// without sockets. The only shared mutable state is the trajectory-set
/// cache, keyed by a hash of the normalized request.
class Service {
public:
    struct Response {
        int status = 200;
        nlohmann::json body;
    };

    explicit Service(ServiceOptions options);
    ~Service();

    void add_database(const std::string& id, std::shared_ptr<const TransitionDatabase> db);
    std::vector<std::string> database_ids() const;

    Response list_databases(std::optional<std::size_t> dispersion_k) const;
    Response post_trajectories(const nlohmann::json& request);
    Response get_trajectories(const std::string& set_id) const;
    Response get_fanchart(const std::string& set_id, const std::string& variable,
                          const std::optional<std::string>& levels) const;
    Response post_fidelity(const nlohmann::json& request) const;
    Response get_bounds(const std::map<std::string, std::string>& params) const;

    /// Binds and serves on a background thread; returns the bound port
    /// (pass 0 for any free port).
    int start(const std::string& host, int port);
    /// Binds and serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

    std::size_t cached_sets() const;

private:
    struct CachedSet {
        PolicyQuery query;
        TrajectorySet set;
        double value = 0.0;
    };

    std::shared_ptr<const TransitionDatabase> database(const std::string& id) const;
    std::shared_ptr<const CachedSet> cached(const std::string& set_id) const;
    void setup_routes();

    ServiceOptions options_;
    std::map<std::string, std::shared_ptr<const TransitionDatabase>> dbs_;
    mutable std::shared_mutex cache_mutex_;
    std::map<std::string, std::shared_ptr<const CachedSet>> cache_;

    struct Server;
    std::unique_ptr<Server> server_;
    std::thread thread_;
};

/// Error body {"error": {"code", "message", ...}} and the HTTP status for a code.
Service::Response error_response(const Error& e);
int http_status(ErrorCode code);

/// Loads every database under `dir` (the directory itself if it holds a
/// manifest, else each child that does). Ids are directory names.
std::map<std::string, std::shared_ptr<const TransitionDatabase>> load_database_dir(const std::filesystem::path& dir);

} // namespace exostitch
