#include "exostitch/service.hpp"

#include "exostitch/benchmarks.hpp"

#include <httplib.h>

#include <charconv>
#include <cstdio>
#include <mutex>
#include <sstream>

namespace exostitch {

struct Service::Server {
    httplib::Server http;
};

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::bad_policy:
    case ErrorCode::bad_params:
    case ErrorCode::configuration:
    case ErrorCode::contract_violation: return 400;
    case ErrorCode::unknown_db:
    case ErrorCode::unknown_set: return 404;
    case ErrorCode::exhaustion: return 409;
    default: return 500;
    }
}

Service::Response error_response(const Error& e) {
    nlohmann::json err{{"code", to_string(e.code())}, {"message", e.what()}};
    if (const auto* ex = dynamic_cast<const ExhaustionError*>(&e)) {
        err["time_step"] = ex->time_step();
        err["trajectories_completed"] = ex->trajectories_completed();
    }
    return {http_status(e.code()), {{"error", err}}};
}

std::map<std::string, std::shared_ptr<const TransitionDatabase>> load_database_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::map<std::string, std::shared_ptr<const TransitionDatabase>> out;
    if (!fs::is_directory(dir)) throw Error(ErrorCode::io, "database directory " + dir.string() + " does not exist");
    if (fs::exists(dir / "manifest.json")) {
        const auto name = fs::absolute(dir).lexically_normal().filename().string();
        out[name.empty() ? "default" : name] = std::make_shared<const TransitionDatabase>(load(dir));
        return out;
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
            out[entry.path().filename().string()] = std::make_shared<const TransitionDatabase>(load(entry.path()));
        }
    }
    return out;
}

namespace {

// FNV-1a: stable across processes, unlike std::hash.
std::string request_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "ts-%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::bad_params, "parameter '" + key + "' is not a number: '" + text + "'");
    }
}

std::size_t parse_count(const std::string& key, const std::string& text) {
    std::size_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw Error(ErrorCode::bad_params, "parameter '" + key + "' is not a nonnegative integer: '" + text + "'");
    }
    return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
    return out;
}

const std::string& required(const std::map<std::string, std::string>& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end() || it->second.empty()) throw Error(ErrorCode::bad_params, "missing parameter '" + key + "'");
    return it->second;
}

nlohmann::json stats_json(const std::vector<std::string>& names, const std::vector<FeatureStat>& stats) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < names.size() && i < stats.size(); ++i) {
        out.push_back({{"name", names[i]}, {"mean", stats[i].mean}, {"stddev", stats[i].stddev},
                       {"constant", stats[i].constant}});
    }
    return out;
}

template <typename F>
Service::Response guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        return error_response(e);
    } catch (const nlohmann::json::exception& e) {
        return error_response(Error(ErrorCode::bad_params, e.what()));
    } catch (const std::exception& e) {
        return {500, {{"error", {{"code", "internal"}, {"message", e.what()}}}}};
    }
}

} // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)), server_(std::make_unique<Server>()) {
    if (!options_.db_dir.empty()) dbs_ = load_database_dir(options_.db_dir);
    setup_routes();
}

Service::~Service() { stop(); }

void Service::add_database(const std::string& id, std::shared_ptr<const TransitionDatabase> db) {
    dbs_[id] = std::move(db);
}

std::vector<std::string> Service::database_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, db] : dbs_) out.push_back(id);
    return out;
}

std::shared_ptr<const TransitionDatabase> Service::database(const std::string& id) const {
    if (id.empty() && dbs_.size() == 1) return dbs_.begin()->second;
    auto it = dbs_.find(id);
    if (it == dbs_.end()) throw Error(ErrorCode::unknown_db, "unknown database '" + id + "'");
    return it->second;
}

std::shared_ptr<const Service::CachedSet> Service::cached(const std::string& set_id) const {
    std::shared_lock lock(cache_mutex_);
    auto it = cache_.find(set_id);
    if (it == cache_.end()) throw Error(ErrorCode::unknown_set, "unknown trajectory set '" + set_id + "'");
    return it->second;
}

std::size_t Service::cached_sets() const {
    std::shared_lock lock(cache_mutex_);
    return cache_.size();
}

Service::Response Service::list_databases(std::optional<std::size_t> dispersion_k) const {
    return guarded([&]() -> Response {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& [id, db] : dbs_) {
            nlohmann::json entry{{"db_id", id},
                                 {"mdp", {{"name", db->mdp_name()}, {"params", db->mdp_params()}}},
                                 {"mode", to_string(db->mode())},
                                 {"size", db->size()},
                                 {"horizon", db->horizon()},
                                 {"seed_trajectories", db->provenance().size()},
                                 {"feature_names", db->markov_names()},
                                 {"exogenous_names", db->exo_names()},
                                 {"action_names", db->action_names()},
                                 {"feature_stats", stats_json(db->markov_names(), db->feature_stats())},
                                 {"exogenous_stats", stats_json(db->exo_names(), db->exo_stats())}};
            if (dispersion_k) {
                entry["k_dispersion"] = {{"k", *dispersion_k},
                                         {"alpha", k_dispersion(*db, *dispersion_k, markov_metric(*db))}};
            }
            list.push_back(std::move(entry));
        }
        return {200, {{"api_version", kApiVersion}, {"databases", list}}};
    });
}

Service::Response Service::post_trajectories(const nlohmann::json& request) {
    return guarded([&]() -> Response {
        auto q = parse_policy_query(request);
        std::shared_ptr<const TransitionDatabase> db;
        if (q.algorithm != QueryAlgorithm::ground_truth || q.mdp_name.empty()) {
            db = database(q.db_id);
            if (q.db_id.empty()) q.db_id = database_ids().front();
        }
        const auto key = request_hash(to_json(q).dump());

        std::shared_ptr<const CachedSet> entry;
        bool from_cache = false;
        {
            std::shared_lock lock(cache_mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) {
                entry = it->second;
                from_cache = true;
            }
        }
        if (!entry) {
            // Stitching runs outside the lock; a racing identical request
            // computes the same set, and the first insert wins.
            auto fresh = std::make_shared<CachedSet>();
            fresh->query = q;
            fresh->set = run_query(q, db);
            fresh->value = value_estimate(fresh->set);
            std::unique_lock lock(cache_mutex_);
            entry = cache_.emplace(key, std::move(fresh)).first->second;
        }

        const auto h = entry->set.trajectories.front().length();
        nlohmann::json body{{"set_id", key},
                            {"value_estimate", entry->value},
                            {"n", entry->set.size()},
                            {"h", h},
                            {"algorithm", to_string(q.algorithm)},
                            {"cached", from_cache}};
        const bool inlined = entry->set.size() * h <= options_.inline_limit;
        body["inlined"] = inlined;
        if (inlined) body["trajectories"] = to_json(entry->set);
        return {200, body};
    });
}

Service::Response Service::get_trajectories(const std::string& set_id) const {
    return guarded([&]() -> Response {
        const auto entry = cached(set_id);
        auto body = to_json(entry->set);
        body["set_id"] = set_id;
        body["value_estimate"] = entry->value;
        body["query"] = to_json(entry->query);
        return {200, body};
    });
}

Service::Response Service::get_fanchart(const std::string& set_id, const std::string& variable,
                                        const std::optional<std::string>& levels) const {
    return guarded([&]() -> Response {
        if (set_id.empty()) throw Error(ErrorCode::bad_params, "missing parameter 'set_id'");
        if (variable.empty()) throw Error(ErrorCode::bad_params, "missing parameter 'variable'");
        const auto entry = cached(set_id);
        const auto lv = levels ? parse_list("levels", *levels) : entry->query.quantile_levels;
        auto body = to_json(fan_chart(entry->set, variable, lv));
        body["set_id"] = set_id;
        return {200, body};
    });
}

Service::Response Service::post_fidelity(const nlohmann::json& request) const {
    return guarded([&]() -> Response {
        const auto truth = cached(request.at("truth_set_id").get<std::string>());
        const auto sur = cached(request.at("surrogate_set_id").get<std::string>());
        auto variables = request.value("variables", std::vector<std::string>{});
        if (variables.empty()) variables = variable_names(truth->set);
        const auto levels = request.value("quantile_levels", decile_levels());
        auto body = to_json(visual_fidelity_error(truth->set, sur->set, variables, levels));
        body["truth_set_id"] = request.at("truth_set_id");
        body["surrogate_set_id"] = request.at("surrogate_set_id");
        return {200, body};
    });
}

Service::Response Service::get_bounds(const std::map<std::string, std::string>& params) const {
    return guarded([&]() -> Response {
        const auto db = database(params.count("db_id") ? params.at("db_id") : std::string{});
        const int h = static_cast<int>(parse_count("h", required(params, "h")));
        const auto n = parse_count("n", required(params, "n"));
        if (h < 1 || n < 1) throw Error(ErrorCode::bad_params, "h and n must be >= 1");
        const auto mode = params.count("mode") ? params.at("mode") : std::string("factored");
        if (mode != "factored" && mode != "full") throw Error(ErrorCode::bad_params, "mode must be factored or full");
        const bool factored = mode == "factored";

        const auto& spec = required(params, "constants");
        LipschitzConstants L;
        if (spec == "mdp") {
            const auto known = make_mdp(db->mdp_name(), db->mdp_params())->lipschitz();
            if (!known) throw Error(ErrorCode::bad_params, db->mdp_name() + " has no known Lipschitz constants");
            L = *known;
        } else {
            const auto c = parse_list("constants", spec);
            if (factored) {
                if (c.size() != 2) throw Error(ErrorCode::bad_params, "factored constants are L_Ri,L_fi");
                L.L_Ri = c[0];
                L.L_fi = c[1];
            } else {
                if (c.size() != 3) throw Error(ErrorCode::bad_params, "full-state constants are L_R,L_f,L_pi");
                L.L_R = c[0];
                L.L_f = c[1];
                L.L_pi = c[2];
            }
        }
        const double sigma = params.count("sigma") ? parse_double("sigma", params.at("sigma")) : 0.0;

        double alpha = 0.0;
        std::size_t k = n * static_cast<std::size_t>(h);
        if (params.count("alpha")) {
            alpha = parse_double("alpha", params.at("alpha"));
        } else if (!factored) {
            throw Error(ErrorCode::bad_params, "full-state bounds need an explicit alpha");
        } else {
            if (params.count("k")) k = parse_count("k", params.at("k"));
            // Lipschitz constants are in raw units, so the default is unscaled.
            auto metric = markov_metric(*db);
            metric.standardize = params.count("standardize") && params.at("standardize") == "true";
            alpha = k_dispersion(*db, k, metric);
        }
        const auto report = factored ? factored_bound_report(L, h, n, alpha, sigma)
                                     : full_bound_report(L, h, n, alpha, sigma);
        auto body = to_json(report);
        body["k"] = k;
        return {200, body};
    });
}

namespace {

void reply(httplib::Response& res, const Service::Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

std::map<std::string, std::string> query_params(const httplib::Request& req) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : req.params) out[k] = v;
    return out;
}

nlohmann::json parse_body(const httplib::Request& req) {
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::bad_params, std::string("request body is not JSON: ") + e.what());
    }
}

} // namespace

void Service::setup_routes() {
    auto& http = server_->http;
    http.Get("/api/databases", [this](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::size_t> k;
        if (req.has_param("dispersion_k")) {
            const auto r = guarded([&]() -> Response {
                k = parse_count("dispersion_k", req.get_param_value("dispersion_k"));
                return {};
            });
            if (r.status != 200) return reply(res, r);
        }
        reply(res, list_databases(k));
    });
    http.Post("/api/trajectories", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, guarded([&] { return post_trajectories(parse_body(req)); }));
    });
    http.Get("/api/trajectories", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, get_trajectories(req.get_param_value("set_id")));
    });
    http.Get("/api/fanchart", [this](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> levels;
        if (req.has_param("levels")) levels = req.get_param_value("levels");
        reply(res, get_fanchart(req.get_param_value("set_id"), req.get_param_value("variable"), levels));
    });
    http.Post("/api/fidelity", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, guarded([&] { return post_fidelity(parse_body(req)); }));
    });
    http.Get("/api/bounds", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, get_bounds(query_params(req)));
    });
    if (!options_.ui_dir.empty() && std::filesystem::is_directory(options_.ui_dir)) {
        http.set_mount_point("/", options_.ui_dir.string());
    }
}

int Service::start(const std::string& host, int port) {
    auto& http = server_->http;
    const int bound = port == 0 ? http.bind_to_any_port(host) : (http.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->http.listen_after_bind(); });
    http.wait_until_ready();
    return bound;
}

void Service::listen(const std::string& host, int port) {
    if (!server_->http.listen(host, port)) throw Error(ErrorCode::io, "cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
    if (server_) server_->http.stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace exostitch
