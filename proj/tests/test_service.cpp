#include "exostitch/benchmarks.hpp"
#include "exostitch/service.hpp"
#include "oracle.hpp"

#include <doctest.h>
#include <httplib.h>

using namespace exostitch;
using json = nlohmann::json;

namespace {

std::shared_ptr<const TransitionDatabase> small_ember(DbMode mode) {
    Rng rng(17);
    return std::make_shared<const TransitionDatabase>(seed_policy_grid(
        EmberMdp{}, PolicyClass::intensity, grid_of_size({0, 100}, {0, 180}, 50), 10, rng, mode));
}

std::unique_ptr<Service> make_service() {
    auto s = std::make_unique<Service>(ServiceOptions{});
    s->add_database("deb", small_ember(DbMode::debiased));
    s->add_database("bia", small_ember(DbMode::biased));
    return s;
}

json query(const std::string& algorithm, const std::string& db = "deb") {
    return {{"policy_class", "fuel"}, {"params", {0.3}}, {"algorithm", algorithm}, {"n", 10},
            {"h", 10},                {"db_id", db},     {"seed", 5}};
}

} // namespace

TEST_SUITE("service") {

TEST_CASE("databases") {
    auto svc = make_service();
    auto& s = *svc;
    const auto r = s.list_databases(std::nullopt);
    CHECK(r.status == 200);
    CHECK(r.body["api_version"] == kApiVersion);
    REQUIRE(r.body["databases"].size() == 2);
    const auto& d = r.body["databases"][1];
    CHECK(d["db_id"] == "deb");
    CHECK(d["size"] == 500);
    CHECK(d["seed_trajectories"] == 50);
    CHECK_FALSE(d.contains("k_dispersion"));
    const auto k = s.list_databases(3);
    CHECK(k.body["databases"][0]["k_dispersion"]["alpha"].get<double>() > 0.0);
    CHECK(s.list_databases(1000).status == 400);
}

TEST_CASE("trajectories, caching and fan charts") {
    auto svc = make_service();
    auto& s = *svc;
    const auto a = s.post_trajectories(query("mfmci"));
    REQUIRE(a.status == 200);
    CHECK(a.body["cached"] == false);
    CHECK(a.body["inlined"] == true);
    CHECK(a.body["trajectories"]["trajectories"].size() == 10);
    const auto b = s.post_trajectories(query("mfmci"));
    CHECK(b.body["cached"] == true);
    CHECK(b.body["set_id"] == a.body["set_id"]);
    CHECK(b.body["value_estimate"] == a.body["value_estimate"]);
    CHECK(s.cached_sets() == 1);

    const auto id = a.body["set_id"].get<std::string>();
    const auto g = s.get_trajectories(id);
    CHECK(g.status == 200);
    CHECK(g.body["query"]["algorithm"] == "mfmci");

    const auto fc = s.get_fanchart(id, "fuel", std::nullopt);
    REQUIRE(fc.status == 200);
    CHECK(fc.body["time_steps"].size() == 10);
    CHECK(fc.body["values"].size() == 10);
    CHECK(fc.body["values"][0].size() == 11);
    CHECK(s.get_fanchart(id, "fuel", std::string("0.25,0.5,0.75")).body["values"][0].size() == 3);
    CHECK(s.get_fanchart(id, "nope", std::nullopt).status == 400);
    CHECK(s.get_fanchart("ts-missing", "fuel", std::nullopt).status == 404);

    // Fidelity of a set against itself is zero.
    const auto f = s.post_fidelity({{"truth_set_id", id}, {"surrogate_set_id", id}});
    CHECK(f.status == 200);
    CHECK(f.body["weighted_total"] == 0.0);

    const auto truth = s.post_trajectories(query("ground_truth"));
    REQUIRE(truth.status == 200);
    const auto f2 = s.post_fidelity({{"truth_set_id", truth.body["set_id"]}, {"surrogate_set_id", id}});
    CHECK(f2.body["weighted_total"].get<double>() > 0.0);

    auto all = query("random_baseline");
    all["n"] = 50;
    const auto big = s.post_trajectories(all);
    REQUIRE(big.status == 200);
    CHECK(big.body["inlined"] == true);
}

TEST_CASE("errors") {
    auto svc = make_service();
    auto& s = *svc;
    auto bad = query("mfmci");
    bad["policy_class"] = "nope";
    const auto r = s.post_trajectories(bad);
    CHECK(r.status == 400);
    CHECK(r.body["error"]["code"] == "bad_policy");
    bad = query("mfmci");
    bad["params"] = {1, 2};
    CHECK(s.post_trajectories(bad).body["error"]["code"] == "bad_params");
    CHECK(s.post_trajectories(query("mfmci", "zzz")).status == 404);
    CHECK(s.post_trajectories(query("mfmci_biased", "deb")).status == 400);
    auto many = query("mfmci");
    many["n"] = 51;
    const auto ex = s.post_trajectories(many);
    CHECK(ex.status == 409);
    CHECK(ex.body["error"]["code"] == "exhaustion");
    CHECK(ex.body["error"]["trajectories_completed"] == 50);
    CHECK(s.get_trajectories("ts-0").status == 404);
    CHECK(http_status(ErrorCode::io) == 500);
}

TEST_CASE("bounds") {
    auto svc = make_service();
    auto& s = *svc;
    auto r = s.get_bounds({{"db_id", "deb"}, {"h", "3"}, {"n", "2"}, {"constants", "1,1"}, {"alpha", "0.5"}});
    REQUIRE(r.status == 200);
    CHECK(r.body["C"] == 6.0);
    CHECK(r.body["bias_bound"] == 3.0);
    r = s.get_bounds({{"db_id", "deb"}, {"h", "3"}, {"n", "2"}, {"constants", "1,1,1"}, {"mode", "full"},
                      {"alpha", "1"}});
    CHECK(r.body["C"] == 11.0);
    CHECK(s.get_bounds({{"db_id", "deb"}, {"h", "3"}, {"n", "2"}, {"constants", "1,1,1"}, {"mode", "full"}}).status ==
          400);
    r = s.get_bounds({{"db_id", "deb"}, {"h", "3"}, {"n", "2"}, {"constants", "1,1"}});
    CHECK(r.status == 200);
    CHECK(r.body["k"] == 6);
    CHECK(r.body["alpha"].get<double>() > 0.0);
    CHECK(s.get_bounds({{"db_id", "deb"}, {"h", "3"}, {"n", "2"}, {"constants", "mdp"}}).status == 400);
    CHECK(s.get_bounds({{"db_id", "deb"}, {"n", "2"}, {"constants", "1,1"}}).status == 400);
}

TEST_CASE("HTTP") {
    oracle::TempDir dbs("svc");
    save(*small_ember(DbMode::debiased), dbs.path / "ember");
    oracle::TempDir ui("ui");
    {
        std::ofstream(ui.path / "index.html") << "<html>ok</html>";
    }
    Service s(ServiceOptions{dbs.path, ui.path});
    CHECK(s.database_ids() == std::vector<std::string>{"ember"});
    const int port = s.start("127.0.0.1", 0);
    REQUIRE(port > 0);
    httplib::Client c("127.0.0.1", port);

    auto r = c.Get("/api/databases");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(json::parse(r->body)["databases"][0]["db_id"] == "ember");

    auto body = query("mfmci", "ember").dump();
    auto p1 = c.Post("/api/trajectories", body, "application/json");
    auto p2 = c.Post("/api/trajectories", body, "application/json");
    REQUIRE(p1);
    REQUIRE(p2);
    CHECK(p1->status == 200);
    const auto j1 = json::parse(p1->body);
    const auto j2 = json::parse(p2->body);
    CHECK(j1["set_id"] == j2["set_id"]);
    CHECK(j1["trajectories"] == j2["trajectories"]);

    const auto id = j1["set_id"].get<std::string>();
    r = c.Get("/api/fanchart?set_id=" + id + "&variable=canopy");
    REQUIRE(r);
    CHECK(json::parse(r->body)["time_steps"].size() == 10);
    r = c.Get("/api/trajectories?set_id=" + id);
    CHECK(r->status == 200);
    r = c.Post("/api/fidelity", json{{"truth_set_id", id}, {"surrogate_set_id", id}}.dump(), "application/json");
    CHECK(r->status == 200);
    r = c.Get("/api/bounds?db_id=ember&h=3&n=2&constants=1,1&alpha=0.5");
    CHECK(json::parse(r->body)["C"] == 6.0);

    auto bad = query("mfmci", "ember");
    bad["policy_class"] = "nope";
    r = c.Post("/api/trajectories", bad.dump(), "application/json");
    CHECK(r->status == 400);
    CHECK(json::parse(r->body)["error"]["code"] == "bad_policy");
    r = c.Post("/api/trajectories", "{not json", "application/json");
    CHECK(r->status == 400);
    r = c.Get("/index.html");
    REQUIRE(r);
    CHECK(r->body == "<html>ok</html>");
    s.stop();
}

}
