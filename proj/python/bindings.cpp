// Python module _exostitch. JSON-shaped arguments and results cross the
// boundary as strings; the exostitch package wraps them as dicts.

#include "exostitch/benchmarks.hpp"
#include "exostitch/config.hpp"
#include "exostitch/learning_curve.hpp"
#include "exostitch/query.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace exostitch;
using json = nlohmann::json;

namespace {

using DbPtr = std::shared_ptr<const TransitionDatabase>;

// Holds a database by pointer so Python can share it with queries.
struct PyDatabase {
    DbPtr db;
};

} // namespace

PYBIND11_MODULE(_exostitch, m) {
    m.doc() = "Trajectory synthesis from a transition database";

    static py::exception<Error> error(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            // args = (code, message)
            PyErr_SetObject(error.ptr(), py::make_tuple(std::string(to_string(e.code())), e.what()).ptr());
        }
    });

    py::class_<PyDatabase>(m, "Database")
        .def_static("load", [](const std::filesystem::path& dir) { return PyDatabase{std::make_shared<const TransitionDatabase>(load(dir))}; })
        .def("save", [](const PyDatabase& d, const std::filesystem::path& dir) { save(*d.db, dir); })
        .def("__len__", [](const PyDatabase& d) { return d.db->size(); })
        .def_property_readonly("mode", [](const PyDatabase& d) { return std::string(to_string(d.db->mode())); })
        .def_property_readonly("horizon", [](const PyDatabase& d) { return d.db->horizon(); })
        .def_property_readonly("mdp_name", [](const PyDatabase& d) { return d.db->mdp_name(); })
        .def_property_readonly("markov_names", [](const PyDatabase& d) { return d.db->markov_names(); })
        .def_property_readonly("exogenous_names", [](const PyDatabase& d) { return d.db->exo_names(); })
        .def_property_readonly("action_names", [](const PyDatabase& d) { return d.db->action_names(); })
        .def_property_readonly("seed_trajectories", [](const PyDatabase& d) { return d.db->provenance().size(); })
        .def("_manifest", [](const PyDatabase& d) { return make_manifest(*d.db, serialize_transitions(*d.db)).dump(); })
        .def("__eq__", [](const PyDatabase& a, const PyDatabase& b) { return *a.db == *b.db; });

    py::class_<TrajectorySet>(m, "TrajectorySet")
        .def("__len__", &TrajectorySet::size)
        .def_property_readonly("markov_names", [](const TrajectorySet& ts) { return ts.markov_names; })
        .def_property_readonly("exogenous_names", [](const TrajectorySet& ts) { return ts.exo_names; })
        .def_property_readonly("variables", [](const TrajectorySet& ts) { return variable_names(ts); })
        .def("value_estimate", [](const TrajectorySet& ts) { return value_estimate(ts); })
        .def("returns", [](const TrajectorySet& ts) {
            std::vector<double> out;
            for (const auto& tr : ts.trajectories) out.push_back(tr.cumulative_reward());
            return out;
        })
        .def("series", &extract_variable, py::arg("variable"))
        .def("csv", &trajectories_csv)
        .def("_json", [](const TrajectorySet& ts) { return to_json(ts).dump(); })
        .def("_fan_chart", [](const TrajectorySet& ts, const std::string& variable, const std::vector<double>& levels) {
            return to_json(fan_chart(ts, variable, levels)).dump();
        })
        .def("__eq__", [](const TrajectorySet& a, const TrajectorySet& b) { return a == b; });

    m.def("_build_database", [](const std::string& config, std::optional<std::string> mode, std::optional<std::uint64_t> seed) {
        auto cfg = parse_build_config(json::parse(config));
        if (mode) cfg.mode = parse_db_mode(*mode);
        if (seed) cfg.seed = *seed;
        py::gil_scoped_release nogil;
        return PyDatabase{std::make_shared<const TransitionDatabase>(build_database(cfg))};
    }, py::arg("config"), py::arg("mode") = py::none(), py::arg("seed") = py::none());

    m.def("_simulate", [](const std::string& query, const PyDatabase* db) {
        const auto q = parse_policy_query(json::parse(query));
        DbPtr ptr = db ? db->db : nullptr;
        py::gil_scoped_release nogil;
        return run_query(q, ptr);
    }, py::arg("query"), py::arg("db") = nullptr);

    m.def("_fidelity", [](const TrajectorySet& truth, const TrajectorySet& surrogate, const std::vector<std::string>& variables,
                          const std::vector<double>& levels) {
        return to_json(visual_fidelity_error(truth, surrogate, variables, levels)).dump();
    });

    m.def("bootstrap_floor", [](const TrajectorySet& truth, const std::vector<std::string>& variables, std::size_t reps,
                                std::uint64_t seed) {
        Rng rng(seed);
        return bootstrap_floor(truth, variables, reps, rng);
    }, py::arg("truth"), py::arg("variables"), py::arg("reps") = 100, py::arg("seed") = 0);

    m.def("k_dispersion", [](const PyDatabase& d, std::size_t k, bool standardize) {
        auto metric = markov_metric(*d.db);
        metric.standardize = standardize;
        return k_dispersion(*d.db, k, metric);
    }, py::arg("db"), py::arg("k"), py::arg("standardize") = true);

    m.def("mfmc_constant_C", &mfmc_constant_C, py::arg("L_R"), py::arg("L_f"), py::arg("L_pi"), py::arg("h"));
    m.def("mfmci_constant_Ci", &mfmci_constant_Ci, py::arg("L_Ri"), py::arg("L_fi"), py::arg("h"));
    m.def("bias_bound", &bias_bound, py::arg("C"), py::arg("alpha"));
    m.def("variance_bound", &variance_bound, py::arg("sigma_h"), py::arg("n"), py::arg("C"), py::arg("alpha"));
    m.def("decile_levels", &decile_levels);

    m.def("_learning_curve", [](const std::string& config, std::optional<std::size_t> threads) {
        auto cfg = parse_learning_curve_config(json::parse(config));
        if (threads) cfg.threads = *threads;
        std::vector<LearningCurveRow> rows;
        {
            py::gil_scoped_release nogil;
            rows = run_learning_curve(cfg);
        }
        return py::make_tuple(learning_curve_csv(rows), learning_curve_summary(cfg, rows).dump());
    }, py::arg("config"), py::arg("threads") = py::none());
}
