#include "exostitch/estimators.hpp"

#include "exostitch/nearest_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace exostitch {

double value_estimate(const TrajectorySet& ts) {
    if (ts.empty()) throw Error(ErrorCode::contract_violation, "value estimate of an empty trajectory set");
    double sum = 0.0;
    for (const auto& t : ts.trajectories) sum += t.cumulative_reward();
    return sum / static_cast<double>(ts.size());
}

double return_stddev(const TrajectorySet& ts) {
    if (ts.size() < 2) return 0.0;
    const double mean = value_estimate(ts);
    double ss = 0.0;
    for (const auto& t : ts.trajectories) {
        const double d = t.cumulative_reward() - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(ts.size() - 1));
}

std::vector<double> decile_levels() {
    std::vector<double> out;
    for (int i = 0; i <= 10; ++i) out.push_back(i / 10.0);
    return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error(ErrorCode::contract_violation, "quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::contract_violation, "quantile level outside [0, 1]");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<std::string> variable_names(const TrajectorySet& ts) {
    std::vector<std::string> out = ts.markov_names;
    out.insert(out.end(), ts.exo_names.begin(), ts.exo_names.end());
    out.insert(out.end(), {"action", "reward", "cumulative_reward"});
    return out;
}

std::vector<std::vector<double>> extract_variable(const TrajectorySet& ts, const std::string& variable) {
    enum class Kind { markov, exo, action, reward, cumulative } kind;
    std::size_t col = 0;
    if (auto it = std::find(ts.markov_names.begin(), ts.markov_names.end(), variable); it != ts.markov_names.end()) {
        kind = Kind::markov;
        col = static_cast<std::size_t>(it - ts.markov_names.begin());
    } else if (auto jt = std::find(ts.exo_names.begin(), ts.exo_names.end(), variable); jt != ts.exo_names.end()) {
        kind = Kind::exo;
        col = static_cast<std::size_t>(jt - ts.exo_names.begin());
    } else if (variable == "action") {
        kind = Kind::action;
    } else if (variable == "reward") {
        kind = Kind::reward;
    } else if (variable == "cumulative_reward") {
        kind = Kind::cumulative;
    } else {
        throw Error(ErrorCode::bad_params, "unknown variable '" + variable + "'");
    }

    std::vector<std::vector<double>> out;
    out.reserve(ts.size());
    for (const auto& traj : ts.trajectories) {
        std::vector<double> series;
        series.reserve(traj.length());
        double running = 0.0;
        for (const auto& s : traj.steps) {
            switch (kind) {
            case Kind::markov: series.push_back(s.x.features.at(col)); break;
            case Kind::exo: series.push_back(s.w.at(col)); break;
            case Kind::action: series.push_back(static_cast<double>(s.a.index)); break;
            case Kind::reward: series.push_back(s.r); break;
            case Kind::cumulative:
                running += s.r;
                series.push_back(running);
                break;
            }
        }
        out.push_back(std::move(series));
    }
    return out;
}

QuantileSeries fan_chart(const TrajectorySet& ts, const std::string& variable, const std::vector<double>& levels) {
    if (ts.empty()) throw Error(ErrorCode::contract_violation, "fan chart of an empty trajectory set");
    if (levels.empty() || !std::is_sorted(levels.begin(), levels.end())) {
        throw Error(ErrorCode::bad_params, "quantile levels must be a non-empty ascending list");
    }
    const auto series = extract_variable(ts, variable);
    const auto h = series.front().size();
    for (const auto& s : series) {
        if (s.size() != h) throw Error(ErrorCode::contract_violation, "fan chart needs trajectories of equal length");
    }
    QuantileSeries q;
    q.variable = variable;
    q.levels = levels;
    std::vector<double> column(series.size());
    for (std::size_t t = 0; t < h; ++t) {
        for (std::size_t i = 0; i < series.size(); ++i) column[i] = series[i][t];
        std::sort(column.begin(), column.end());
        std::vector<double> row;
        row.reserve(levels.size());
        for (double p : levels) row.push_back(quantile_sorted(column, p));
        q.time_steps.push_back(static_cast<int>(t));
        q.values.push_back(std::move(row));
    }
    return q;
}

namespace {

std::vector<double> medians(const TrajectorySet& ts, const std::string& variable) {
    const auto q = fan_chart(ts, variable, {0.5});
    std::vector<double> out;
    out.reserve(q.values.size());
    for (const auto& row : q.values) out.push_back(row[0]);
    return out;
}

double chart_height(const QuantileSeries& q) {
    double h = 0.0;
    for (const auto& row : q.values) h = std::max(h, row.back() - row.front());
    return h;
}

} // namespace

FidelityReport visual_fidelity_error(const TrajectorySet& truth, const TrajectorySet& surrogate,
                                     const std::vector<std::string>& variables, const std::vector<double>& levels) {
    if (truth.empty() || surrogate.empty()) {
        throw Error(ErrorCode::contract_violation, "fidelity error needs two non-empty trajectory sets");
    }
    if (truth.trajectories.front().length() != surrogate.trajectories.front().length()) {
        throw Error(ErrorCode::contract_violation, "fidelity error needs equal horizons");
    }
    FidelityReport report;
    for (const auto& v : variables) {
        const double height = chart_height(fan_chart(truth, v, levels));
        if (!(height > 0.0)) {
            report.excluded.push_back(v);
            continue;
        }
        const auto mt = medians(truth, v);
        const auto ms = medians(surrogate, v);
        std::vector<double> err(mt.size());
        for (std::size_t t = 0; t < mt.size(); ++t) {
            err[t] = std::abs(mt[t] - ms[t]);
            report.weighted_total += err[t] / height;
        }
        report.variables.push_back(v);
        report.errors.push_back(std::move(err));
        report.heights.push_back(height);
    }
    return report;
}

double bootstrap_floor(const TrajectorySet& truth, const std::vector<std::string>& variables, std::size_t reps,
                       Rng& rng, const std::vector<double>& levels) {
    if (reps == 0) throw Error(ErrorCode::bad_params, "bootstrap needs at least one replicate");
    if (truth.empty()) throw Error(ErrorCode::contract_violation, "bootstrap of an empty trajectory set");
    double sum = 0.0;
    TrajectorySet resample{truth.markov_names, truth.exo_names, {}};
    for (std::size_t r = 0; r < reps; ++r) {
        resample.trajectories.clear();
        for (std::size_t i = 0; i < truth.size(); ++i) {
            resample.trajectories.push_back(truth.trajectories[uniform_index(rng, truth.size())]);
        }
        sum += visual_fidelity_error(truth, resample, variables, levels).weighted_total;
    }
    return sum / static_cast<double>(reps);
}

TrajectorySet random_baseline(const TransitionDatabase& db, std::size_t n, Rng& rng) {
    const auto& seeds = db.provenance();
    if (n > seeds.size()) {
        throw ExhaustionError("random baseline needs " + std::to_string(n) + " seed trajectories, database has " +
                                  std::to_string(seeds.size()),
                              0, 0);
    }
    // Partial Fisher-Yates.
    std::vector<std::size_t> idx(seeds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);

    TrajectorySet out{db.markov_names(), db.exo_names(), {}};
    for (std::size_t i = 0; i < n; ++i) {
        const auto& seed = seeds[idx[i]];
        Trajectory traj;
        for (std::size_t k = 0; k < seed.length; ++k) {
            const auto rec = seed.first + k;
            const auto a = db.realized_action(rec);
            const double r = db.mode() == DbMode::debiased ? db.sets()[rec].branch(a).reward : db.tuples()[rec].r;
            traj.steps.push_back(Step{db.state(rec), db.exogenous(rec), a, r});
        }
        out.trajectories.push_back(std::move(traj));
    }
    return out;
}

double k_dispersion(const TransitionDatabase& db, std::size_t k, const DistanceMetric& metric,
                    const std::optional<std::vector<MarkovState>>& probes) {
    if (db.empty()) throw Error(ErrorCode::empty_database, "k-dispersion of an empty database");
    if (k == 0) throw Error(ErrorCode::bad_params, "k-dispersion needs k >= 1");
    std::vector<IndexPoint> points;
    points.reserve(db.size());
    for (std::size_t i = 0; i < db.size(); ++i) {
        const auto& x = db.state(i);
        points.push_back({i, x.time_step, 0, embed_markov(metric, x.features)});
    }
    const NearestIndex index(points, IndexBackend::linear);

    auto kth = [&](const std::vector<double>& coords, int t, std::optional<std::size_t> self) {
        const auto hits = index.k_nearest(coords, t, k, [&](std::size_t id) { return !self || id != *self; });
        if (hits.size() < k) {
            throw Error(ErrorCode::bad_params, "k = " + std::to_string(k) + " exceeds the " +
                                                   std::to_string(hits.size()) + " candidates at time step " +
                                                   std::to_string(t));
        }
        return hits.back().squared_distance;
    };

    double worst = 0.0;
    if (probes) {
        for (const auto& p : *probes) worst = std::max(worst, kth(embed_markov(metric, p.features), p.time_step, {}));
    } else {
        for (const auto& p : points) worst = std::max(worst, kth(p.coords, p.time_step, p.id));
    }
    return std::sqrt(worst);
}

namespace {

// sum_{i=0}^{h-1} sum_{j=0}^{h-i-1} q^j == sum_{j=0}^{h-1} (h - j) q^j, by Horner.
double nested_geometric(double q, int h) {
    if (h < 1) throw Error(ErrorCode::bad_params, "horizon must be >= 1");
    double acc = 0.0;
    for (int j = h - 1; j >= 0; --j) acc = acc * q + static_cast<double>(h - j);
    return acc;
}

void require_nonnegative(std::initializer_list<double> xs) {
    for (double x : xs) {
        if (!(x >= 0.0)) throw Error(ErrorCode::bad_params, "bound inputs must be nonnegative");
    }
}

} // namespace

double mfmc_constant_C(double L_R, double L_f, double L_pi, int h) {
    require_nonnegative({L_R, L_f, L_pi});
    return L_R * nested_geometric(L_f * (1.0 + L_pi), h);
}

double mfmci_constant_Ci(double L_Ri, double L_fi, int h) {
    require_nonnegative({L_Ri, L_fi});
    return L_Ri * nested_geometric(L_fi, h);
}

double bias_bound(double C, double alpha) {
    require_nonnegative({C, alpha});
    return C * alpha;
}

double variance_bound(double sigma_h, std::size_t n, double C, double alpha) {
    require_nonnegative({sigma_h, C, alpha});
    if (n == 0) throw Error(ErrorCode::bad_params, "variance bound needs n >= 1");
    const double s = sigma_h / std::sqrt(static_cast<double>(n)) + 2.0 * C * alpha;
    return s * s;
}

BoundReport factored_bound_report(const LipschitzConstants& L, int h, std::size_t n, double alpha, double sigma_h) {
    BoundReport r;
    r.factored = true;
    r.L_Ri = L.L_Ri;
    r.L_fi = L.L_fi;
    r.h = h;
    r.n = n;
    r.alpha = alpha;
    r.sigma_h = sigma_h;
    r.C = mfmci_constant_Ci(L.L_Ri, L.L_fi, h);
    r.bias = bias_bound(r.C, alpha);
    r.variance = variance_bound(sigma_h, n, r.C, alpha);
    return r;
}

BoundReport full_bound_report(const LipschitzConstants& L, int h, std::size_t n, double alpha, double sigma_h) {
    BoundReport r;
    r.factored = false;
    r.L_R = L.L_R;
    r.L_f = L.L_f;
    r.L_pi = L.L_pi;
    r.h = h;
    r.n = n;
    r.alpha = alpha;
    r.sigma_h = sigma_h;
    r.C = mfmc_constant_C(L.L_R, L.L_f, L.L_pi, h);
    r.bias = bias_bound(r.C, alpha);
    r.variance = variance_bound(sigma_h, n, r.C, alpha);
    return r;
}

nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json j{{"factored", r.factored}, {"h", r.h},         {"n", r.n},
                     {"alpha", r.alpha},       {"C", r.C},         {"bias_bound", r.bias},
                     {"variance_bound", r.variance}, {"sigma_h", r.sigma_h}};
    if (r.factored) {
        j["L_Ri"] = r.L_Ri;
        j["L_fi"] = r.L_fi;
    } else {
        j["L_R"] = r.L_R;
        j["L_f"] = r.L_f;
        j["L_pi"] = r.L_pi;
    }
    return j;
}

nlohmann::json to_json(const QuantileSeries& q) {
    return {{"variable", q.variable}, {"time_steps", q.time_steps}, {"levels", q.levels}, {"values", q.values}};
}

nlohmann::json to_json(const FidelityReport& f) {
    nlohmann::json vars = nlohmann::json::array();
    for (std::size_t i = 0; i < f.variables.size(); ++i) {
        vars.push_back({{"variable", f.variables[i]}, {"height", f.heights[i]}, {"errors", f.errors[i]}});
    }
    return {{"variables", vars}, {"excluded", f.excluded}, {"weighted_total", f.weighted_total}};
}

} // namespace exostitch
