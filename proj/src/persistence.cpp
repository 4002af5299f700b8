#include "exostitch/transition_db.hpp"

#include <boost/crc.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace exostitch {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kTransitions = "transitions.csv";

void put_double(std::string& out, double v) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

std::string crc_hex(const std::string& bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", crc.checksum());
    return buf;
}

void write_row(std::string& out, std::size_t id, const MarkovState& x, ActionId a, const std::vector<double>& w,
               double r, const std::vector<double>& x_next) {
    out += std::to_string(id);
    out += ',';
    out += std::to_string(x.time_step);
    out += ',';
    out += std::to_string(a.index);
    for (double v : x.features) {
        out += ',';
        put_double(out, v);
    }
    for (double v : w) {
        out += ',';
        put_double(out, v);
    }
    out += ',';
    put_double(out, r);
    for (double v : x_next) {
        out += ',';
        put_double(out, v);
    }
    out += '\n';
}

nlohmann::json stats_json(const std::vector<FeatureStat>& stats, const std::vector<std::string>& names) {
    auto arr = nlohmann::json::array();
    for (std::size_t i = 0; i < stats.size(); ++i) {
        arr.push_back({{"name", names.at(i)},
                       {"mean", stats[i].mean},
                       {"stddev", stats[i].stddev},
                       {"constant", stats[i].constant}});
    }
    return arr;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + p.string());
    out << bytes;
    if (!out) throw Error(ErrorCode::io, "short write to " + p.string());
}

struct Row {
    std::size_t id = 0;
    int time_step = 0;
    int action = 0;
    std::vector<double> x, w, x_next;
    double r = 0.0;
};

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
    throw Error(ErrorCode::malformed, std::string(kTransitions) + " line " + std::to_string(line) + ": " + why);
}

template <typename T>
T parse_int(std::string_view field, std::size_t line) {
    T v{};
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc{} || ptr != end) malformed(line, "bad integer '" + std::string(field) + "'");
    return v;
}

double parse_real(std::string_view field, std::size_t line) {
    // strtod round-trips %.17g exactly; from_chars for double is not in GCC 11's libstdc++ everywhere.
    std::string tmp(field);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) malformed(line, "bad number '" + tmp + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string> header_columns(const TransitionDatabase& db) {
    std::vector<std::string> cols{"set_id", "time_step", "action_id"};
    for (const auto& n : db.markov_names()) cols.push_back("x_" + n);
    for (const auto& n : db.exo_names()) cols.push_back("w_" + n);
    cols.push_back("r");
    for (const auto& n : db.markov_names()) cols.push_back("xnext_" + n);
    return cols;
}

std::string join(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

} // namespace

std::string serialize_transitions(const TransitionDatabase& db) {
    std::string out = join(header_columns(db), ',');
    out += '\n';
    if (db.mode() == DbMode::debiased) {
        for (const auto& set : db.sets()) {
            for (const auto& o : set.outcomes) write_row(out, set.set_id, set.x, o.action, set.w, o.reward, o.x_next);
        }
    } else {
        for (const auto& t : db.tuples()) write_row(out, t.tuple_id, t.x, t.a, t.w, t.r, t.x_next.features);
    }
    return out;
}

nlohmann::json make_manifest(const TransitionDatabase& db, const std::string& transitions_csv) {
    auto provenance = nlohmann::json::array();
    for (const auto& s : db.provenance()) {
        std::vector<int> realized;
        realized.reserve(s.realized.size());
        for (auto a : s.realized) realized.push_back(a.index);
        provenance.push_back({{"policy_class", to_string(s.policy.policy_class)},
                              {"params", s.policy.params},
                              {"first", s.first},
                              {"length", s.length},
                              {"realized_actions", realized}});
    }
    const std::size_t rows = db.mode() == DbMode::debiased ? db.size() * db.action_names().size() : db.size();
    auto stats = db.stats_stale() || db.empty() ? std::vector<FeatureStat>{} : db.feature_stats();
    auto exo = db.stats_stale() || db.empty() ? std::vector<FeatureStat>{} : db.exo_stats();
    if (db.stats_stale() && !db.empty()) {
        stats = compute_feature_stats(db);
        exo = compute_exogenous_stats(db);
    }
    return {{"format_version", kDatabaseFormatVersion},
            {"mdp", {{"name", db.mdp_name()}, {"params", db.mdp_params()}}},
            {"feature_names", db.markov_names()},
            {"exogenous_names", db.exo_names()},
            {"action_names", db.action_names()},
            {"horizon", db.horizon()},
            {"mode", to_string(db.mode())},
            {"feature_stats", stats_json(stats, db.markov_names())},
            {"exogenous_stats", stats_json(exo, db.exo_names())},
            {"provenance", provenance},
            {"record_count", db.size()},
            {"row_count", rows},
            {"checksum", "crc32:" + crc_hex(transitions_csv)}};
}

void save(const TransitionDatabase& db, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
    const auto csv = serialize_transitions(db);
    write_file(dir / kTransitions, csv);
    write_file(dir / kManifest, make_manifest(db, csv).dump(2) + "\n");
}

TransitionDatabase load(const fs::path& dir) {
    const auto manifest_text = read_file(dir / kManifest);
    const auto csv = read_file(dir / kTransitions);
    if (manifest_text.empty() || csv.empty()) {
        throw Error(ErrorCode::empty_database, "database at " + dir.string() + " is empty (zero-byte file)");
    }

    nlohmann::json m;
    try {
        m = nlohmann::json::parse(manifest_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed, std::string(kManifest) + ": " + e.what());
    }

    const int version = m.value("format_version", -1);
    if (version != kDatabaseFormatVersion) {
        throw Error(ErrorCode::version_mismatch, "database format version " + std::to_string(version) +
                                                     ", this build reads version " +
                                                     std::to_string(kDatabaseFormatVersion));
    }

    TransitionDatabase db;
    std::size_t record_count = 0, row_count = 0;
    std::string checksum;
    nlohmann::json provenance;
    try {
        db = TransitionDatabase(parse_db_mode(m.at("mode").get<std::string>()), m.at("mdp").at("name"),
                                m.at("mdp").at("params"), m.at("feature_names"), m.at("exogenous_names"),
                                m.at("action_names"), m.at("horizon").get<int>());
        record_count = m.at("record_count").get<std::size_t>();
        row_count = m.at("row_count").get<std::size_t>();
        checksum = m.at("checksum").get<std::string>();
        provenance = m.at("provenance");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed, std::string(kManifest) + ": " + e.what());
    }

    const auto mdim = db.markov_names().size();
    const auto edim = db.exo_names().size();
    const auto ncols = 3 + mdim + edim + 1 + mdim;

    // Parse rows.
    std::vector<Row> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < csv.size()) {
        auto end = csv.find('\n', pos);
        if (end == std::string::npos) end = csv.size();
        std::string_view line(csv.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!header_seen) {
            if (line != join(header_columns(db), ',')) malformed(line_no, "header does not match the manifest");
            header_seen = true;
            continue;
        }
        if (line.empty()) malformed(line_no, "empty row");
        const auto fields = split(line, ',');
        if (fields.size() != ncols) {
            malformed(line_no, "expected " + std::to_string(ncols) + " columns, found " + std::to_string(fields.size()));
        }
        Row r;
        std::size_t c = 0;
        r.id = parse_int<std::size_t>(fields[c++], line_no);
        r.time_step = parse_int<int>(fields[c++], line_no);
        r.action = parse_int<int>(fields[c++], line_no);
        for (std::size_t i = 0; i < mdim; ++i) r.x.push_back(parse_real(fields[c++], line_no));
        for (std::size_t i = 0; i < edim; ++i) r.w.push_back(parse_real(fields[c++], line_no));
        r.r = parse_real(fields[c++], line_no);
        for (std::size_t i = 0; i < mdim; ++i) r.x_next.push_back(parse_real(fields[c++], line_no));
        rows.push_back(std::move(r));
    }

    // Rebuild records and check structural integrity.
    const auto nactions = static_cast<std::size_t>(db.action_count());
    std::vector<TransitionSet> sets;
    std::vector<TransitionTuple> tuples;
    if (db.mode() == DbMode::debiased) {
        std::size_t i = 0;
        while (i < rows.size()) {
            const auto id = rows[i].id;
            if (id != sets.size()) {
                throw Error(ErrorCode::integrity, "set_id " + std::to_string(sets.size()) +
                                                      " is missing or out of order (found " + std::to_string(id) + ")");
            }
            TransitionSet set;
            set.set_id = id;
            set.x = {rows[i].x, rows[i].time_step};
            set.w = rows[i].w;
            std::size_t j = i;
            while (j < rows.size() && rows[j].id == id) {
                const auto& row = rows[j];
                if (row.action != static_cast<int>(set.outcomes.size()) || row.x != set.x.features ||
                    row.w != set.w || row.time_step != set.x.time_step) {
                    throw Error(ErrorCode::integrity, "set_id " + std::to_string(id) +
                                                          " has a missing, repeated or inconsistent action branch");
                }
                set.outcomes.push_back(Outcome{ActionId{row.action}, row.r, row.x_next});
                ++j;
            }
            if (set.outcomes.size() != nactions) {
                throw Error(ErrorCode::integrity, "set_id " + std::to_string(id) + " has " +
                                                      std::to_string(set.outcomes.size()) + " of " +
                                                      std::to_string(nactions) + " action branches");
            }
            sets.push_back(std::move(set));
            i = j;
        }
    } else {
        for (auto& row : rows) {
            if (row.id != tuples.size()) {
                throw Error(ErrorCode::integrity, "tuple id " + std::to_string(tuples.size()) + " is missing");
            }
            if (row.action < 0 || static_cast<std::size_t>(row.action) >= nactions) {
                throw Error(ErrorCode::integrity, "tuple id " + std::to_string(row.id) + " has an invalid action");
            }
            tuples.push_back(TransitionTuple{row.id, {row.x, row.time_step}, row.w, ActionId{row.action}, row.r,
                                             {row.x_next, row.time_step + 1}, {}});
        }
    }

    if (rows.size() != row_count || (db.mode() == DbMode::debiased ? sets.size() : tuples.size()) != record_count) {
        throw Error(ErrorCode::integrity, "row count " + std::to_string(rows.size()) +
                                              " does not match the manifest (" + std::to_string(row_count) + ")");
    }
    if (checksum != "crc32:" + crc_hex(csv)) {
        throw Error(ErrorCode::checksum, "checksum mismatch for " + (dir / kTransitions).string());
    }

    // Replay provenance to regroup records into seed trajectories.
    try {
        std::size_t next = 0;
        for (const auto& p : provenance) {
            const Policy policy{parse_policy_class(p.at("policy_class").get<std::string>()),
                                p.at("params").get<std::vector<double>>()};
            const auto first = p.at("first").get<std::size_t>();
            const auto length = p.at("length").get<std::size_t>();
            const auto realized = p.at("realized_actions").get<std::vector<int>>();
            if (first != next || realized.size() != length || first + length > record_count) {
                throw Error(ErrorCode::integrity, "provenance does not tile the records");
            }
            db.begin_trajectory(policy);
            for (std::size_t k = 0; k < length; ++k) {
                if (db.mode() == DbMode::debiased) db.append_set(std::move(sets[first + k]), ActionId{realized[k]});
                else db.append_tuple(std::move(tuples[first + k]));
            }
            next = first + length;
        }
        if (next != record_count) throw Error(ErrorCode::integrity, "records outside any seed trajectory");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed, std::string(kManifest) + " provenance: " + e.what());
    }

    db.refresh_stats();
    return db;
}

} // namespace exostitch
