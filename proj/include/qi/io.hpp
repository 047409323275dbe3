#pragma once

// Run configuration (flat `key = value` files) and the comma-separated data
// formats: `#`-prefixed metadata lines, a column-name row, then data rows.
// Floats are written with 17 significant digits so they re-parse bit-exactly.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "qi/detection_models.hpp"
#include "qi/error.hpp"
#include "qi/montecarlo.hpp"
#include "qi/roc.hpp"

namespace qi::io {

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s)
{
    s = trim(s);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// RunConfig

enum class ModelSelector { ci, qi, both };

inline const char* to_string(ModelSelector m)
{
    switch (m) {
    case ModelSelector::ci: return "ci";
    case ModelSelector::qi: return "qi";
    case ModelSelector::both: return "both";
    }
    return "both";
}

struct RunConfig {
    SystemParams params;
    /// When set, params.m = 10^m_exp.
    std::optional<double> m_exp = 8.12;

    ModelSelector model = ModelSelector::both;
    std::uint64_t seed = 1;
    std::uint64_t n_decisions = 100000;
    std::uint64_t thresholds = 512;
    bool log_pf_grid = false;
    std::uint64_t log_pf_points = 128;
    double pf_min = 1e-8;
    double f_mod = 3571.0;
    std::uint64_t samples_per_halfperiod = 16;
    double sigma_present_scale = 1.0;
    /// 0 selects exact sorted-sample counting.
    std::uint64_t bins = 0;
    bool timeseries = false;
    double regime_min_n_b = 10.0;
    double regime_max_kappa_n_s = 0.1;
    std::string out = "out";

    friend bool operator==(const RunConfig& a, const RunConfig& b)
    {
        return a.to_key_values() == b.to_key_values();
    }

    RegimeThresholds regime() const { return {regime_min_n_b, regime_max_kappa_n_s}; }

    /// Effective configuration, one entry per key, in a fixed order.
    Metadata to_key_values() const
    {
        Metadata kv;
        kv.emplace_back("n_s", format_double(params.n_s));
        kv.emplace_back("n_b", format_double(params.n_b));
        kv.emplace_back("kappa", format_double(params.kappa));
        kv.emplace_back("kappa_i", format_double(params.kappa_i));
        kv.emplace_back("zeta", format_double(params.zeta));
        if (m_exp) {
            kv.emplace_back("m_exp", format_double(*m_exp));
        } else {
            kv.emplace_back("m", format_double(params.m));
        }
        kv.emplace_back("g_a", format_double(params.g_a));
        kv.emplace_back("kappa_r", format_double(params.kappa_r));
        kv.emplace_back("model", to_string(model));
        kv.emplace_back("seed", std::to_string(seed));
        kv.emplace_back("n_decisions", std::to_string(n_decisions));
        kv.emplace_back("thresholds", std::to_string(thresholds));
        kv.emplace_back("log_pf_grid", log_pf_grid ? "true" : "false");
        kv.emplace_back("log_pf_points", std::to_string(log_pf_points));
        kv.emplace_back("pf_min", format_double(pf_min));
        kv.emplace_back("f_mod", format_double(f_mod));
        kv.emplace_back("samples_per_halfperiod", std::to_string(samples_per_halfperiod));
        kv.emplace_back("sigma_present_scale", format_double(sigma_present_scale));
        kv.emplace_back("bins", std::to_string(bins));
        kv.emplace_back("timeseries", timeseries ? "true" : "false");
        kv.emplace_back("regime_min_n_b", format_double(regime_min_n_b));
        kv.emplace_back("regime_max_kappa_n_s", format_double(regime_max_kappa_n_s));
        kv.emplace_back("out", out);
        return kv;
    }

    /// Sets one key. `where` prefixes error messages (e.g. "run.conf:7" or "--seed").
    void set(std::string_view key, std::string_view value, const std::string& where)
    {
        const std::string k(key);
        const std::string v(trim(value));
        auto bad = [&](const char* what) {
            throw ConfigError(where + ": key '" + k + "': cannot parse '" + v + "' as " + what);
        };
        auto num = [&]() {
            auto d = parse_double(v);
            if (!d || !std::isfinite(*d)) bad("a finite number");
            return *d;
        };
        auto count = [&]() {
            auto u = parse_u64(v);
            if (!u) bad("a non-negative integer");
            return *u;
        };
        auto flag = [&]() {
            if (v == "true" || v == "1" || v == "yes") return true;
            if (v == "false" || v == "0" || v == "no") return false;
            bad("a boolean");
            return false;
        };

        if (k == "n_s") params.n_s = num();
        else if (k == "n_b") params.n_b = num();
        else if (k == "kappa") params.kappa = num();
        else if (k == "kappa_i") params.kappa_i = num();
        else if (k == "zeta") params.zeta = num();
        else if (k == "m_exp") { m_exp = num(); params.m = std::pow(10.0, *m_exp); }
        else if (k == "m") { params.m = num(); m_exp.reset(); }
        else if (k == "g_a") params.g_a = num();
        else if (k == "kappa_r") params.kappa_r = num();
        else if (k == "model") {
            if (v == "ci") model = ModelSelector::ci;
            else if (v == "qi") model = ModelSelector::qi;
            else if (v == "both") model = ModelSelector::both;
            else bad("one of ci, qi, both");
        }
        else if (k == "seed") seed = count();
        else if (k == "n_decisions") n_decisions = count();
        else if (k == "thresholds") thresholds = count();
        else if (k == "log_pf_grid") log_pf_grid = flag();
        else if (k == "log_pf_points") log_pf_points = count();
        else if (k == "pf_min") pf_min = num();
        else if (k == "f_mod") f_mod = num();
        else if (k == "samples_per_halfperiod") samples_per_halfperiod = count();
        else if (k == "sigma_present_scale") sigma_present_scale = num();
        else if (k == "bins") bins = count();
        else if (k == "timeseries") timeseries = flag();
        else if (k == "regime_min_n_b") regime_min_n_b = num();
        else if (k == "regime_max_kappa_n_s") regime_max_kappa_n_s = num();
        else if (k == "out") {
            if (v.empty()) bad("a path");
            out = v;
        }
        else throw ConfigError(where + ": unknown key '" + k + "'");
    }

    /// Range checks that do not depend on the command being run.
    void validate() const
    {
        params.validate();
        if (n_decisions < 2) throw ConfigError("n_decisions must be >= 2");
        if (thresholds < 2) throw ConfigError("thresholds must be >= 2");
        if (log_pf_points < 2) throw ConfigError("log_pf_points must be >= 2");
        if (!(pf_min > 0.0 && pf_min < 0.5)) throw ConfigError("pf_min must lie in (0, 0.5)");
        if (!(f_mod > 0.0)) throw ConfigError("f_mod must be > 0");
        if (samples_per_halfperiod < 1) throw ConfigError("samples_per_halfperiod must be >= 1");
        if (!(sigma_present_scale > 0.0)) throw ConfigError("sigma_present_scale must be > 0");
    }
};

/// Rebuilds a configuration from `config.<key>` metadata entries, as echoed in
/// output headers.
inline RunConfig config_from_metadata(const Metadata& md, const std::string& source)
{
    RunConfig cfg;
    bool any = false;
    for (const auto& [k, v] : md) {
        constexpr std::string_view prefix = "config.";
        if (k.rfind(prefix, 0) == 0) {
            cfg.set(std::string_view(k).substr(prefix.size()), v, source);
            any = true;
        }
    }
    if (!any) {
        throw DataError(source + ": no configuration entries in header");
    }
    return cfg;
}

/// Parses `key = value` lines; `#` starts a comment. `source` names the input in errors.
inline void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& source)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv(line);
        if (const auto hash = sv.find('#'); hash != std::string_view::npos) {
            sv = sv.substr(0, hash);
        }
        sv = trim(sv);
        if (sv.empty()) {
            continue;
        }
        const std::string where = source + ":" + std::to_string(lineno);
        const auto eq = sv.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(where + ": expected 'key = value'");
        }
        const auto key = trim(sv.substr(0, eq));
        if (key.empty()) {
            throw ConfigError(where + ": empty key");
        }
        cfg.set(key, sv.substr(eq + 1), where);
    }
}

inline void apply_config_file(RunConfig& cfg, const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    apply_config_text(cfg, in, path);
}

// ---------------------------------------------------------------------------
// Tables

struct Table {
    Metadata metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::string> meta(std::string_view key) const
    {
        for (const auto& [k, v] : metadata) {
            if (k == key) return v;
        }
        return std::nullopt;
    }

    std::optional<std::size_t> column(std::string_view name) const
    {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c] == name) return c;
        }
        return std::nullopt;
    }
};

inline void write_table(std::ostream& out, const Metadata& metadata, const std::vector<std::string>& columns,
                        const std::vector<std::vector<std::string>>& rows)
{
    for (const auto& [k, v] : metadata) {
        out << "# " << k << " = " << v << '\n';
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out << (c ? "," : "") << columns[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c ? "," : "") << row[c];
        }
        out << '\n';
    }
}

/// Reads a table; `source` names the input in error messages. Row width must
/// match the column row.
inline Table read_table(std::istream& in, const std::string& source)
{
    Table t;
    std::string line;
    std::size_t lineno = 0;
    bool have_columns = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty()) {
            continue;
        }
        if (sv.front() == '#') {
            sv.remove_prefix(1);
            const auto eq = sv.find('=');
            if (eq != std::string_view::npos && !have_columns) {
                t.metadata.emplace_back(std::string(trim(sv.substr(0, eq))), std::string(trim(sv.substr(eq + 1))));
            }
            continue;
        }
        auto fields = split_commas(sv);
        if (!have_columns) {
            for (auto f : fields) t.columns.emplace_back(f);
            have_columns = true;
            continue;
        }
        if (fields.size() != t.columns.size()) {
            throw DataError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        std::vector<std::string> row;
        row.reserve(fields.size());
        for (auto f : fields) row.emplace_back(f);
        t.rows.push_back(std::move(row));
    }
    if (!have_columns) {
        throw DataError(source + ": missing column-name row");
    }
    return t;
}

// ---------------------------------------------------------------------------
// ROC export

struct RocRow {
    std::string model;
    roc::RocPoint point;

    friend bool operator==(const RocRow&, const RocRow&) = default;
};

struct RocExport {
    Metadata metadata;
    std::vector<RocRow> rows;

    friend bool operator==(const RocExport&, const RocExport&) = default;
};

inline const std::vector<std::string>& roc_columns()
{
    static const std::vector<std::string> cols{"model", "beta", "p_f", "p_d", "p_f_lo",
                                               "p_f_hi", "p_d_lo", "p_d_hi", "estimable"};
    return cols;
}

inline void append_curve(RocExport& ex, const std::string& model, const roc::RocCurve& curve)
{
    for (const auto& pt : curve.points) {
        ex.rows.push_back({model, pt});
    }
}

inline void write_roc(std::ostream& out, const RocExport& ex)
{
    std::vector<std::vector<std::string>> rows;
    rows.reserve(ex.rows.size());
    for (const auto& r : ex.rows) {
        const auto& p = r.point;
        auto opt = [](const std::optional<std::pair<double, double>>& ci, bool lo) {
            return ci ? format_double(lo ? ci->first : ci->second) : std::string();
        };
        rows.push_back({r.model, format_double(p.beta), format_double(p.p_f), format_double(p.p_d),
                        opt(p.p_f_ci, true), opt(p.p_f_ci, false), opt(p.p_d_ci, true), opt(p.p_d_ci, false),
                        p.estimable ? "1" : "0"});
    }
    write_table(out, ex.metadata, roc_columns(), rows);
}

inline RocExport read_roc(std::istream& in, const std::string& source)
{
    const Table t = read_table(in, source);
    if (t.columns != roc_columns()) {
        throw DataError(source + ": not a ROC table (unexpected columns)");
    }
    RocExport ex;
    ex.metadata = t.metadata;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        auto num = [&](std::size_t c) {
            auto d = parse_double(row[c]);
            if (!d) {
                throw DataError(source + ": row " + std::to_string(r + 1) + ": column '" + t.columns[c] +
                                "' is not numeric");
            }
            return *d;
        };
        auto ci = [&](std::size_t lo, std::size_t hi) -> std::optional<std::pair<double, double>> {
            if (row[lo].empty() && row[hi].empty()) return std::nullopt;
            return std::pair{num(lo), num(hi)};
        };
        RocRow rr;
        rr.model = row[0];
        rr.point.beta = num(1);
        rr.point.p_f = num(2);
        rr.point.p_d = num(3);
        rr.point.p_f_ci = ci(4, 5);
        rr.point.p_d_ci = ci(6, 7);
        rr.point.estimable = row[8] != "0";
        ex.rows.push_back(std::move(rr));
    }
    return ex;
}

// ---------------------------------------------------------------------------
// Sample data sets

inline void write_samples(std::ostream& out, const Metadata& metadata, const roc::SampleSet& s)
{
    Metadata md = metadata;
    md.emplace_back("kind", "decisions");
    md.emplace_back("label", roc::to_string(s.label));
    std::vector<std::vector<std::string>> rows;
    rows.reserve(s.values.size());
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        rows.push_back({std::to_string(k), format_double(s.values[k])});
    }
    write_table(out, md, {"index", "value"}, rows);
}

/// Reads a decision data set. Any table with a `value` column is accepted;
/// a `label` metadata entry, when present, must match `expected`.
inline roc::SampleSet read_samples(std::istream& in, const std::string& source, roc::Label expected)
{
    roc::SampleSet s;
    s.label = expected;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> columns;
    std::optional<std::size_t> value_col;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        if (sv.front() == '#') {
            sv.remove_prefix(1);
            const auto eq = sv.find('=');
            if (eq == std::string_view::npos || !columns.empty()) continue;
            const auto key = trim(sv.substr(0, eq));
            const auto val = trim(sv.substr(eq + 1));
            if (key == "label" && val != roc::to_string(expected)) {
                throw DataError(source + ":" + std::to_string(lineno) + ": data set is labeled '" + std::string(val) +
                                "' but was supplied as " + roc::to_string(expected));
            }
            if (key == "kind" && val != "decisions") {
                throw DataError(source + ":" + std::to_string(lineno) + ": expected a decisions data set, found kind '" +
                                std::string(val) + "'");
            }
            continue;
        }
        auto fields = split_commas(sv);
        if (columns.empty()) {
            for (std::size_t c = 0; c < fields.size(); ++c) {
                columns.emplace_back(fields[c]);
                if (fields[c] == "value") value_col = c;
            }
            if (!value_col) {
                throw DataError(source + ":" + std::to_string(lineno) + ": schema mismatch: no 'value' column");
            }
            continue;
        }
        if (fields.size() != columns.size()) {
            throw DataError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        const auto v = parse_double(fields[*value_col]);
        if (!v || !std::isfinite(*v)) {
            throw DataError(source + ":" + std::to_string(lineno) + ": non-numeric value '" +
                            std::string(fields[*value_col]) + "'");
        }
        s.values.push_back(*v);
    }
    if (columns.empty()) {
        throw DataError(source + ": missing column-name row");
    }
    if (s.values.size() < 2) {
        throw DataError(source + ": need at least 2 samples, found " + std::to_string(s.values.size()));
    }
    return s;
}

inline void write_timeseries(std::ostream& out, const Metadata& metadata, const mc::LabeledSeries& s)
{
    Metadata md = metadata;
    md.emplace_back("kind", "timeseries");
    md.emplace_back("label", roc::to_string(s.label));
    std::vector<char> window_end(s.values.size(), 0);
    for (auto k : s.decision_marks) {
        if (k < window_end.size()) window_end[k] = 1;
    }
    std::vector<std::vector<std::string>> rows;
    rows.reserve(s.values.size());
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        rows.push_back({std::to_string(k), format_double(s.times[k]), format_double(s.values[k]),
                        window_end[k] ? "1" : "0"});
    }
    write_table(out, md, {"index", "time", "value", "window_end"}, rows);
}

inline roc::SampleSet read_samples_file(const std::string& path, roc::Label expected)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open data file '" + path + "'");
    }
    return read_samples(in, path, expected);
}

} // namespace qi::io
