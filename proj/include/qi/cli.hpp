#pragma once

// qisim command-line front end. `run` is the whole program minus process
// setup, so tests can drive it with argument vectors.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qi/detection_models.hpp"
#include "qi/error.hpp"
#include "qi/io.hpp"
#include "qi/montecarlo.hpp"
#include "qi/receiver_circuits.hpp"
#include "qi/roc.hpp"

namespace qi::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    ok = 0,
    usage = 1,
    config_error = 2,
    data_error = 3,
    physics_error = 4,
};

/// Values collected from the command line before they are merged into a RunConfig.
struct Options {
    std::string config_path;
    std::vector<std::string> sets; ///< --set key=value
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> model;
    std::optional<std::uint64_t> n_decisions;
    std::optional<std::uint64_t> thresholds;
    bool log_pf_grid = false;
    std::optional<double> advantage_db;
    std::optional<double> kappa_i;
    std::optional<std::uint64_t> bins;
    bool timeseries = false;
    bool kv = false;
    double pf = 1e-4;
    std::string absent_path;
    std::string present_path;
    std::string qi_data;
    std::string ci_data;
    bool single_point = false;
    unsigned threads = 1;
};

/// defaults <- config file <- --set <- dedicated flags.
inline io::RunConfig build_config(const Options& o)
{
    io::RunConfig cfg;
    if (!o.config_path.empty()) {
        io::apply_config_file(cfg, o.config_path);
    }
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set: expected key=value, got '" + s + "'");
        }
        cfg.set(io::trim(std::string_view(s).substr(0, eq)), std::string_view(s).substr(eq + 1), "--set");
    }
    if (o.out) cfg.set("out", *o.out, "--out");
    if (o.seed) cfg.seed = *o.seed;
    if (o.model) cfg.set("model", *o.model, "--model");
    if (o.n_decisions) cfg.n_decisions = *o.n_decisions;
    if (o.thresholds) cfg.thresholds = *o.thresholds;
    if (o.log_pf_grid) cfg.log_pf_grid = true;
    if (o.kappa_i) cfg.params.kappa_i = *o.kappa_i;
    if (o.bins) cfg.bins = *o.bins;
    if (o.timeseries) cfg.timeseries = true;
    cfg.validate();
    return cfg;
}

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline io::Metadata header(const std::string& command, const io::RunConfig& cfg)
{
    io::Metadata md;
    md.emplace_back("tool", "qisim");
    md.emplace_back("version", kVersion);
    md.emplace_back("command", command);
    md.emplace_back("timestamp", utc_timestamp());
    for (const auto& [k, v] : cfg.to_key_values()) {
        md.emplace_back("config." + k, v);
    }
    md.emplace_back("m", io::format_double(cfg.params.m));
    return md;
}

/// Opens out_dir/name for writing, creating out_dir.
inline std::ofstream open_output(const std::string& out_dir, const std::string& name)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto path = std::filesystem::path(out_dir) / name;
    std::ofstream f(path);
    if (!f) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    return f;
}

class Report {
  public:
    Report(std::ostream& out, bool kv) : out_(out), kv_(kv) {}

    void line(const std::string& key, const std::string& value)
    {
        if (kv_) {
            out_ << key << '=' << value << '\n';
        } else {
            out_ << key << std::string(key.size() < 24 ? 24 - key.size() : 1, ' ') << value << '\n';
        }
    }
    void line(const std::string& key, double value) { line(key, io::format_double(value)); }

  private:
    std::ostream& out_;
    bool kv_;
};

inline SystemParams ideal_qi(SystemParams p)
{
    p.zeta = 1.0;
    p.kappa_i = 1.0;
    return p;
}

inline void report_warnings(Report& rep, const io::RunConfig& cfg)
{
    for (const auto& w : regime_warnings(cfg.params, cfg.regime())) {
        rep.line("warning." + w.code, w.message + " (value " + io::format_double(w.value) + ", threshold " +
                                          io::format_double(w.threshold) + ")");
    }
}

inline int cmd_snr(const Options& o, std::ostream& out)
{
    const auto cfg = build_config(o);
    const auto& p = cfg.params;
    Report rep(out, o.kv);
    const double sc = snr_ci(p);
    const double sq = snr_qi(p);
    rep.line("snr_ci", sc);
    rep.line("snr_qi", sq);
    if (sc > 0.0) {
        rep.line("advantage_db", 10.0 * std::log10(sq / sc));
    } else {
        rep.line("advantage_db", "n/a");
    }
    const auto mci = ci_moments(p);
    const auto mqi = qi_moments(p);
    const auto mideal = qi_snr_moments(ideal_qi(p));
    const auto mfit = qi_snr_moments(p);
    rep.line("d_ci", mci.separation());
    rep.line("d_qi_ideal", mideal.separation());
    rep.line("d_qi", mfit.separation());
    rep.line("mu_ci", mci.mu1);
    rep.line("mu_qi", mqi.mu1);
    rep.line("sigma", mci.sigma0);
    rep.line("p_f", o.pf);
    rep.line("p_d_ci", roc::pd_at_pf(mci, o.pf));
    rep.line("p_d_qi_ideal", roc::pd_at_pf(mideal, o.pf));
    rep.line("p_d_qi", roc::pd_at_pf(mfit, o.pf));
    report_warnings(rep, cfg);
    return ok;
}

struct Curve {
    std::string tag;
    HypothesisMoments moments;
};

inline std::vector<Curve> analytic_curves(const io::RunConfig& cfg)
{
    std::vector<Curve> curves;
    if (cfg.model != io::ModelSelector::qi) {
        curves.push_back({"ci", ci_moments(cfg.params)});
    }
    if (cfg.model != io::ModelSelector::ci) {
        curves.push_back({"qi_ideal", qi_snr_moments(ideal_qi(cfg.params))});
        curves.push_back({"qi_fitted", qi_snr_moments(cfg.params)});
    }
    return curves;
}

/// Shared false-alarm grid for side-by-side tables: 1-2-5 per decade from
/// pf_min up to 0.1, then linear to 1.
inline std::vector<double> shared_pf_grid(double pf_min)
{
    std::vector<double> pf;
    const int e0 = static_cast<int>(std::floor(std::log10(pf_min)));
    for (int e = e0; e <= -2; ++e) {
        for (double mant : {1.0, 2.0, 5.0}) {
            const double v = mant * std::pow(10.0, e);
            if (v >= pf_min * (1.0 - 1e-12)) pf.push_back(v);
        }
    }
    for (int k = 1; k <= 10; ++k) {
        pf.push_back(0.1 * k);
    }
    pf.back() = 1.0;
    return pf;
}

inline int cmd_roc(const Options& o, std::ostream& out)
{
    const auto cfg = build_config(o);
    const auto curves = analytic_curves(cfg);
    // common threshold axis spanning every curve
    HypothesisMoments span = curves.front().moments;
    for (const auto& c : curves) {
        if (c.moments.mu1 + 3.0 * c.moments.sigma1 > span.mu1 + 3.0 * span.sigma1) span = c.moments;
    }
    const auto betas = roc::threshold_grid(span, cfg.thresholds);
    for (const auto& c : curves) {
        io::RocExport ex;
        ex.metadata = header("roc", cfg);
        ex.metadata.emplace_back("curve", c.tag);
        ex.metadata.emplace_back("mu0", io::format_double(c.moments.mu0));
        ex.metadata.emplace_back("sigma0", io::format_double(c.moments.sigma0));
        ex.metadata.emplace_back("mu1", io::format_double(c.moments.mu1));
        ex.metadata.emplace_back("sigma1", io::format_double(c.moments.sigma1));
        io::append_curve(ex, c.tag, roc::roc_analytic(c.moments, betas));
        auto f = open_output(cfg.out, "roc_" + c.tag + ".csv");
        io::write_roc(f, ex);
        if (cfg.log_pf_grid) {
            io::RocExport lx;
            lx.metadata = ex.metadata;
            lx.metadata.emplace_back("grid", "log_pf");
            const auto lb = roc::log_pf_threshold_grid(c.moments, cfg.log_pf_points, cfg.pf_min, 0.5);
            io::append_curve(lx, c.tag, roc::roc_analytic(c.moments, lb));
            auto lf = open_output(cfg.out, "roc_" + c.tag + "_log.csv");
            io::write_roc(lf, lx);
        }
    }

    std::vector<std::string> cols{"p_f"};
    for (const auto& c : curves) cols.push_back("p_d_" + c.tag);
    std::vector<std::vector<std::string>> rows;
    for (double pf : shared_pf_grid(cfg.pf_min)) {
        std::vector<std::string> row{io::format_double(pf)};
        for (const auto& c : curves) row.push_back(io::format_double(roc::pd_at_pf(c.moments, pf)));
        rows.push_back(std::move(row));
    }
    auto f = open_output(cfg.out, "roc_compare.csv");
    io::write_table(f, header("roc", cfg), cols, rows);

    Report rep(out, o.kv);
    rep.line("out", cfg.out);
    for (const auto& c : curves) {
        rep.line("d_" + c.tag, c.moments.separation());
        rep.line("p_d_" + c.tag + "@" + io::format_double(o.pf), roc::pd_at_pf(c.moments, o.pf));
    }
    report_warnings(rep, cfg);
    return ok;
}

inline mc::SimConfig sim_config(const io::RunConfig& cfg, Model model, unsigned threads)
{
    mc::SimConfig sc;
    sc.params = cfg.params;
    sc.f_mod = cfg.f_mod;
    sc.samples_per_halfperiod = cfg.samples_per_halfperiod;
    sc.n_decisions = cfg.n_decisions;
    sc.seed = cfg.seed;
    sc.model = model;
    sc.sigma_present_scale = cfg.sigma_present_scale;
    sc.threads = threads;
    return sc;
}

inline std::vector<Model> selected_models(io::ModelSelector sel)
{
    switch (sel) {
    case io::ModelSelector::ci: return {Model::ci};
    case io::ModelSelector::qi: return {Model::qi};
    case io::ModelSelector::both: return {Model::ci, Model::qi};
    }
    return {};
}

inline int cmd_simulate(const Options& o, std::ostream& out)
{
    const auto cfg = build_config(o);
    Report rep(out, o.kv);
    for (Model model : selected_models(cfg.model)) {
        const auto sc = sim_config(cfg, model, o.threads);
        for (auto label : {roc::Label::h0, roc::Label::h1}) {
            const std::string stem = std::string(to_string(model)) + "_" + roc::to_string(label);
            auto md = header("simulate", cfg);
            md.emplace_back("sim_model", to_string(model));
            const auto samples = mc::simulate_decisions(sc, label);
            auto f = open_output(cfg.out, stem + "_decisions.csv");
            io::write_samples(f, md, samples);
            const auto [mean, sd] = roc::sample_moments(samples.values);
            rep.line(stem + ".mean", mean);
            rep.line(stem + ".std", sd);
            if (cfg.timeseries) {
                auto tf = open_output(cfg.out, stem + "_timeseries.csv");
                io::write_timeseries(tf, md, mc::simulate_timeseries(sc, label));
            }
        }
    }
    rep.line("out", cfg.out);
    return ok;
}

inline int cmd_estimate(const Options& o, std::ostream& out)
{
    if (o.absent_path.empty() || o.present_path.empty()) {
        throw ConfigError("estimate: --absent and --present are required");
    }
    const auto cfg = build_config(o);
    const auto absent = io::read_samples_file(o.absent_path, roc::Label::h0);
    const auto present = io::read_samples_file(o.present_path, roc::Label::h1);
    const auto fit = roc::fit_moments(absent, present);
    const auto betas = roc::threshold_grid(fit, cfg.thresholds);

    roc::EmpiricalOptions eo;
    if (cfg.bins > 0) {
        eo.mode = roc::TailMode::binned;
        eo.bins = cfg.bins;
    }
    io::RocExport ex;
    ex.metadata = header("estimate", cfg);
    ex.metadata.emplace_back("absent", o.absent_path);
    ex.metadata.emplace_back("present", o.present_path);
    ex.metadata.emplace_back("n_absent", std::to_string(absent.values.size()));
    ex.metadata.emplace_back("n_present", std::to_string(present.values.size()));
    ex.metadata.emplace_back("min_resolvable_p_f", io::format_double(roc::min_resolvable_rate(absent.values.size())));
    ex.metadata.emplace_back("fit_mu0", io::format_double(fit.mu0));
    ex.metadata.emplace_back("fit_sigma0", io::format_double(fit.sigma0));
    ex.metadata.emplace_back("fit_mu1", io::format_double(fit.mu1));
    ex.metadata.emplace_back("fit_sigma1", io::format_double(fit.sigma1));
    io::append_curve(ex, "empirical", roc::roc_empirical(absent, present, betas, eo));
    io::append_curve(ex, "gaussian_fit", roc::roc_analytic(fit, betas));
    auto f = open_output(cfg.out, "roc_empirical.csv");
    io::write_roc(f, ex);

    Report rep(out, o.kv);
    rep.line("n_absent", std::to_string(absent.values.size()));
    rep.line("n_present", std::to_string(present.values.size()));
    rep.line("fit_mu0", fit.mu0);
    rep.line("fit_sigma0", fit.sigma0);
    rep.line("fit_mu1", fit.mu1);
    rep.line("fit_sigma1", fit.sigma1);
    rep.line("d_fit", fit.separation());
    rep.line("min_resolvable_p_f", roc::min_resolvable_rate(absent.values.size()));
    rep.line("out", cfg.out);
    return ok;
}

inline int cmd_fit_zeta(const Options& o, std::ostream& out)
{
    const double kappa_i = o.kappa_i.value_or(1.0);
    Report rep(out, o.kv);
    double db = 0.0;
    if (o.advantage_db) {
        db = *o.advantage_db;
    } else if (!o.qi_data.empty() && !o.ci_data.empty()) {
        const auto qi = io::read_samples_file(o.qi_data, roc::Label::h1);
        const auto ci = io::read_samples_file(o.ci_data, roc::Label::h1);
        const auto [mq, sq] = roc::sample_moments(qi.values);
        const auto [mc_, sc] = roc::sample_moments(ci.values);
        if (!(sq > 0.0 && sc > 0.0 && mc_ != 0.0)) {
            throw DataError("fit-zeta: degenerate data set (zero spread or zero classical mean)");
        }
        const double ratio = (mq / sq) * (mq / sq) / ((mc_ / sc) * (mc_ / sc));
        rep.line("d_qi", mq / sq);
        rep.line("d_ci", mc_ / sc);
        rep.line("snr_ratio", ratio);
        db = 10.0 * std::log10(ratio);
    } else {
        throw ConfigError("fit-zeta: give --advantage-db, or both --qi-data and --ci-data");
    }
    const double zeta = fit_zeta(db, kappa_i);
    rep.line("advantage_db", db);
    rep.line("kappa_i", kappa_i);
    rep.line("zeta", zeta);
    return ok;
}

inline int cmd_oracle_check(const Options& o, std::ostream& out)
{
    const auto cfg = build_config(o);
    Report rep(out, o.kv);
    std::vector<optics::OraclePoint> points;
    if (o.single_point) {
        points.push_back(optics::check_qi_point(cfg.params));
    } else {
        SystemParams base = cfg.params;
        base.kappa_i = 1.0;
        base.kappa_r = 1.0;
        points = optics::oracle_grid({}, base);
    }
    double max_mean = 0.0;
    double max_var = 0.0;
    std::size_t passed = 0;
    for (const auto& pt : points) {
        max_mean = std::max(max_mean, pt.mean_rel_dev);
        max_var = std::max(max_var, pt.variance_rel_dev);
        passed += pt.pass ? 1 : 0;
    }
    rep.line("points", std::to_string(points.size()));
    rep.line("passed", std::to_string(passed));
    rep.line("max_mean_rel_dev", max_mean);
    rep.line("max_variance_rel_dev", max_var);
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& pt = points[k];
        if (pt.pass) continue;
        const auto& p = pt.params;
        rep.line("fail." + std::to_string(k),
                 "n_s=" + io::format_double(p.n_s) + " n_b=" + io::format_double(p.n_b) + " kappa=" +
                     io::format_double(p.kappa) + " g_a-1=" + io::format_double(p.g_a - 1.0) + " mean_dev=" +
                     io::format_double(pt.mean_rel_dev) + " var_dev=" + io::format_double(pt.variance_rel_dev));
    }
    // Classical homodyne leg at the configured point.
    const auto ci = optics::ci_homodyne_scaled(cfg.params);
    const auto ci_ref = ci_mode_moments(cfg.params);
    rep.line("ci_mean_rel_dev", optics::relative_deviation(ci.mean, ci_ref.mean));
    rep.line("ci_variance_rel_dev", optics::relative_deviation(ci.variance, ci_ref.variance));
    const bool all = passed == points.size();
    rep.line("result", all ? "pass" : "fail");
    return all ? ok : physics_error;
}

/// Zero-gain conjugator: no conjugate light, so N_X - N_Y has zero mean.
inline int cmd_oracle_zero_gain(const Options& o, std::ostream& out)
{
    auto cfg = build_config(o);
    cfg.params.g_a = 1.0;
    Report rep(out, o.kv);
    const auto raw = optics::qi_receiver_stats(cfg.params, Phase::plus);
    rep.line("mean", raw.mean);
    rep.line("variance", raw.variance);
    const bool pass = std::abs(raw.mean) <= 1e-12;
    rep.line("result", pass ? "pass" : "fail");
    return pass ? ok : physics_error;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Neyman-Pearson quantum-illumination detection simulator", "qisim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "key = value configuration file");
        sub->add_option("--set", o.sets, "override one config key (key=value), repeatable");
        sub->add_flag("--kv", o.kv, "machine-readable key=value report");
    };

    auto* snr = app.add_subcommand("snr", "SNRs, QI advantage and operating points");
    common(snr);
    snr->add_option("--kappa-i", o.kappa_i, "idler transmissivity");
    snr->add_option("--pf", o.pf, "false-alarm constraint for the reported P_D")->check(CLI::Range(0.0, 1.0));

    auto* rocc = app.add_subcommand("roc", "analytic ROC tables");
    common(rocc);
    rocc->add_option("--out", o.out, "output directory");
    rocc->add_option("--model", o.model, "ci, qi or both");
    rocc->add_option("--thresholds", o.thresholds, "threshold grid size");
    rocc->add_flag("--log-pf-grid", o.log_pf_grid, "also write log-spaced small-P_F tables");
    rocc->add_option("--kappa-i", o.kappa_i, "idler transmissivity");
    rocc->add_option("--pf", o.pf, "false-alarm constraint for the reported P_D")->check(CLI::Range(0.0, 1.0));

    auto* sim = app.add_subcommand("simulate", "Monte-Carlo decision / time-series data sets");
    common(sim);
    sim->add_option("--out", o.out, "output directory");
    sim->add_option("--seed", o.seed, "RNG seed");
    sim->add_option("--model", o.model, "ci, qi or both");
    sim->add_option("--n-decisions", o.n_decisions, "decisions per hypothesis");
    sim->add_option("--kappa-i", o.kappa_i, "idler transmissivity");
    sim->add_flag("--timeseries", o.timeseries, "also write BPSK time series");
    sim->add_option("--threads", o.threads, "worker threads (output is independent of this)");

    auto* est = app.add_subcommand("estimate", "empirical ROC from two data sets");
    common(est);
    est->add_option("--absent", o.absent_path, "target-absent (h0) data set")->required();
    est->add_option("--present", o.present_path, "target-present (h1) data set")->required();
    est->add_option("--out", o.out, "output directory");
    est->add_option("--thresholds", o.thresholds, "threshold grid size");
    est->add_option("--bins", o.bins, "histogram bins (0 = exact counting)");

    auto* fz = app.add_subcommand("fit-zeta", "imperfection factor from a measured advantage");
    fz->add_option("--advantage-db", o.advantage_db, "measured SNR advantage in dB");
    fz->add_option("--kappa-i", o.kappa_i, "idler transmissivity (default 1)");
    fz->add_option("--qi-data", o.qi_data, "present-case QI data set");
    fz->add_option("--ci-data", o.ci_data, "present-case CI data set");
    fz->add_flag("--kv", o.kv, "machine-readable key=value report");

    auto* oc = app.add_subcommand("oracle-check", "covariance oracle vs closed-form moments");
    common(oc);
    oc->add_flag("--point", o.single_point, "check only the configured parameters");
    bool zero_gain = false;
    oc->add_flag("--zero-gain", zero_gain, "check that a unit-gain conjugator yields zero mean");

    std::vector<std::string> argv_store{"qisim"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        if (snr->parsed()) return cmd_snr(o, out);
        if (rocc->parsed()) return cmd_roc(o, out);
        if (sim->parsed()) return cmd_simulate(o, out);
        if (est->parsed()) return cmd_estimate(o, out);
        if (fz->parsed()) return cmd_fit_zeta(o, out);
        if (oc->parsed()) return zero_gain ? cmd_oracle_zero_gain(o, out) : cmd_oracle_check(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const PhysicsError& e) {
        err << "physics error: " << e.what() << '\n';
        return physics_error;
    }
    return usage;
}

} // namespace qi::cli
