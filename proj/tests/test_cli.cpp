#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qi/cli.hpp"

namespace fs = std::filesystem;
using namespace qi;

namespace {

const std::string kConfig = std::string(QI_SOURCE_DIR) + "/configs/reference.conf";

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::map<std::string, std::string> parse_kv(const std::string& text)
{
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

double num(const std::map<std::string, std::string>& kv, const std::string& key)
{
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("missing key " + key);
    return std::stod(it->second);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string without_timestamp(const std::string& text)
{
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.rfind("# timestamp", 0) == 0) continue;
        out += line + '\n';
    }
    return out;
}

class TempDir {
  public:
    TempDir()
    {
        path_ = fs::temp_directory_path() / ("qisim_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string str(const std::string& leaf = "") const { return (path_ / leaf).string(); }

  private:
    static inline int counter_ = 0;
    fs::path path_;
};

} // namespace

TEST(CliSnr, IdealAdvantage)
{
    const auto r = run({"snr", "--config", kConfig, "--kv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto kv = parse_kv(r.out);
    EXPECT_NEAR(num(kv, "advantage_db"), 3.0103, 1e-4);
    EXPECT_NEAR(num(kv, "d_ci"), 3.4438, 1e-3);
    EXPECT_NEAR(num(kv, "d_qi_ideal"), 4.8704, 1e-3);
    EXPECT_NEAR(num(kv, "p_d_ci"), 0.392, 2e-3);
    EXPECT_NEAR(num(kv, "p_d_qi_ideal"), 0.875, 2e-3);
}

TEST(CliSnr, FittedZetaGivesMeasuredAdvantage)
{
    const auto r = run({"snr", "--config", kConfig, "--set", "zeta=0.7030", "--kv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(num(parse_kv(r.out), "advantage_db"), 1.48, 1e-3);
}

TEST(CliSnr, ZeroKappaAdvantageNotApplicable)
{
    const auto r = run({"snr", "--config", kConfig, "--set", "kappa=0", "--kv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto kv = parse_kv(r.out);
    EXPECT_EQ(num(kv, "snr_ci"), 0.0);
    EXPECT_EQ(num(kv, "snr_qi"), 0.0);
    EXPECT_EQ(kv.at("advantage_db"), "n/a");
}

TEST(CliSnr, RegimeWarning)
{
    const auto r = run({"snr", "--set", "n_b=2", "--kv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(parse_kv(r.out).count("warning.low_noise"), 1u);
}

TEST(CliSnr, HumanReadableByDefault)
{
    const auto r = run({"snr"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("snr_ci "), std::string::npos);
}

TEST(CliFitZeta, Examples)
{
    auto r = run({"fit-zeta", "--advantage-db", "1.48", "--kappa-i", "1", "--kv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(num(parse_kv(r.out), "zeta"), 0.7030, 1e-4);

    r = run({"fit-zeta", "--advantage-db", "3.0103", "--kv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(num(parse_kv(r.out), "zeta"), 1.0);

    r = run({"fit-zeta", "--advantage-db", "4"});
    EXPECT_EQ(r.code, cli::physics_error);
    EXPECT_NE(r.err.find("bound"), std::string::npos);

    r = run({"fit-zeta"});
    EXPECT_EQ(r.code, cli::config_error);
}

TEST(CliFitZeta, FromDataSets)
{
    TempDir dir;
    ASSERT_EQ(run({"simulate", "--config", kConfig, "--set", "zeta=0.5", "--out", dir.str(), "--n-decisions", "200000",
                   "--seed", "5"})
                  .code,
              0);
    const auto r = run({"fit-zeta", "--qi-data", dir.str("qi_h1_decisions.csv"), "--ci-data",
                        dir.str("ci_h1_decisions.csv"), "--kv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto kv = parse_kv(r.out);
    // present-case QI mean keeps the (N_S + 1) factor: ratio 2 zeta (1 + N_S)
    EXPECT_NEAR(num(kv, "snr_ratio"), 1.0 + 6.8e-4, 0.02);
    EXPECT_NEAR(num(kv, "zeta"), 0.5, 0.01);
}

TEST(CliRoc, WritesDominatingMonotoneTables)
{
    TempDir dir;
    const auto r = run({"roc", "--config", kConfig, "--out", dir.str(), "--log-pf-grid", "--kv"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"roc_ci.csv", "roc_qi_ideal.csv", "roc_qi_fitted.csv", "roc_compare.csv",
                          "roc_ci_log.csv", "roc_qi_ideal_log.csv"}) {
        EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
    }
    std::ifstream in(dir.path() / "roc_compare.csv");
    const auto t = io::read_table(in, "roc_compare.csv");
    ASSERT_EQ(t.columns, (std::vector<std::string>{"p_f", "p_d_ci", "p_d_qi_ideal", "p_d_qi_fitted"}));
    double prev_ci = -1.0, prev_qi = -1.0;
    bool saw_1e4 = false;
    for (const auto& row : t.rows) {
        const double pf = std::stod(row[0]);
        const double ci = std::stod(row[1]);
        const double qi = std::stod(row[2]);
        EXPECT_GE(ci, prev_ci);
        EXPECT_GE(qi, prev_qi);
        EXPECT_GE(qi, ci);
        if (pf < 1.0) {
            EXPECT_GT(qi, ci);
        }
        prev_ci = ci;
        prev_qi = qi;
        if (row[0] == "0.0001") {
            saw_1e4 = true;
            EXPECT_NEAR(ci, 0.392, 2e-3);
            EXPECT_NEAR(qi, 0.875, 2e-3);
        }
    }
    EXPECT_TRUE(saw_1e4);
}

TEST(CliRoc, HeaderRecordsConfiguredParameters)
{
    TempDir dir;
    ASSERT_EQ(run({"roc", "--config", kConfig, "--out", dir.str()}).code, 0);
    std::ifstream in(dir.path() / "roc_ci.csv");
    const auto ex = io::read_roc(in, "roc_ci.csv");
    io::Table t{ex.metadata, {}, {}};
    EXPECT_EQ(t.meta("config.m_exp"), "8.1199999999999992");
    EXPECT_EQ(t.meta("config.n_s"), "0.00068000000000000005");
    EXPECT_EQ(t.meta("config.kappa"), "0.085999999999999993");
    EXPECT_EQ(t.meta("config.n_b"), "1300");
    EXPECT_EQ(t.meta("tool"), "qisim");
    EXPECT_TRUE(t.meta("timestamp").has_value());
    // echoed configuration reparses to the effective one
    io::RunConfig expected;
    io::apply_config_file(expected, kConfig);
    expected.out = dir.str();
    EXPECT_EQ(io::config_from_metadata(ex.metadata, "roc_ci.csv"), expected);
}

TEST(CliRoc, RerunsAreByteIdenticalModuloTimestamp)
{
    TempDir dir;
    const std::vector<std::string> files{"roc_ci.csv", "roc_qi_ideal.csv", "roc_qi_fitted.csv", "roc_compare.csv"};
    ASSERT_EQ(run({"roc", "--config", kConfig, "--out", dir.str()}).code, 0);
    std::vector<std::string> first;
    for (const auto& f : files) first.push_back(without_timestamp(slurp(dir.path() / f)));
    ASSERT_EQ(run({"roc", "--config", kConfig, "--out", dir.str()}).code, 0);
    for (std::size_t k = 0; k < files.size(); ++k) {
        EXPECT_EQ(without_timestamp(slurp(dir.path() / files[k])), first[k]) << files[k];
    }
}

TEST(CliSimulate, DeterministicAcrossRunsAndThreads)
{
    TempDir a, b;
    ASSERT_EQ(run({"simulate", "--config", kConfig, "--out", a.str(), "--n-decisions", "5000", "--seed", "11",
                   "--timeseries", "--set", "samples_per_halfperiod=4"})
                  .code,
              0);
    ASSERT_EQ(run({"simulate", "--config", kConfig, "--out", b.str(), "--n-decisions", "5000", "--seed", "11",
                   "--timeseries", "--set", "samples_per_halfperiod=4", "--threads", "4"})
                  .code,
              0);
    for (const char* f : {"ci_h0_decisions.csv", "qi_h1_decisions.csv", "qi_h1_timeseries.csv"}) {
        ASSERT_TRUE(fs::exists(a.path() / f)) << f;
        auto strip = [&](const TempDir& d) {
            std::string s = without_timestamp(slurp(d.path() / f));
            const auto pos = s.find(d.str());
            if (pos != std::string::npos) s.erase(pos, d.str().size());
            return s;
        };
        EXPECT_EQ(strip(a), strip(b)) << f;
    }
}

TEST(CliSimulate, DifferentSeedsDiffer)
{
    TempDir a, b;
    ASSERT_EQ(run({"simulate", "--model", "ci", "--out", a.str(), "--n-decisions", "100", "--seed", "1"}).code, 0);
    ASSERT_EQ(run({"simulate", "--model", "ci", "--out", b.str(), "--n-decisions", "100", "--seed", "2"}).code, 0);
    EXPECT_NE(io::read_samples_file(a.str("ci_h0_decisions.csv"), roc::Label::h0).values,
              io::read_samples_file(b.str("ci_h0_decisions.csv"), roc::Label::h0).values);
}

TEST(CliEstimate, RoundTripMatchesAnalytic)
{
    TempDir dir;
    ASSERT_EQ(run({"simulate", "--config", kConfig, "--model", "ci", "--out", dir.str(), "--n-decisions", "100000",
                   "--seed", "3"})
                  .code,
              0);
    const auto r = run({"estimate", "--absent", dir.str("ci_h0_decisions.csv"), "--present",
                        dir.str("ci_h1_decisions.csv"), "--out", dir.str("est"), "--kv"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(dir.path() / "est" / "roc_empirical.csv");
    const auto ex = io::read_roc(in, "roc_empirical.csv");
    const auto m = ci_moments(SystemParams{});
    const double n = 100000.0;
    std::size_t checked = 0;
    for (const auto& row : ex.rows) {
        if (row.model != "empirical") continue;
        const double p = roc::q_function((row.point.beta - m.mu1) / m.sigma1);
        const double f = roc::q_function((row.point.beta - m.mu0) / m.sigma0);
        EXPECT_NEAR(row.point.p_d, p, 5.0 * std::sqrt(p * (1.0 - p) / n) + 1e-9);
        EXPECT_NEAR(row.point.p_f, f, 5.0 * std::sqrt(f * (1.0 - f) / n) + 1e-9);
        ASSERT_TRUE(row.point.p_d_ci.has_value());
        ++checked;
    }
    EXPECT_EQ(checked, 512u);
    EXPECT_NEAR(num(parse_kv(r.out), "min_resolvable_p_f"), 1e-5, 1e-20);
}

TEST(CliEstimate, BinnedMode)
{
    TempDir dir;
    ASSERT_EQ(run({"simulate", "--model", "qi", "--out", dir.str(), "--n-decisions", "2000"}).code, 0);
    const auto r = run({"estimate", "--absent", dir.str("qi_h0_decisions.csv"), "--present",
                        dir.str("qi_h1_decisions.csv"), "--out", dir.str(), "--bins", "64"});
    EXPECT_EQ(r.code, 0) << r.err;
}

TEST(CliEstimate, AllEqualValuesGiveStepRoc)
{
    TempDir dir;
    {
        std::ofstream a(dir.path() / "a.csv");
        a << "index,value\n0,1\n1,1\n2,1\n";
        std::ofstream b(dir.path() / "b.csv");
        b << "index,value\n0,1\n1,1\n";
    }
    const auto r = run({"estimate", "--absent", dir.str("a.csv"), "--present", dir.str("b.csv"), "--out",
                        dir.str("o"), "--thresholds", "8"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(dir.path() / "o" / "roc_empirical.csv");
    const auto ex = io::read_roc(in, "x");
    for (const auto& row : ex.rows) {
        if (row.model != "empirical") continue;
        EXPECT_TRUE(row.point.p_f == 0.0 || row.point.p_f == 1.0);
        EXPECT_EQ(row.point.p_f, row.point.p_d);
    }
}

TEST(CliEstimate, MalformedRowNamesLine)
{
    TempDir dir;
    {
        std::ofstream a(dir.path() / "a.csv");
        a << "# label = h0\nindex,value\n0,1.5\n1,2.5\n2,abc\n";
        std::ofstream b(dir.path() / "b.csv");
        b << "index,value\n0,1\n1,2\n";
    }
    auto r = run({"estimate", "--absent", dir.str("a.csv"), "--present", dir.str("b.csv"), "--out", dir.str()});
    EXPECT_EQ(r.code, cli::data_error);
    EXPECT_NE(r.err.find("a.csv:5"), std::string::npos) << r.err;

    r = run({"estimate", "--absent", dir.str("b.csv"), "--present", dir.str("a.csv"), "--out", dir.str()});
    EXPECT_EQ(r.code, cli::data_error);
    EXPECT_NE(r.err.find("labeled 'h0'"), std::string::npos) << r.err;
}

TEST(CliOracle, SinglePointAtReferencePasses)
{
    const auto r = run({"oracle-check", "--config", kConfig, "--point", "--kv"});
    ASSERT_EQ(r.code, 0) << r.out << r.err;
    const auto kv = parse_kv(r.out);
    EXPECT_EQ(kv.at("result"), "pass");
    EXPECT_LE(num(kv, "max_mean_rel_dev"), 1e-6);
    EXPECT_LE(num(kv, "max_variance_rel_dev"), 1e-2);
}

TEST(CliOracle, ZeroGainGivesZeroMean)
{
    const auto r = run({"oracle-check", "--zero-gain", "--kv"});
    ASSERT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_EQ(num(parse_kv(r.out), "mean"), 0.0);
}

TEST(CliOracle, GridReportsDeviations)
{
    const auto r = run({"oracle-check", "--kv"});
    const auto kv = parse_kv(r.out);
    EXPECT_EQ(kv.at("points"), "81");
    EXPECT_LE(num(kv, "max_mean_rel_dev"), 1e-6);
    EXPECT_TRUE(r.code == 0 || r.code == cli::physics_error);
    EXPECT_EQ(kv.at("result") == "pass", r.code == 0);
}

TEST(CliErrors, DistinctExitCodes)
{
    EXPECT_EQ(run({}).code, cli::usage);
    EXPECT_EQ(run({"bogus"}).code, cli::usage);
    EXPECT_EQ(run({"snr", "--nope"}).code, cli::usage);
    EXPECT_EQ(run({"snr", "--help"}).code, cli::ok);

    auto r = run({"snr", "--set", "unknown_key=1"});
    EXPECT_EQ(r.code, cli::config_error);
    EXPECT_NE(r.err.find("unknown key"), std::string::npos);
    EXPECT_EQ(run({"snr", "--config", "/nonexistent.conf"}).code, cli::config_error);
    EXPECT_EQ(run({"snr", "--set", "seed"}).code, cli::config_error);

    EXPECT_EQ(run({"snr", "--set", "kappa=2"}).code, cli::physics_error);
    EXPECT_EQ(run({"snr", "--set", "n_s=-1"}).code, cli::physics_error);

    EXPECT_EQ(run({"estimate", "--absent", "/nonexistent_a.csv", "--present", "/nonexistent_b.csv"}).code,
              cli::data_error);
}

TEST(CliErrors, ConfigFileLineInMessage)
{
    TempDir dir;
    {
        std::ofstream f(dir.path() / "bad.conf");
        f << "n_s = 1e-3\n# fine\nn_b = lots\n";
    }
    const auto r = run({"snr", "--config", dir.str("bad.conf")});
    EXPECT_EQ(r.code, cli::config_error);
    EXPECT_NE(r.err.find("bad.conf:3"), std::string::npos) << r.err;
}

TEST(CliErrors, FlagWinsOverFile)
{
    TempDir dir;
    ASSERT_EQ(run({"simulate", "--config", kConfig, "--model", "ci", "--n-decisions", "10", "--seed", "4", "--out",
                   dir.str()})
                  .code,
              0);
    std::ifstream in(dir.path() / "ci_h0_decisions.csv");
    const auto t = io::read_table(in, "x");
    EXPECT_EQ(t.meta("config.seed"), "4");
    EXPECT_EQ(t.meta("config.n_decisions"), "10");
    EXPECT_EQ(t.rows.size(), 10u);
    EXPECT_FALSE(fs::exists(dir.path() / "qi_h0_decisions.csv"));
}
