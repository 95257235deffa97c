#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "iets/cli.hpp"

using namespace iets;
namespace fs = std::filesystem;

namespace
{

// Fresh scratch directory, removed on destruction.
struct ScratchDir
{
    fs::path path;

    ScratchDir()
    {
        std::random_device rd;
        path = fs::temp_directory_path() /
               ("iets-cli-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
};

std::string read_file(fs::path const& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void write_file(fs::path const& p, std::string const& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

SuiteOptions into(fs::path const& dir)
{
    SuiteOptions options;
    options.out_dir = dir.string();
    return options;
}

std::string usage_message(std::vector<std::string> const& args)
{
    try
    {
        parse_invocation(args);
    }
    catch (UsageError const& e)
    {
        return e.what();
    }
    ADD_FAILURE() << "expected a usage error";
    return {};
}

int run_binary(std::string const& args)
{
    std::string const cmd =
        std::string(IETS_SIM_PATH) + " " + args + " >/dev/null 2>&1";
    int const status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

OutputRecord tiny_record()
{
    ScenarioConfig cfg;
    cfg.tx_antennas = 2;
    cfg.rx_antennas = 2;
    cfg.scheme = SchemeKind::gmd_sic;
    cfg.snr_db_points = {0, 6};
    cfg.channel_trials = 20;
    cfg.symbol_vectors_per_trial = 10;
    cfg.master_seed = 3;
    return run_record(cfg, 1);
}

}  // namespace

TEST(ParseInvocation, FourByFourQam16Scenario)
{
    auto const inv =
        parse_invocation({"--tx", "4", "--rx", "4", "--scheme", "gmd-sic",
                          "--mod", "qam16", "--snr", "0:2:24", "--trials",
                          "5000", "--seed", "42"});
    ASSERT_TRUE(inv.config);
    auto const& cfg = *inv.config;
    EXPECT_EQ(cfg.tx_antennas, 4u);
    EXPECT_EQ(cfg.rx_antennas, 4u);
    EXPECT_EQ(cfg.scheme, SchemeKind::gmd_sic);
    EXPECT_EQ(cfg.constellation, "qam16");
    std::vector<double> want;
    for (int s = 0; s <= 24; s += 2)
        want.push_back(s);
    EXPECT_EQ(cfg.snr_db_points, want);
    EXPECT_EQ(cfg.channel_trials, 5000u);
    EXPECT_EQ(cfg.symbol_vectors_per_trial, 100u);
    EXPECT_EQ(cfg.master_seed, 42u);
    EXPECT_EQ(cfg, builtin_suite("fig4a")->at(3).config);
}

TEST(ParseInvocation, NoArgumentsListsRequiredFlags)
{
    auto const msg = usage_message({});
    for (auto const* flag : {"--tx", "--rx", "--scheme", "--mod"})
        EXPECT_NE(msg.find(flag), std::string::npos) << msg;
}

TEST(ParseInvocation, InvalidValuesNameTheToken)
{
    std::vector<std::string> const base{"--tx", "2", "--rx", "2", "--scheme",
                                        "gmd-sic"};
    auto with = [&](std::vector<std::string> extra) {
        auto args = base;
        args.insert(args.end(), extra.begin(), extra.end());
        return args;
    };
    EXPECT_NE(usage_message(with({"--mod", "qam32"})).find("qam32"),
              std::string::npos);
    EXPECT_NE(usage_message(with({"--mod", "qpsk", "--snr", "0:x:4"}))
                  .find("'x'"),
              std::string::npos);
    EXPECT_NE(usage_message(with({"--mod", "qpsk", "--format", "xml"}))
                  .find("xml"),
              std::string::npos);
    EXPECT_NE(usage_message({"--tx", "abc", "--rx", "2", "--scheme", "svd-eigenmode",
                             "--mod", "qpsk"})
                  .find("abc"),
              std::string::npos);
    EXPECT_NE(usage_message({"--tx", "2", "--rx", "2", "--scheme", "mmse",
                             "--mod", "qpsk"})
                  .find("mmse"),
              std::string::npos);
}

TEST(ParseInvocation, RejectsUnknownFlagAndContradictions)
{
    usage_message({"--tx", "2", "--rx", "2", "--scheme", "gmd-sic", "--mod",
                   "qpsk", "--bogus", "1"});
    // One stream per transmit antenna cannot be nulled with fewer receivers.
    usage_message({"--tx", "4", "--rx", "2", "--scheme", "zf-vblast", "--mod",
                   "qpsk"});
    usage_message({"--suite", "fig4a", "--tx", "2"});
    usage_message({"--tx", "0", "--rx", "2", "--scheme", "gmd-sic", "--mod",
                   "qpsk"});
}

TEST(ParseInvocation, FlagsOverrideConfigFileOverrideDefaults)
{
    ScratchDir dir;
    auto const cfg_path = dir.path / "s.json";
    write_file(cfg_path, R"({"tx_antennas": 3, "rx_antennas": 3,
        "scheme": "svd-eigenmode", "constellation": "qam16",
        "channel_trials": 77})");
    auto const inv = parse_invocation(
        {"--config", cfg_path.string(), "--rx", "4", "--seed", "9"});
    ASSERT_TRUE(inv.config);
    EXPECT_EQ(inv.config->tx_antennas, 3u);
    EXPECT_EQ(inv.config->rx_antennas, 4u);
    EXPECT_EQ(inv.config->channel_trials, 77u);
    EXPECT_EQ(inv.config->symbol_vectors_per_trial, 100u);
    EXPECT_EQ(inv.config->master_seed, 9u);
    EXPECT_EQ(inv.config->snr_db_points, default_snr_sweep());

    write_file(cfg_path, R"({"tx_antennas": 3, "typo_field": 1})");
    EXPECT_NE(usage_message({"--config", cfg_path.string()}).find("typo_field"),
              std::string::npos);
}

TEST(SnrSweep, InclusiveEndpoints)
{
    EXPECT_EQ(parse_snr_sweep("0:2:24").size(), 13u);
    EXPECT_EQ(parse_snr_sweep("0:2:24").back(), 24.0);
    EXPECT_EQ(parse_snr_sweep("0:0.1:0.3"),
              (std::vector<double>{0, 0.1, 0.2, 0.1 * 3}));
    EXPECT_EQ(parse_snr_sweep("5"), (std::vector<double>{5}));
    EXPECT_EQ(parse_snr_sweep("0:4:10"), (std::vector<double>{0, 4, 8}));
    EXPECT_THROW(parse_snr_sweep("0:0:4"), UsageError);
    EXPECT_THROW(parse_snr_sweep("4:1:0"), UsageError);
    EXPECT_THROW(parse_snr_sweep("1:2"), UsageError);
}

TEST(Emit, SinglePointCsvIsTwoLines)
{
    BerCurve curve;
    BerPoint p;
    p.snr_db = 10;
    p.bits_total = 1000;
    p.bit_errors = 25;
    p.ber = 0.025;
    p.ci_low = 0.0169;
    p.ci_high = 0.0367;
    curve.points.push_back(p);
    EXPECT_EQ(to_csv(curve), "snr_db,bits,errors,ber,ci_low,ci_high\n"
                             "10,1000,25,0.025,0.0169,0.0367\n");
}

TEST(Emit, ZeroErrorRow)
{
    BerCurve curve;
    BerPoint p;
    p.snr_db = 300;
    p.bits_total = 400;
    auto const ci = binomial_ci(0, 400);
    p.ci_low = ci.low;
    p.ci_high = ci.high;
    curve.points.push_back(p);
    auto const csv = to_csv(curve);
    EXPECT_EQ(csv.substr(csv.find('\n') + 1, 15), "300,400,0,0,0,0");
}

TEST(Emit, JsonRoundTrip)
{
    auto const record = tiny_record();
    auto const back = parse_output_record(to_json_text(record));
    EXPECT_EQ(back.schema_version, record.schema_version);
    EXPECT_EQ(back.config, record.config);
    EXPECT_EQ(back.curve, record.curve);
    EXPECT_EQ(back.metadata.seed, record.metadata.seed);
    EXPECT_EQ(back.metadata.runtime_seconds, record.metadata.runtime_seconds);
    EXPECT_EQ(back.metadata.redraws, record.metadata.redraws);
}

TEST(Emit, CsvAndJsonCarryTheSameNumbers)
{
    auto const record = tiny_record();
    std::istringstream csv(to_csv(record.curve));
    auto const j = nlohmann::json::parse(to_json_text(record));
    std::string line;
    std::getline(csv, line);
    for (auto const& point : j.at("curve"))
    {
        ASSERT_TRUE(std::getline(csv, line));
        std::vector<std::string> cells;
        std::istringstream row(line);
        for (std::string cell; std::getline(row, cell, ',');)
            cells.push_back(cell);
        ASSERT_EQ(cells.size(), 6u);
        EXPECT_EQ(std::stod(cells[0]), point.at("snr_db").get<double>());
        EXPECT_EQ(std::stoull(cells[1]), point.at("bits").get<std::uint64_t>());
        EXPECT_EQ(std::stoull(cells[2]),
                  point.at("errors").get<std::uint64_t>());
        EXPECT_EQ(std::stod(cells[3]), point.at("ber").get<double>());
        EXPECT_EQ(std::stod(cells[4]), point.at("ci_low").get<double>());
        EXPECT_EQ(std::stod(cells[5]), point.at("ci_high").get<double>());
    }
    EXPECT_FALSE(std::getline(csv, line));
}

TEST(Emit, UnwritableDestinationNamesPath)
{
    auto const record = tiny_record();
    std::string const path = "/nonexistent-dir/x/out.csv";
    try
    {
        emit(record, OutputFormat::csv, path);
        FAIL();
    }
    catch (IoError const& e)
    {
        EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
    }
}

TEST(RunSuite, EmptyListSucceedsWithoutOutput)
{
    ScratchDir dir;
    std::ostringstream log;
    EXPECT_EQ(run_suite({}, into(dir.path), log), 0);
    EXPECT_TRUE(fs::is_empty(dir.path));
}

TEST(RunSuite, OneBadFileAmongThree)
{
    ScratchDir dir;
    auto const good = R"({"tx_antennas": 2, "rx_antennas": 2,
        "scheme": "gmd-sic", "constellation": "qpsk", "snr_db_points": [0],
        "channel_trials": 5, "symbol_vectors_per_trial": 2})";
    write_file(dir.path / "a.json", good);
    write_file(dir.path / "b.json", R"({"tx_antennas": 2, "scheme": "nope"})");
    write_file(dir.path / "c.json", good);
    auto const out = dir.path / "out";
    fs::create_directories(out);
    std::ostringstream log;
    int const status = run_suite({(dir.path / "a.json").string(),
                                  (dir.path / "b.json").string(),
                                  (dir.path / "c.json").string()},
                                 into(out), log);
    EXPECT_NE(status, 0);
    EXPECT_TRUE(fs::exists(out / "a.csv"));
    EXPECT_FALSE(fs::exists(out / "b.csv"));
    EXPECT_TRUE(fs::exists(out / "c.csv"));
    EXPECT_NE(log.str().find("b.json"), std::string::npos) << log.str();
}

TEST(RunSuite, BuiltinSuiteWritesFourFiles)
{
    ScratchDir dir;
    auto options = into(dir.path);
    options.overrides.channel_trials = 3;
    options.overrides.symbol_vectors_per_trial = 2;
    options.overrides.snr_db_points = std::vector<double>{0, 10};
    std::ostringstream log;
    ASSERT_EQ(run_suite({"fig4a"}, options, log), 0) << log.str();
    for (int n = 1; n <= 4; ++n)
    {
        auto const dim = std::to_string(n);
        auto const path = dir.path / ("fig4a_" + dim + "x" + dim + ".csv");
        ASSERT_TRUE(fs::exists(path));
        auto const text = read_file(path);
        EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    }
}

TEST(RunSuite, ShippedConfigFilesMatchBuiltins)
{
    for (auto const& name : builtin_suite_names())
    {
        auto const suite = builtin_suite(name);
        ASSERT_TRUE(suite);
        for (auto const& entry : *suite)
        {
            auto const path = fs::path(IETS_SOURCE_DIR) / "suites" / name /
                              (entry.name + ".json");
            ASSERT_TRUE(fs::exists(path)) << path;
            EXPECT_EQ(load_config(path.string()), entry.config) << path;
        }
    }
}

TEST(Binary, ExitCodes)
{
    ScratchDir dir;
    auto const out = (dir.path / "r.csv").string();
    std::string const ok = "--tx 2 --rx 2 --scheme svd-eigenmode --mod qpsk "
                           "--snr 0:5:10 --trials 10 --frames-per-trial 5";
    EXPECT_EQ(run_binary(ok + " --out " + out), 0);
    EXPECT_EQ(read_file(out).substr(0, 37),
              "snr_db,bits,errors,ber,ci_low,ci_high");
    EXPECT_EQ(run_binary(""), 1);
    EXPECT_EQ(run_binary("--help"), 0);
    EXPECT_EQ(run_binary(ok + " --mod qam32"), 1);
    EXPECT_EQ(run_binary(ok + " --out /nonexistent-dir/x/out.csv"), 2);
}

TEST(Binary, RepeatRunsAreByteIdentical)
{
    ScratchDir dir;
    std::string const args = "--tx 3 --rx 3 --scheme gmd-sic --mod qam16 "
                             "--snr 0:4:12 --trials 30 --frames-per-trial 4 "
                             "--seed 11";
    auto const a = (dir.path / "a.csv").string();
    auto const b = (dir.path / "b.csv").string();
    ASSERT_EQ(run_binary(args + " --out " + a), 0);
    ASSERT_EQ(run_binary(args + " --threads 3 --out " + b), 0);
    EXPECT_EQ(read_file(a), read_file(b));
}
