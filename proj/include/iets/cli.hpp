#pragma once

// Command-line front end: invocation parsing, JSON config files, CSV/JSON
// result emission and the shipped reproduction suites.
//
// Flags override config-file values, which override the defaults in
// ScenarioConfig. Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iets/error.hpp"
#include "iets/mc_engine.hpp"
#include "iets/transceiver.hpp"

namespace iets
{

inline constexpr int kSchemaVersion = 1;

enum class OutputFormat
{
    csv,
    json,
};

inline OutputFormat format_from_string(std::string_view name)
{
    if (name == "csv")
    {
        return OutputFormat::csv;
    }
    if (name == "json")
    {
        return OutputFormat::json;
    }
    throw ConfigError("unknown output format '" + std::string(name) +
                      "' (expected csv or json)");
}

inline char const* extension(OutputFormat f)
{
    return f == OutputFormat::csv ? ".csv" : ".json";
}

class UsageError : public Error
{
public:
    using Error::Error;
};

struct RunMetadata
{
    std::uint64_t seed = 0;
    double runtime_seconds = 0.0;
    std::uint64_t redraws = 0;
    unsigned threads = 1;

    friend bool operator==(RunMetadata const&, RunMetadata const&) = default;
};

struct OutputRecord
{
    int schema_version = kSchemaVersion;
    ScenarioConfig config;
    BerCurve curve;
    RunMetadata metadata;

    friend bool operator==(OutputRecord const&, OutputRecord const&) = default;
};

//---------------------------------------------------------------------------//
// JSON mapping
//---------------------------------------------------------------------------//

inline void to_json(nlohmann::json& j, ScenarioConfig const& c)
{
    j = nlohmann::json{
        {"tx_antennas", c.tx_antennas},
        {"rx_antennas", c.rx_antennas},
        {"scheme", std::string(to_string(c.scheme))},
        {"constellation", c.constellation},
        {"snr_db_points", c.snr_db_points},
        {"channel_trials", c.channel_trials},
        {"symbol_vectors_per_trial", c.symbol_vectors_per_trial},
        {"master_seed", c.master_seed},
    };
}

// Missing fields keep their current value; unknown fields are rejected.
inline void merge_config(nlohmann::json const& j, ScenarioConfig& c)
{
    if (!j.is_object())
    {
        throw ConfigError("scenario config must be a JSON object");
    }
    try
    {
        for (auto const& [key, value] : j.items())
        {
            if (key == "tx_antennas")
                c.tx_antennas = value.get<std::size_t>();
            else if (key == "rx_antennas")
                c.rx_antennas = value.get<std::size_t>();
            else if (key == "scheme")
                c.scheme = scheme_from_string(value.get<std::string>());
            else if (key == "constellation")
                c.constellation = value.get<std::string>();
            else if (key == "snr_db_points")
                c.snr_db_points = value.get<std::vector<double>>();
            else if (key == "channel_trials")
                c.channel_trials = value.get<std::uint64_t>();
            else if (key == "symbol_vectors_per_trial")
                c.symbol_vectors_per_trial = value.get<std::uint64_t>();
            else if (key == "master_seed")
                c.master_seed = value.get<std::uint64_t>();
            else
                throw ConfigError("unknown config field '" + key + "'");
        }
    }
    catch (nlohmann::json::exception const& e)
    {
        throw ConfigError(std::string("malformed config field: ") + e.what());
    }
}

inline void from_json(nlohmann::json const& j, ScenarioConfig& c)
{
    c = ScenarioConfig{};
    merge_config(j, c);
}

inline void to_json(nlohmann::json& j, BerPoint const& p)
{
    j = nlohmann::json{
        {"snr_db", p.snr_db},     {"bits", p.bits_total},
        {"errors", p.bit_errors}, {"ber", p.ber},
        {"ci_low", p.ci_low},     {"ci_high", p.ci_high},
        {"layer_errors", p.layer_errors},
    };
}

inline void from_json(nlohmann::json const& j, BerPoint& p)
{
    j.at("snr_db").get_to(p.snr_db);
    j.at("bits").get_to(p.bits_total);
    j.at("errors").get_to(p.bit_errors);
    j.at("ber").get_to(p.ber);
    j.at("ci_low").get_to(p.ci_low);
    j.at("ci_high").get_to(p.ci_high);
    j.at("layer_errors").get_to(p.layer_errors);
}

inline void to_json(nlohmann::json& j, OutputRecord const& r)
{
    j = nlohmann::json{
        {"schema_version", r.schema_version},
        {"config", r.config},
        {"curve", r.curve.points},
        {"metadata",
         {{"seed", r.metadata.seed},
          {"runtime_seconds", r.metadata.runtime_seconds},
          {"redraws", r.metadata.redraws},
          {"threads", r.metadata.threads}}},
    };
}

inline void from_json(nlohmann::json const& j, OutputRecord& r)
{
    j.at("schema_version").get_to(r.schema_version);
    j.at("config").get_to(r.config);
    j.at("curve").get_to(r.curve.points);
    auto const& meta = j.at("metadata");
    meta.at("seed").get_to(r.metadata.seed);
    meta.at("runtime_seconds").get_to(r.metadata.runtime_seconds);
    meta.at("redraws").get_to(r.metadata.redraws);
    meta.at("threads").get_to(r.metadata.threads);
    r.curve.redraws = r.metadata.redraws;
}

//---------------------------------------------------------------------------//
// Text formats
//---------------------------------------------------------------------------//

// Shortest round-trip decimal form, independent of the global locale.
inline std::string format_number(double v)
{
    char buf[64];
    auto const res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string to_csv(BerCurve const& curve)
{
    std::string out = "snr_db,bits,errors,ber,ci_low,ci_high\n";
    for (auto const& p : curve.points)
    {
        out += format_number(p.snr_db);
        out += ',';
        out += std::to_string(p.bits_total);
        out += ',';
        out += std::to_string(p.bit_errors);
        out += ',';
        out += format_number(p.ber);
        out += ',';
        out += format_number(p.ci_low);
        out += ',';
        out += format_number(p.ci_high);
        out += '\n';
    }
    return out;
}

inline std::string to_json_text(OutputRecord const& record)
{
    return nlohmann::json(record).dump(2) + "\n";
}

inline OutputRecord parse_output_record(std::string const& text)
{
    return nlohmann::json::parse(text).get<OutputRecord>();
}

inline std::string render(OutputRecord const& record, OutputFormat format)
{
    return format == OutputFormat::csv ? to_csv(record.curve)
                                       : to_json_text(record);
}

// Destination "-" or empty writes to standard output.
inline void emit(OutputRecord const& record, OutputFormat format,
                 std::string const& destination, std::ostream& stdout_sink)
{
    std::string const text = render(record, format);
    if (destination.empty() || destination == "-")
    {
        stdout_sink << text;
        stdout_sink.flush();
        return;
    }
    std::ofstream file(destination, std::ios::binary | std::ios::trunc);
    if (!file)
    {
        throw IoError("cannot open output file", destination);
    }
    file << text;
    file.close();
    if (!file)
    {
        throw IoError("failed writing output file", destination);
    }
}

inline void emit(OutputRecord const& record, OutputFormat format,
                 std::string const& destination)
{
    emit(record, format, destination, std::cout);
}

//---------------------------------------------------------------------------//
// Scenario loading and running
//---------------------------------------------------------------------------//

inline double parse_real(std::string_view token, std::string_view what)
{
    double value = 0.0;
    auto const* first = token.data();
    auto const* last = token.data() + token.size();
    auto const res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(value))
    {
        throw UsageError("invalid " + std::string(what) + " '" +
                         std::string(token) + "'");
    }
    return value;
}

// "start:step:stop" (inclusive) or a single value.
inline std::vector<double> parse_snr_sweep(std::string const& text)
{
    std::vector<std::string_view> parts;
    std::string_view rest = text;
    for (;;)
    {
        auto const colon = rest.find(':');
        parts.push_back(rest.substr(0, colon));
        if (colon == std::string_view::npos)
        {
            break;
        }
        rest.remove_prefix(colon + 1);
    }
    if (parts.size() == 1)
    {
        return {parse_real(parts[0], "SNR value")};
    }
    if (parts.size() != 3)
    {
        throw UsageError("invalid SNR sweep '" + text +
                         "' (expected start:step:stop)");
    }
    double const start = parse_real(parts[0], "SNR start");
    double const step = parse_real(parts[1], "SNR step");
    double const stop = parse_real(parts[2], "SNR stop");
    if (!(step > 0.0) || stop < start)
    {
        throw UsageError("invalid SNR sweep '" + text +
                         "' (need step > 0 and stop >= start)");
    }
    auto const count =
        static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) +
        1;
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
    {
        out[i] = start + static_cast<double>(i) * step;
    }
    return out;
}

inline std::string read_text_file(std::string const& path)
{
    std::ifstream file(path, std::ios::binary);
    if (!file)
    {
        throw IoError("cannot read file", path);
    }
    std::ostringstream buf;
    buf << file.rdbuf();
    return buf.str();
}

inline nlohmann::json read_json_file(std::string const& path)
{
    auto const text = read_text_file(path);
    try
    {
        return nlohmann::json::parse(text);
    }
    catch (nlohmann::json::parse_error const& e)
    {
        throw ConfigError(path + ": " + e.what());
    }
}

inline std::vector<double> default_snr_sweep()
{
    return parse_snr_sweep("0:2:24");
}

inline ScenarioConfig load_config(std::string const& path)
{
    ScenarioConfig cfg;
    cfg.snr_db_points = default_snr_sweep();
    merge_config(read_json_file(path), cfg);
    cfg.validate();
    return cfg;
}

inline OutputRecord run_record(ScenarioConfig const& cfg, unsigned threads)
{
    auto const start = std::chrono::steady_clock::now();
    OutputRecord record;
    record.config = cfg;
    record.curve = run_scenario(cfg, RunOptions{threads});
    std::chrono::duration<double> const elapsed =
        std::chrono::steady_clock::now() - start;
    record.metadata = {cfg.master_seed, elapsed.count(), record.curve.redraws,
                       threads};
    return record;
}

//---------------------------------------------------------------------------//
// Reproduction suites
//---------------------------------------------------------------------------//

struct SuiteEntry
{
    std::string name;  // output file stem
    ScenarioConfig config;
};

inline std::vector<std::string> builtin_suite_names()
{
    return {"fig4a", "fig4b", "fig5a", "fig5b"};
}

inline std::optional<std::vector<SuiteEntry>>
builtin_suite(std::string_view name)
{
    SchemeKind scheme;
    std::string constellation;
    if (name == "fig4a")
        scheme = SchemeKind::gmd_sic, constellation = "qam16";
    else if (name == "fig4b")
        scheme = SchemeKind::gmd_sic, constellation = "qpsk";
    else if (name == "fig5a")
        scheme = SchemeKind::svd_eigenmode, constellation = "qam16";
    else if (name == "fig5b")
        scheme = SchemeKind::svd_eigenmode, constellation = "qpsk";
    else
        return std::nullopt;

    std::vector<SuiteEntry> out;
    for (std::size_t n = 1; n <= 4; ++n)
    {
        ScenarioConfig cfg;
        cfg.tx_antennas = n;
        cfg.rx_antennas = n;
        cfg.scheme = scheme;
        cfg.constellation = constellation;
        cfg.snr_db_points = default_snr_sweep();
        cfg.channel_trials = 5000;
        cfg.symbol_vectors_per_trial = 100;
        cfg.master_seed = 42;
        auto const dim = std::to_string(n);
        out.push_back({std::string(name) + "_" + dim + "x" + dim, cfg});
    }
    return out;
}

// Values from flags that apply on top of each suite scenario.
struct ScenarioOverrides
{
    std::optional<std::vector<double>> snr_db_points;
    std::optional<std::uint64_t> channel_trials;
    std::optional<std::uint64_t> symbol_vectors_per_trial;
    std::optional<std::uint64_t> master_seed;

    void apply(ScenarioConfig& cfg) const
    {
        if (snr_db_points) cfg.snr_db_points = *snr_db_points;
        if (channel_trials) cfg.channel_trials = *channel_trials;
        if (symbol_vectors_per_trial)
            cfg.symbol_vectors_per_trial = *symbol_vectors_per_trial;
        if (master_seed) cfg.master_seed = *master_seed;
    }
};

struct SuiteOptions
{
    std::string out_dir = ".";
    OutputFormat format = OutputFormat::csv;
    unsigned threads = 1;
    ScenarioOverrides overrides;
};

// Runs every entry: built-in suite names expand to their scenarios, anything
// else is read as a JSON config file. One output per scenario. Failures are
// collected and reported together; returns 0 when all succeed, 2 otherwise.
inline int run_suite(std::vector<std::string> const& entries,
                     SuiteOptions const& options, std::ostream& log)
{
    std::vector<std::string> failures;
    for (auto const& entry : entries)
    {
        std::vector<SuiteEntry> scenarios;
        try
        {
            if (auto suite = builtin_suite(entry))
            {
                scenarios = std::move(*suite);
            }
            else
            {
                scenarios.push_back(
                    {std::filesystem::path(entry).stem().string(),
                     load_config(entry)});
            }
        }
        catch (std::exception const& e)
        {
            failures.push_back(entry + ": " + e.what());
            continue;
        }

        for (auto& scenario : scenarios)
        {
            auto const target = (std::filesystem::path(options.out_dir) /
                                 (scenario.name + extension(options.format)))
                                    .string();
            try
            {
                options.overrides.apply(scenario.config);
                scenario.config.validate();
                auto const record = run_record(scenario.config, options.threads);
                emit(record, options.format, target);
                log << "wrote " << target << "\n";
            }
            catch (std::exception const& e)
            {
                failures.push_back(scenario.name + ": " + e.what());
            }
        }
    }
    for (auto const& f : failures)
    {
        log << "error: " << f << "\n";
    }
    return failures.empty() ? 0 : 2;
}

//---------------------------------------------------------------------------//
// Invocation
//---------------------------------------------------------------------------//

struct Invocation
{
    // Single-scenario mode.
    std::optional<ScenarioConfig> config;
    // Suite mode: built-in suite names or config file paths.
    std::vector<std::string> suite;
    std::string out;  // file (single) or directory (suite); empty = stdout / .
    OutputFormat format = OutputFormat::csv;
    unsigned threads = 1;
    ScenarioOverrides overrides;
    bool help = false;
    std::string help_text;
};

inline CLI::App make_app()
{
    return CLI::App("Monte Carlo BER simulator for GMD, SVD and ZF V-BLAST "
                    "MIMO transceivers",
                    "iets-sim");
}

// args excludes the program name.
inline Invocation parse_invocation(std::vector<std::string> const& args)
{
    CLI::App app = make_app();
    std::optional<std::size_t> tx;
    std::optional<std::size_t> rx;
    std::optional<std::string> scheme;
    std::optional<std::string> mod;
    std::optional<std::string> snr;
    std::optional<std::uint64_t> trials;
    std::optional<std::uint64_t> frames;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::string format = "csv";
    std::optional<std::string> config_path;
    std::vector<std::string> suite;
    unsigned threads = 1;

    app.add_option("--tx", tx, "transmit antennas N");
    app.add_option("--rx", rx, "receive antennas M");
    app.add_option("--scheme", scheme, "gmd-sic | svd-eigenmode | zf-vblast");
    app.add_option("--mod", mod, "qpsk | qam16");
    app.add_option("--snr", snr, "SNR sweep start:step:stop in dB (0:2:24)");
    app.add_option("--trials", trials, "channel trials per SNR point (5000)");
    app.add_option("--frames-per-trial", frames,
                   "symbol vectors per channel trial (100)");
    app.add_option("--seed", seed, "64-bit master seed (1)");
    app.add_option("--out", out,
                   "output file, or directory with --suite (stdout / .)");
    app.add_option("--format", format, "csv | json");
    app.add_option("--config", config_path, "JSON scenario config file");
    app.add_option("--suite", suite,
                   "built-in suites (fig4a fig4b fig5a fig5b) or config files");
    app.add_option("--threads", threads, "worker threads (1)");

    Invocation inv;
    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (CLI::CallForHelp const&)
    {
        inv.help = true;
        inv.help_text = app.help();
        return inv;
    }
    catch (CLI::ParseError const& e)
    {
        throw UsageError(e.what());
    }

    try
    {
        inv.format = format_from_string(format);
        if (threads < 1)
        {
            throw UsageError("--threads must be at least 1");
        }
        inv.threads = threads;
        if (snr) inv.overrides.snr_db_points = parse_snr_sweep(*snr);
        inv.overrides.channel_trials = trials;
        inv.overrides.symbol_vectors_per_trial = frames;
        inv.overrides.master_seed = seed;

        if (app.count("--suite") > 0)
        {
            if (tx || rx || scheme || mod || config_path)
            {
                throw UsageError("--suite cannot be combined with --tx, --rx, "
                                 "--scheme, --mod or --config");
            }
            inv.suite = suite;
            inv.out = out.value_or(".");
            return inv;
        }

        ScenarioConfig cfg;
        cfg.snr_db_points = default_snr_sweep();
        bool have_tx = false, have_rx = false, have_scheme = false,
             have_mod = false;
        if (config_path)
        {
            auto const j = read_json_file(*config_path);
            merge_config(j, cfg);
            have_tx = j.contains("tx_antennas");
            have_rx = j.contains("rx_antennas");
            have_scheme = j.contains("scheme");
            have_mod = j.contains("constellation");
        }
        if (tx) cfg.tx_antennas = *tx, have_tx = true;
        if (rx) cfg.rx_antennas = *rx, have_rx = true;
        if (scheme) cfg.scheme = scheme_from_string(*scheme), have_scheme = true;
        if (mod)
        {
            Constellation::by_name(*mod);
            cfg.constellation = *mod;
            have_mod = true;
        }
        inv.overrides.apply(cfg);

        std::vector<std::string> missing;
        if (!have_tx) missing.push_back("--tx");
        if (!have_rx) missing.push_back("--rx");
        if (!have_scheme) missing.push_back("--scheme");
        if (!have_mod) missing.push_back("--mod");
        if (!missing.empty())
        {
            std::string msg = "missing required flags:";
            for (auto const& m : missing)
            {
                msg += " " + m;
            }
            msg += " (or supply them through --config, or use --suite)";
            throw UsageError(msg);
        }
        cfg.validate();
        inv.config = cfg;
        inv.out = out.value_or("");
    }
    catch (UsageError const&)
    {
        throw;
    }
    catch (Error const& e)
    {
        throw UsageError(e.what());
    }
    return inv;
}

inline int run_cli(std::vector<std::string> const& args, std::ostream& out,
                   std::ostream& err)
{
    Invocation inv;
    try
    {
        inv = parse_invocation(args);
    }
    catch (UsageError const& e)
    {
        err << "usage error: " << e.what() << "\n"
            << "run with --help for the list of flags\n";
        return 1;
    }
    if (inv.help)
    {
        out << inv.help_text;
        return 0;
    }

    try
    {
        if (!inv.config)
        {
            std::filesystem::create_directories(inv.out);
            SuiteOptions options{inv.out, inv.format, inv.threads,
                                 inv.overrides};
            return run_suite(inv.suite, options, err);
        }
        auto const record = run_record(*inv.config, inv.threads);
        emit(record, inv.format, inv.out, out);
        return 0;
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace iets
