// Command-line front end: simulate, sweep, analyze, hidden-node.
//
// Exit codes: 0 ok, 2 invalid configuration or arguments, 3 input/output
// failure, 1 anything else.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cv2x/analysis.hpp"
#include "cv2x/config.hpp"
#include "cv2x/errors.hpp"
#include "cv2x/simulator.hpp"

namespace fs = std::filesystem;
using namespace cv2x;

namespace {

struct ScenarioFlags {
    std::string config;
    std::vector<std::string> sets;
    std::string seed;
    std::string out;
    std::string trace;
    bool highway = false;
    std::string vehicles;
    std::string length_m;
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& f)
{
    cmd->add_option("--config", f.config, "Config file (key = value)");
    cmd->add_option("--set", f.sets, "Override a config key, key=value (repeatable)");
    cmd->add_option("--seed", f.seed, "Run seed");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--trace", f.trace, "Use a CSV mobility trace");
    cmd->add_flag("--highway", f.highway, "Use the synthetic highway");
    cmd->add_option("--vehicles", f.vehicles, "Highway vehicle count");
    cmd->add_option("--length-m", f.length_m, "Highway length in metres");
}

RunConfig build_config(const ScenarioFlags& f)
{
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
    for (const auto& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!f.trace.empty() && f.highway)
        throw ConfigError("--trace and --highway are mutually exclusive");
    if (!f.trace.empty()) {
        set_config_value(cfg, "scenario", "trace");
        set_config_value(cfg, "trace_path", f.trace);
    }
    if (f.highway)
        set_config_value(cfg, "scenario", "highway");
    if (!f.vehicles.empty())
        set_config_value(cfg, "vehicles", f.vehicles);
    if (!f.length_m.empty())
        set_config_value(cfg, "highway_length_m", f.length_m);
    if (!f.seed.empty())
        set_config_value(cfg, "seed", f.seed);
    if (!f.out.empty())
        set_config_value(cfg, "out_dir", f.out);
    return cfg;
}

double elapsed_s(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

int cmd_simulate(const ScenarioFlags& f)
{
    RunConfig cfg = build_config(f);
    resolve(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult r = run_scenario(cfg);
    write_outputs(cfg, r, cfg.out_dir);
    std::cout << summary_text(cfg, r);
    std::fprintf(stderr, "wall time %.1f s\n", elapsed_s(t0));
    return 0;
}

std::vector<std::string> split_values(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        out.push_back(tok);
    return out;
}

int cmd_sweep(const ScenarioFlags& f, const std::string& param, const std::string& values)
{
    if (!is_config_key(param))
        throw ConfigError("unknown sweep parameter '" + param + "'");
    const std::vector<std::string> list = split_values(values);
    if (list.empty())
        throw ConfigError("--values is empty");

    // Validate every point before running any of them.
    const RunConfig base = build_config(f);
    std::vector<RunConfig> points;
    for (const auto& v : list) {
        RunConfig cfg = base;
        set_config_value(cfg, param, v);
        cfg.out_dir = (fs::path(base.out_dir) / (param + "=" + v)).string();
        resolve(cfg);
        points.push_back(cfg);
    }

    fs::create_directories(base.out_dir);
    std::ofstream summary(fs::path(base.out_dir) / "sweep.csv");
    std::ofstream bins(fs::path(base.out_dir) / "sweep_prr_by_distance.csv");
    if (!summary || !bins)
        throw InputError("cannot write sweep files in " + base.out_dir);
    summary << param << ",prr_pooled,ud_99_s,ud_99.9_s,reselections,mean_neighbors\n";
    bins << param << ",bin_center_m,prr,samples\n";

    for (std::size_t k = 0; k < points.size(); ++k) {
        const RunConfig& cfg = points[k];
        const auto t0 = std::chrono::steady_clock::now();
        const RunResult r = run_scenario(cfg);
        write_outputs(cfg, r, cfg.out_dir);
        auto pct = [&](double q) { return r.ud.count() ? detail::format("%.3f", r.ud.percentile(q)) : "nan"; };
        summary << list[k] << ',' << detail::format("%.6f", r.prr.pooled()) << ',' << pct(0.99) << ','
                << pct(0.999) << ',' << r.reselections << ',' << detail::format("%.4f", r.mean_neighbors())
                << '\n';
        for (std::size_t b = 0; b < r.prr.bins(); ++b)
            bins << list[k] << ',' << detail::format("%.1f", r.prr.bin_center(b)) << ','
                 << detail::format("%.6f", r.prr.prr(b)) << ',' << r.prr.total(b) << '\n';
        std::printf("%s=%s prr_pooled=%.6f\n", param.c_str(), list[k].c_str(), r.prr.pooled());
        std::fprintf(stderr, "%s=%s wall time %.1f s\n", param.c_str(), list[k].c_str(), elapsed_s(t0));
    }
    return 0;
}

struct AnalyzeFlags {
    int n_min = 5;
    int n_max = 15;
    double p_keep = 0.4;
    int t_sense_ms = 1000;
    int beacon_period_ms = 100;
    double eps = 1e-6;
    std::string tbe_form = "uniform";
    std::string out = ".";
};

int cmd_analyze(const AnalyzeFlags& a)
{
    const TbeForm form = parse_tbe_form(a.tbe_form);
    if (a.beacon_period_ms < 1)
        throw ConfigError("beacon period must be >= 1 ms");
    if (a.t_sense_ms < a.beacon_period_ms || a.t_sense_ms % a.beacon_period_ms != 0)
        throw ConfigError("t_sense_ms must be a positive multiple of the beacon period");
    const int n_star = a.t_sense_ms / a.beacon_period_ms;

    const HoldTimeDistribution dist = tbc_distribution(a.n_min, a.n_max, a.p_keep, a.eps, form);
    const ReallocationProbability pr = reallocation_probability(dist, n_star);
    const std::vector<double> ccdf = tbc_ccdf(dist);

    fs::create_directories(a.out);
    std::ofstream out(fs::path(a.out) / "tbc_ccdf.csv");
    if (!out)
        throw InputError("cannot write " + (fs::path(a.out) / "tbc_ccdf.csv").string());
    out << "n,seconds,ccdf\n";
    for (std::size_t n = 0; n < ccdf.size(); ++n)
        out << n << ',' << detail::format("%.3f", n * a.beacon_period_ms / 1000.0) << ','
            << detail::format("%.12g", ccdf[n]) << '\n';

    std::printf("P_r: %.6f\n", pr.value);
    std::printf("P_r_error_bound: %.3g\n", pr.error_bound);
    std::printf("n_star: %d\n", n_star);
    std::printf("mean_hold_periods: %.6f\n", dist.mean());
    std::printf("support_periods: %zu\n", dist.n_max());
    std::printf("truncation_mass: %.3g\n", dist.truncation_mass);
    std::printf("terms: %d\n", dist.terms);
    return 0;
}

int cmd_hidden_node(const ScenarioFlags& f)
{
    RunConfig cfg = build_config(f);
    resolve(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const HiddenNodeAccumulator acc = run_hidden_node(cfg);
    write_hidden_node(cfg, acc, cfg.out_dir);
    std::printf("hidden_node_probability: %.6f\n", acc.probability());
    std::printf("instants: %llu\n", static_cast<unsigned long long>(acc.instants()));
    std::fprintf(stderr, "wall time %.1f s\n", elapsed_s(t0));
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"C-V2X Mode 4 simulator and SPS analysis"};
    app.require_subcommand(1);

    ScenarioFlags sim_flags;
    auto* simulate = app.add_subcommand("simulate", "Run one scenario");
    add_scenario_flags(simulate, sim_flags);

    ScenarioFlags sweep_flags;
    std::string param, values;
    auto* sweep = app.add_subcommand("sweep", "Run one scenario per value of a config key");
    add_scenario_flags(sweep, sweep_flags);
    sweep->add_option("--param", param, "Config key to sweep")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required();

    AnalyzeFlags an;
    auto* analyze = app.add_subcommand("analyze", "Closed-form hold-time statistics");
    analyze->add_option("--n-min", an.n_min, "Minimum reselection counter")->capture_default_str();
    analyze->add_option("--n-max", an.n_max, "Maximum reselection counter")->capture_default_str();
    analyze->add_option("--p-keep", an.p_keep, "Keep probability")->capture_default_str();
    analyze->add_option("--t-sense-ms", an.t_sense_ms, "Sensing window")->capture_default_str();
    analyze->add_option("--beacon-period-ms", an.beacon_period_ms, "Beacon period")->capture_default_str();
    analyze->add_option("--eps", an.eps, "Truncation bound on the geometric tail")->capture_default_str();
    analyze->add_option("--tbe-form", an.tbe_form, "uniform or one_over_n")->capture_default_str();
    analyze->add_option("--out", an.out, "Directory for tbc_ccdf.csv")->capture_default_str();

    ScenarioFlags hn_flags;
    auto* hidden = app.add_subcommand("hidden-node", "Hidden-node probability (mobility and channel only)");
    add_scenario_flags(hidden, hn_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*simulate)
            return cmd_simulate(sim_flags);
        if (*sweep)
            return cmd_sweep(sweep_flags, param, values);
        if (*analyze)
            return cmd_analyze(an);
        if (*hidden)
            return cmd_hidden_node(hn_flags);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
