#pragma once

// Run configuration: `key = value` lines, '#' starts a comment. Unknown keys
// are rejected. `resolve()` derives the grid from the MCS, fills the `auto`
// values and validates everything; `to_text()` echoes every key so an
// output directory always carries the full configuration.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "cv2x/analysis.hpp"
#include "cv2x/channel.hpp"
#include "cv2x/errors.hpp"
#include "cv2x/grid.hpp"
#include "cv2x/mobility.hpp"
#include "cv2x/mode4.hpp"
#include "cv2x/phy.hpp"

namespace cv2x {

enum class Allocation { mode4, random };
enum class Scenario { highway, trace };

struct RunConfig {
    int mcs = 7;
    int beacon_period_ms = 100;
    std::optional<double> sinr_min_db;  // default from the MCS
    GridConfig grid = make_grid_config(7);

    ChannelParams channel;
    double ibe_attenuation_db = 25.0;
    std::string obstacle_map;

    Mode4Params mode4;
    Allocation allocation = Allocation::mode4;

    Scenario scenario = Scenario::highway;
    HighwayConfig highway;
    std::string trace_path;
    double trace_max_gap_s = 1.5;
    double awareness_m = 200.0;

    std::optional<double> duration_s;  // total simulated time; default warm-up + 30 s
    std::optional<double> warmup_s;    // default t_sense + n_max beacon periods
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    double prr_bin_m = 10.0;
    int hold_horizon_periods = 100;
    bool event_log = false;

    int hidden_node_snapshots = 10;
    double hidden_node_bin_m = 10.0;

    TbeForm tbe_form = TbeForm::uniform;
    double eps = 1e-6;

    double warmup() const
    {
        return warmup_s.value_or(mode4.t_sense_ms / 1000.0 + mode4.n_max * beacon_period_ms / 1000.0);
    }
    double duration() const { return duration_s.value_or(warmup() + 30.0); }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string fmt(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double to_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto s = trim(v);
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(out))
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

inline long long to_int(const std::string& key, const std::string& v)
{
    long long out = 0;
    const auto s = trim(v);
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

inline int to_int32(const std::string& key, const std::string& v)
{
    const long long x = to_int(key, v);
    if (x < -2147483647LL || x > 2147483647LL)
        throw ConfigError(key + ": value out of range");
    return static_cast<int>(x);
}

inline bool to_bool(const std::string& key, const std::string& v)
{
    const auto s = trim(v);
    if (s == "true" || s == "1" || s == "yes")
        return true;
    if (s == "false" || s == "0" || s == "no")
        return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct KeyDef {
    const char* name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
std::string opt(const std::optional<T>& v)
{
    return v ? fmt(*v) : "auto";
}

inline const std::vector<KeyDef>& key_table()
{
    using C = RunConfig;
    using S = const std::string&;
    static const std::vector<KeyDef> table = {
        // grid
        {"mcs", [](C& c, S v) { c.mcs = to_int32("mcs", v); }, [](const C& c) { return std::to_string(c.mcs); }},
        {"beacon_period_ms", [](C& c, S v) { c.beacon_period_ms = to_int32("beacon_period_ms", v); },
         [](const C& c) { return std::to_string(c.beacon_period_ms); }},
        {"sinr_min_db",
         [](C& c, S v) {
             if (trim(v) == "auto")
                 c.sinr_min_db.reset();
             else
                 c.sinr_min_db = to_double("sinr_min_db", v);
         },
         [](const C& c) { return opt(c.sinr_min_db); }},
        {"bandwidth_mhz",
         [](C&, S v) {
             if (to_double("bandwidth_mhz", v) != 10.0)
                 throw ConfigError("bandwidth_mhz: only 10 is supported");
         },
         [](const C&) { return std::string("10"); }},
        {"subchannel_size_rb_pairs",
         [](C&, S v) {
             if (to_int("subchannel_size_rb_pairs", v) != 10)
                 throw ConfigError("subchannel_size_rb_pairs: only 10 is supported");
         },
         [](const C&) { return std::string("10"); }},
        // channel / phy
        {"carrier_ghz", [](C& c, S v) { c.channel.carrier_ghz = to_double("carrier_ghz", v); },
         [](const C& c) { return fmt(c.channel.carrier_ghz); }},
        {"shadow_sigma_los_db", [](C& c, S v) { c.channel.shadow_sigma_los_db = to_double("shadow_sigma_los_db", v); },
         [](const C& c) { return fmt(c.channel.shadow_sigma_los_db); }},
        {"shadow_sigma_nlos_db",
         [](C& c, S v) { c.channel.shadow_sigma_nlos_db = to_double("shadow_sigma_nlos_db", v); },
         [](const C& c) { return fmt(c.channel.shadow_sigma_nlos_db); }},
        {"decorr_dist_m", [](C& c, S v) { c.channel.decorr_dist_m = to_double("decorr_dist_m", v); },
         [](const C& c) { return fmt(c.channel.decorr_dist_m); }},
        {"tx_power_dbm", [](C& c, S v) { c.channel.tx_power_dbm = to_double("tx_power_dbm", v); },
         [](const C& c) { return fmt(c.channel.tx_power_dbm); }},
        {"antenna_gain_db", [](C& c, S v) { c.channel.antenna_gain_db = to_double("antenna_gain_db", v); },
         [](const C& c) { return fmt(c.channel.antenna_gain_db); }},
        {"noise_figure_db", [](C& c, S v) { c.channel.noise_figure_db = to_double("noise_figure_db", v); },
         [](const C& c) { return fmt(c.channel.noise_figure_db); }},
        {"antenna_height_m", [](C& c, S v) { c.channel.antenna_height_m = to_double("antenna_height_m", v); },
         [](const C& c) { return fmt(c.channel.antenna_height_m); }},
        {"min_distance_m", [](C& c, S v) { c.channel.min_distance_m = to_double("min_distance_m", v); },
         [](const C& c) { return fmt(c.channel.min_distance_m); }},
        {"interference_range_m",
         [](C& c, S v) { c.channel.interference_range_m = to_double("interference_range_m", v); },
         [](const C& c) { return fmt(c.channel.interference_range_m); }},
        {"ibe_attenuation_db",
         [](C& c, S v) {
             c.ibe_attenuation_db = trim(v) == "inf" ? HUGE_VAL : to_double("ibe_attenuation_db", v);
         },
         [](const C& c) { return std::isinf(c.ibe_attenuation_db) ? std::string("inf") : fmt(c.ibe_attenuation_db); }},
        {"obstacle_map", [](C& c, S v) { c.obstacle_map = trim(v); }, [](const C& c) { return c.obstacle_map; }},
        // mode 4
        {"allocation",
         [](C& c, S v) {
             const auto s = trim(v);
             if (s == "mode4")
                 c.allocation = Allocation::mode4;
             else if (s == "random")
                 c.allocation = Allocation::random;
             else
                 throw ConfigError("allocation must be mode4 or random, got '" + v + "'");
         },
         [](const C& c) { return std::string(c.allocation == Allocation::mode4 ? "mode4" : "random"); }},
        {"t_sense_ms", [](C& c, S v) { c.mode4.t_sense_ms = to_int32("t_sense_ms", v); },
         [](const C& c) { return std::to_string(c.mode4.t_sense_ms); }},
        {"p_th_dbm", [](C& c, S v) { c.mode4.p_th_dbm = to_double("p_th_dbm", v); },
         [](const C& c) { return fmt(c.mode4.p_th_dbm); }},
        {"r_sel", [](C& c, S v) { c.mode4.r_sel = to_double("r_sel", v); },
         [](const C& c) { return fmt(c.mode4.r_sel); }},
        {"t1", [](C& c, S v) { c.mode4.t1 = to_int32("t1", v); },
         [](const C& c) { return std::to_string(c.mode4.t1); }},
        {"t2", [](C& c, S v) { c.mode4.t2 = to_int32("t2", v); },
         [](const C& c) { return std::to_string(c.mode4.t2); }},
        {"n_min", [](C& c, S v) { c.mode4.n_min = to_int32("n_min", v); },
         [](const C& c) { return std::to_string(c.mode4.n_min); }},
        {"n_max", [](C& c, S v) { c.mode4.n_max = to_int32("n_max", v); },
         [](const C& c) { return std::to_string(c.mode4.n_max); }},
        {"p_keep", [](C& c, S v) { c.mode4.p_keep = to_double("p_keep", v); },
         [](const C& c) { return fmt(c.mode4.p_keep); }},
        {"nonstandard", [](C& c, S v) { c.mode4.nonstandard = to_bool("nonstandard", v); },
         [](const C& c) { return std::string(c.mode4.nonstandard ? "true" : "false"); }},
        {"nr_basis",
         [](C& c, S v) {
             const auto s = trim(v);
             if (s == "total")
                 c.mode4.nr_basis = NrBasis::total;
             else if (s == "window")
                 c.mode4.nr_basis = NrBasis::window;
             else
                 throw ConfigError("nr_basis must be total or window, got '" + v + "'");
         },
         [](const C& c) { return std::string(c.mode4.nr_basis == NrBasis::total ? "total" : "window"); }},
        // mobility
        {"scenario",
         [](C& c, S v) {
             const auto s = trim(v);
             if (s == "highway")
                 c.scenario = Scenario::highway;
             else if (s == "trace")
                 c.scenario = Scenario::trace;
             else
                 throw ConfigError("scenario must be highway or trace, got '" + v + "'");
         },
         [](const C& c) { return std::string(c.scenario == Scenario::highway ? "highway" : "trace"); }},
        {"trace_path", [](C& c, S v) { c.trace_path = trim(v); }, [](const C& c) { return c.trace_path; }},
        {"trace_max_gap_s", [](C& c, S v) { c.trace_max_gap_s = to_double("trace_max_gap_s", v); },
         [](const C& c) { return fmt(c.trace_max_gap_s); }},
        {"highway_length_m", [](C& c, S v) { c.highway.length_m = to_double("highway_length_m", v); },
         [](const C& c) { return fmt(c.highway.length_m); }},
        {"lanes_per_direction", [](C& c, S v) { c.highway.lanes_per_direction = to_int32("lanes_per_direction", v); },
         [](const C& c) { return std::to_string(c.highway.lanes_per_direction); }},
        {"vehicles", [](C& c, S v) { c.highway.target_vehicle_count = to_int32("vehicles", v); },
         [](const C& c) { return std::to_string(c.highway.target_vehicle_count); }},
        {"lane_width_m", [](C& c, S v) { c.highway.lane_width_m = to_double("lane_width_m", v); },
         [](const C& c) { return fmt(c.highway.lane_width_m); }},
        {"speed_mean_kmh",
         [](C& c, S v) {
             std::vector<double> speeds;
             std::stringstream ss(v);
             std::string tok;
             while (std::getline(ss, tok, ','))
                 speeds.push_back(to_double("speed_mean_kmh", tok));
             c.highway.speed_mean_kmh = speeds;
         },
         [](const C& c) {
             std::string s;
             for (std::size_t i = 0; i < c.highway.speed_mean_kmh.size(); ++i)
                 s += (i ? "," : "") + fmt(c.highway.speed_mean_kmh[i]);
             return s;
         }},
        {"speed_sigma_frac", [](C& c, S v) { c.highway.speed_sigma_frac = to_double("speed_sigma_frac", v); },
         [](const C& c) { return fmt(c.highway.speed_sigma_frac); }},
        {"wrap_around", [](C& c, S v) { c.highway.wrap_around = to_bool("wrap_around", v); },
         [](const C& c) { return std::string(c.highway.wrap_around ? "true" : "false"); }},
        {"awareness_m", [](C& c, S v) { c.awareness_m = to_double("awareness_m", v); },
         [](const C& c) { return fmt(c.awareness_m); }},
        // run
        {"duration_s",
         [](C& c, S v) {
             if (trim(v) == "auto")
                 c.duration_s.reset();
             else
                 c.duration_s = to_double("duration_s", v);
         },
         [](const C& c) { return fmt(c.duration()); }},
        {"warmup_s",
         [](C& c, S v) {
             if (trim(v) == "auto")
                 c.warmup_s.reset();
             else
                 c.warmup_s = to_double("warmup_s", v);
         },
         [](const C& c) { return fmt(c.warmup()); }},
        {"seed",
         [](C& c, S v) {
             const auto s = trim(v);
             std::uint64_t x = 0;
             auto res = std::from_chars(s.data(), s.data() + s.size(), x);
             if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                 throw ConfigError("seed: expected a non-negative integer, got '" + v + "'");
             c.seed = x;
         },
         [](const C& c) { return std::to_string(c.seed); }},
        {"out_dir", [](C& c, S v) { c.out_dir = trim(v); }, [](const C& c) { return c.out_dir; }},
        {"prr_bin_m", [](C& c, S v) { c.prr_bin_m = to_double("prr_bin_m", v); },
         [](const C& c) { return fmt(c.prr_bin_m); }},
        {"hold_horizon_periods", [](C& c, S v) { c.hold_horizon_periods = to_int32("hold_horizon_periods", v); },
         [](const C& c) { return std::to_string(c.hold_horizon_periods); }},
        {"event_log", [](C& c, S v) { c.event_log = to_bool("event_log", v); },
         [](const C& c) { return std::string(c.event_log ? "true" : "false"); }},
        {"hidden_node_snapshots",
         [](C& c, S v) { c.hidden_node_snapshots = to_int32("hidden_node_snapshots", v); },
         [](const C& c) { return std::to_string(c.hidden_node_snapshots); }},
        {"hidden_node_bin_m", [](C& c, S v) { c.hidden_node_bin_m = to_double("hidden_node_bin_m", v); },
         [](const C& c) { return fmt(c.hidden_node_bin_m); }},
        // analysis
        {"tbe_form", [](C& c, S v) { c.tbe_form = parse_tbe_form(trim(v)); },
         [](const C& c) { return std::string(to_string(c.tbe_form)); }},
        {"eps", [](C& c, S v) { c.eps = to_double("eps", v); }, [](const C& c) { return fmt(c.eps); }},
    };
    return table;
}

}  // namespace detail

inline bool is_config_key(const std::string& key)
{
    for (const auto& k : detail::key_table())
        if (key == k.name)
            return true;
    return false;
}

inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& k : detail::key_table()) {
        if (key == k.name) {
            k.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

/// Derives the grid and checks every section. Call after all values are set.
inline void resolve(RunConfig& cfg)
{
    cfg.grid = make_grid_config(cfg.mcs, cfg.beacon_period_ms);
    if (cfg.sinr_min_db)
        cfg.grid.sinr_min_db = *cfg.sinr_min_db;
    else if (double g = 0.0; default_sinr_min_db(cfg.mcs, g))
        cfg.grid.sinr_min_db = g;
    else
        throw ConfigError("mcs " + std::to_string(cfg.mcs) + " has no default threshold; set sinr_min_db");
    cfg.grid.validate();
    cfg.channel.validate();
    cfg.mode4.validate(cfg.grid);
    if (std::isnan(cfg.ibe_attenuation_db) || cfg.ibe_attenuation_db < 0.0)
        throw ConfigError("ibe_attenuation_db must be >= 0");
    if (cfg.scenario == Scenario::highway)
        cfg.highway.validate();
    else if (cfg.trace_path.empty())
        throw ConfigError("scenario = trace needs trace_path");
    if (!(cfg.trace_max_gap_s > 0.0))
        throw ConfigError("trace_max_gap_s must be > 0");
    if (!(cfg.awareness_m > 0.0) || cfg.awareness_m > cfg.channel.interference_range_m)
        throw ConfigError("awareness_m must be in (0, interference_range_m]");
    if (!(cfg.prr_bin_m > 0.0))
        throw ConfigError("prr_bin_m must be > 0");
    if (!(cfg.warmup() >= 0.0))
        throw ConfigError("warmup_s must be >= 0");
    if (!(cfg.duration() > cfg.warmup()))
        throw ConfigError("duration_s must exceed the warm-up (" + detail::fmt(cfg.warmup()) + " s)");
    if (cfg.hold_horizon_periods < 1)
        throw ConfigError("hold_horizon_periods must be >= 1");
    if (cfg.hidden_node_snapshots < 1)
        throw ConfigError("hidden_node_snapshots must be >= 1");
    if (!(cfg.hidden_node_bin_m > 0.0))
        throw ConfigError("hidden_node_bin_m must be > 0");
    if (!(cfg.eps > 0.0 && cfg.eps < 1.0))
        throw ConfigError("eps must be in (0, 1)");
}

/// Applies the lines of a config file on top of `cfg`.
inline void parse_config_into(RunConfig& cfg, std::istream& in, const std::string& name = "<config>")
{
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            set_config_value(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(name + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline RunConfig parse_config(std::istream& in, const std::string& name = "<config>")
{
    RunConfig cfg;
    parse_config_into(cfg, in, name);
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open config " + path);
    return parse_config(in, path);
}

/// Every key with its resolved value, one `key = value` per line.
inline std::string to_text(const RunConfig& cfg)
{
    std::string out;
    for (const auto& k : detail::key_table())
        out += std::string(k.name) + " = " + k.get(cfg) + "\n";
    return out;
}

}  // namespace cv2x
