#pragma once

// Vehicle positions per beacon period: CSV trace ingestion and a synthetic
// multi-lane highway with constant per-vehicle speeds.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cv2x/errors.hpp"
#include "cv2x/geometry.hpp"
#include "cv2x/rng.hpp"

namespace cv2x {

struct TraceRecord {
    double time_s = 0.0;
    VehicleId vehicle_id = 0;
    double x_m = 0.0;
    double y_m = 0.0;
};

/// `time_s,vehicle_id,x_m,y_m` per line; an optional non-numeric header
/// line; blank lines and '#' comments ignored.
inline std::vector<TraceRecord> parse_trace(std::istream& in, const std::string& name = "<trace>")
{
    std::vector<TraceRecord> out;
    std::string line;
    int lineno = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++lineno;
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#')
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ','))
            fields.push_back(tok);
        auto number = [&](const std::string& s, double& v) {
            try {
                std::size_t used = 0;
                v = std::stod(s, &used);
                return s.find_first_not_of(" \t\r", used) == std::string::npos && std::isfinite(v);
            } catch (const std::exception&) {
                return false;
            }
        };
        double t = 0, id = 0, x = 0, y = 0;
        const bool ok = fields.size() == 4 && number(fields[0], t) && number(fields[1], id) && number(fields[2], x) &&
                        number(fields[3], y);
        if (!ok) {
            if (first_content && fields.size() == 4) {
                first_content = false;  // header
                continue;
            }
            throw ParseError(name, lineno, "expected time_s,vehicle_id,x_m,y_m");
        }
        first_content = false;
        if (id != std::floor(id))
            throw ParseError(name, lineno, "vehicle_id must be an integer");
        out.push_back({t, static_cast<VehicleId>(id), x, y});
    }
    return out;
}

/// Samples a trace every beacon period by linear interpolation. A vehicle is
/// present at an instant only if it has a record at that instant or two
/// records bracketing it no more than `max_gap_s` apart.
inline std::vector<ScenarioSnapshot> snapshots_from_trace(std::vector<TraceRecord> records, int beacon_period_ms,
                                                          double max_gap_s = 1.5, const std::string& name = "<trace>")
{
    if (records.empty())
        throw InputError(name + ": trace has no records");
    std::map<VehicleId, std::vector<TraceRecord>> per_vehicle;
    double t_min = records.front().time_s, t_max = records.front().time_s;
    for (const auto& r : records) {
        per_vehicle[r.vehicle_id].push_back(r);
        t_min = std::min(t_min, r.time_s);
        t_max = std::max(t_max, r.time_s);
    }
    for (auto& [id, list] : per_vehicle) {
        std::stable_sort(list.begin(), list.end(),
                         [](const TraceRecord& a, const TraceRecord& b) { return a.time_s < b.time_s; });
    }

    const double step = beacon_period_ms / 1000.0;
    const auto count = static_cast<long>(std::floor((t_max - t_min) / step + 1e-9)) + 1;
    std::vector<ScenarioSnapshot> out(static_cast<std::size_t>(count));
    for (long k = 0; k < count; ++k)
        out[k].time_s = t_min + k * step;

    for (const auto& [id, list] : per_vehicle) {
        std::size_t seg = 0;
        for (long k = 0; k < count; ++k) {
            const double t = out[k].time_s;
            while (seg + 1 < list.size() && list[seg + 1].time_s < t - 1e-9)
                ++seg;
            std::optional<Point> pos;
            for (std::size_t m = seg; m < list.size() && list[m].time_s <= t + 1e-9; ++m) {
                if (std::abs(list[m].time_s - t) <= 1e-9)
                    pos = Point{list[m].x_m, list[m].y_m};
            }
            if (!pos && seg + 1 < list.size() && list[seg].time_s < t && list[seg + 1].time_s > t &&
                list[seg + 1].time_s - list[seg].time_s <= max_gap_s + 1e-9) {
                const auto& a = list[seg];
                const auto& b = list[seg + 1];
                const double w = (t - a.time_s) / (b.time_s - a.time_s);
                pos = Point{a.x_m + w * (b.x_m - a.x_m), a.y_m + w * (b.y_m - a.y_m)};
            }
            if (pos) {
                out[k].ids.push_back(id);
                out[k].positions.push_back(*pos);
            }
        }
    }
    return out;
}

inline std::vector<ScenarioSnapshot> load_trace(const std::string& path, int beacon_period_ms, double max_gap_s = 1.5)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open trace " + path);
    return snapshots_from_trace(parse_trace(in, path), beacon_period_ms, max_gap_s, path);
}

struct HighwayConfig {
    double length_m = 16000.0;
    int lanes_per_direction = 3;
    int target_vehicle_count = 2015;
    double lane_width_m = 4.0;
    // Per lane, outermost first; lanes beyond the list reuse the last value.
    std::vector<double> speed_mean_kmh{70.0, 90.0, 110.0};
    double speed_sigma_frac = 0.1;
    bool wrap_around = true;

    void validate() const
    {
        if (!(length_m > 0.0) || lanes_per_direction < 1 || target_vehicle_count < 1)
            throw ConfigError("highway length, lanes and vehicle count must be positive");
        if (speed_mean_kmh.empty() || std::any_of(speed_mean_kmh.begin(), speed_mean_kmh.end(),
                                                  [](double v) { return !(v > 0.0); }))
            throw ConfigError("highway speeds must be positive");
        if (!(speed_sigma_frac >= 0.0) || speed_sigma_frac >= 1.0 / 3.0)
            throw ConfigError("speed_sigma_frac must be in [0, 1/3)");
    }
};

struct HighwayState {
    std::vector<VehicleId> ids;
    std::vector<Point> positions;
    std::vector<double> velocity_mps;  // signed along x
};

/// Uniform placement per lane (a Poisson process conditioned on its count)
/// and speeds from a Gaussian truncated at +-3 sigma.
inline HighwayState make_highway(const HighwayConfig& cfg, Rng& rng)
{
    cfg.validate();
    HighwayState st;
    const int lanes = 2 * cfg.lanes_per_direction;
    for (int v = 0; v < cfg.target_vehicle_count; ++v) {
        const int lane = v % lanes;
        const bool forward = lane < cfg.lanes_per_direction;
        const int k = forward ? lane : lane - cfg.lanes_per_direction;  // 0 = outermost
        const double mean_kmh = cfg.speed_mean_kmh[std::min<std::size_t>(k, cfg.speed_mean_kmh.size() - 1)];
        const double mean = mean_kmh / 3.6;
        const double sigma = cfg.speed_sigma_frac * mean;
        double speed = mean;
        if (sigma > 0.0) {
            do {
                speed = mean + sigma * rng.gaussian();
            } while (std::abs(speed - mean) > 3.0 * sigma);
        }
        const double y = (cfg.lanes_per_direction - k - 0.5) * cfg.lane_width_m;
        st.ids.push_back(v);
        st.positions.push_back({rng.uniform(0.0, cfg.length_m), forward ? y : -y});
        st.velocity_mps.push_back(forward ? speed : -speed);
    }
    return st;
}

inline void step_highway(const HighwayConfig& cfg, HighwayState& st, double dt_s)
{
    if (!(dt_s > 0.0))
        throw std::invalid_argument("dt must be positive");
    for (std::size_t i = 0; i < st.positions.size(); ++i) {
        double x = st.positions[i].x + st.velocity_mps[i] * dt_s;
        if (cfg.wrap_around) {
            x = std::fmod(x, cfg.length_m);
            if (x < 0.0)
                x += cfg.length_m;
        }
        st.positions[i].x = x;
    }
}

inline ScenarioSnapshot highway_snapshot(const HighwayConfig& cfg, const HighwayState& st, double time_s)
{
    ScenarioSnapshot s;
    s.time_s = time_s;
    s.ids = st.ids;
    s.positions = st.positions;
    s.wrap_length_m = cfg.wrap_around ? cfg.length_m : 0.0;
    return s;
}

/// Ids of all other vehicles within `awareness_m` (inclusive), sorted.
inline std::vector<VehicleId> neighbors(const ScenarioSnapshot& snap, std::size_t vehicle, double awareness_m)
{
    if (!(awareness_m > 0.0))
        throw std::invalid_argument("awareness range must be positive");
    std::vector<VehicleId> out;
    for (std::size_t j = 0; j < snap.size(); ++j)
        if (j != vehicle && snap.distance(vehicle, j) <= awareness_m)
            out.push_back(snap.ids[j]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace cv2x
