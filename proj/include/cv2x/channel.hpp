#pragma once

// Link budget: WINNER+ B1 pathloss with LOS/NLOS, AR(1) correlated
// log-normal shadowing, and the per-link realization kept across beacon
// periods.
//
// Pathloss (d in m, fc in GHz, effective antenna heights h' = h - 1 m):
//   breakpoint     d_BP = 4 h'_tx h'_rx fc / c
//   LOS, d < d_BP  PL = 22.7 log10(d) + 41.0 + 20 log10(fc / 5)
//   LOS, d >= d_BP PL = 40 log10(d) + 9.45 - 17.3 log10(h'_tx) - 17.3 log10(h'_rx) + 2.7 log10(fc / 5)
//   NLOS           PL = min(PL_n(d1, d2), PL_n(d2, d1)), floored at PL_LOS(|d|)
//                  PL_n(dk, dl) = PL_LOS(dk) + 17.9 - 12.5 n + 10 n log10(dl) + 3 log10(fc / 5)
//                  n = max(2.8 - 0.0024 dk, 1.84)
// where d1, d2 are the legs |dx|, |dy| of the right triangle between the
// two ends. Distances (and legs) are clamped to at least 3 m.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cv2x/errors.hpp"
#include "cv2x/geometry.hpp"
#include "cv2x/grid.hpp"
#include "cv2x/rng.hpp"

namespace cv2x {

struct ChannelParams {
    double carrier_ghz = 5.9;
    double shadow_sigma_los_db = 3.0;
    double shadow_sigma_nlos_db = 4.0;
    double decorr_dist_m = 25.0;
    double tx_power_dbm = 23.0;
    double antenna_gain_db = 3.0;
    double noise_figure_db = 9.0;
    double antenna_height_m = 1.5;
    double min_distance_m = 3.0;
    // Links longer than this carry no power at all.
    double interference_range_m = 1500.0;

    void validate() const
    {
        if (!(shadow_sigma_los_db >= 0.0) || !(shadow_sigma_nlos_db >= 0.0))
            throw ConfigError("shadowing sigma must be >= 0");
        if (!(decorr_dist_m > 0.0))
            throw ConfigError("decorr_dist_m must be > 0");
        if (!(carrier_ghz > 0.0))
            throw ConfigError("carrier_ghz must be > 0");
        if (!(antenna_height_m > 1.0))
            throw ConfigError("antenna_height_m must exceed 1 m");
        if (!(interference_range_m > 0.0))
            throw ConfigError("interference_range_m must be > 0");
    }
};

inline double dbm_to_mw(double dbm) { return std::exp(dbm * (std::log(10.0) / 10.0)); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
inline double db_to_linear(double db) { return dbm_to_mw(db); }

/// Thermal noise over the beacon allocation: subchannels_per_br x 10 RB
/// pairs x 180 kHz.
inline double noise_power_dbm(const ChannelParams& params, const GridConfig& grid)
{
    const double bandwidth_hz = grid.subchannels_per_br * 10.0 * 180e3;
    return -174.0 + 10.0 * std::log10(bandwidth_hz) + params.noise_figure_db;
}

inline double breakpoint_distance_m(const ChannelParams& params)
{
    const double h_eff = params.antenna_height_m - 1.0;
    return 4.0 * h_eff * h_eff * params.carrier_ghz * 1e9 / 299792458.0;
}

inline double pathloss_los_db(const ChannelParams& params, double distance_m)
{
    const double d = std::max(distance_m, params.min_distance_m);
    const double fc = params.carrier_ghz;
    if (d < breakpoint_distance_m(params))
        return 22.7 * std::log10(d) + 41.0 + 20.0 * std::log10(fc / 5.0);
    const double h_eff = params.antenna_height_m - 1.0;
    return 40.0 * std::log10(d) + 9.45 - 2.0 * 17.3 * std::log10(h_eff) + 2.7 * std::log10(fc / 5.0);
}

namespace detail {

inline double b1_nlos_leg(const ChannelParams& params, double dk, double dl)
{
    const double n = std::max(2.8 - 0.0024 * dk, 1.84);
    return pathloss_los_db(params, dk) + 17.9 - 12.5 * n + 10.0 * n * std::log10(dl) +
           3.0 * std::log10(params.carrier_ghz / 5.0);
}

}  // namespace detail

inline double pathloss_nlos_db(const ChannelParams& params, double d1, double d2)
{
    const double a = std::max(std::abs(d1), params.min_distance_m);
    const double b = std::max(std::abs(d2), params.min_distance_m);
    const double nlos = std::min(detail::b1_nlos_leg(params, a, b), detail::b1_nlos_leg(params, b, a));
    return std::max(nlos, pathloss_los_db(params, std::hypot(d1, d2)));
}

/// Distance-only form; NLOS uses equal legs d/sqrt(2).
inline double pathloss_db(const ChannelParams& params, double distance_m, bool los)
{
    if (los)
        return pathloss_los_db(params, distance_m);
    const double leg = distance_m / std::sqrt(2.0);
    return pathloss_nlos_db(params, leg, leg);
}

/// Shadow sign convention: positive values attenuate.
inline double rx_power_dbm(const ChannelParams& params, double pathloss_db, double shadow_db)
{
    return params.tx_power_dbm + 2.0 * params.antenna_gain_db - pathloss_db - shadow_db;
}

/// One AR(1) step of the shadowing process indexed by displacement.
inline double shadow_step(double shadow_db, double moved_m, double decorr_dist_m, double sigma_db, Rng& rng)
{
    if (moved_m <= 0.0)
        return shadow_db;
    const double rho = std::exp(-moved_m / decorr_dist_m);
    return rho * shadow_db + std::sqrt(1.0 - rho * rho) * sigma_db * rng.gaussian();
}

struct ObstacleMap {
    std::vector<std::vector<Point>> polygons;

    bool empty() const { return polygons.empty(); }
};

/// One polygon per line, `x,y,x,y,...` in meters. Blank lines and lines
/// starting with '#' are skipped.
inline ObstacleMap parse_obstacle_map(std::istream& in, const std::string& name = "<obstacles>")
{
    ObstacleMap map;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::vector<double> values;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(tok, &used));
                if (tok.find_first_not_of(" \t\r", used) != std::string::npos)
                    throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ParseError(name, lineno, "bad coordinate '" + tok + "'");
            }
        }
        if (values.size() % 2 != 0 || values.size() < 6)
            throw ParseError(name, lineno, "polygon needs at least 3 x,y vertex pairs");
        std::vector<Point> poly;
        for (std::size_t k = 0; k < values.size(); k += 2)
            poly.push_back({values[k], values[k + 1]});
        map.polygons.push_back(std::move(poly));
    }
    return map;
}

inline ObstacleMap load_obstacle_map(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open obstacle map " + path);
    return parse_obstacle_map(in, path);
}

/// True iff the segment a-b crosses no obstacle.
inline bool los_state(const ObstacleMap& map, Point a, Point b)
{
    for (const auto& poly : map.polygons) {
        if (point_in_polygon(a, poly) || point_in_polygon(b, poly))
            return false;
        for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
            if (segments_intersect(a, b, poly[j], poly[i]))
                return false;
        }
    }
    return true;
}

/// Directed link state from a transmitter to one peer.
struct Link {
    VehicleId peer_id = 0;
    std::uint32_t peer = 0;  // index of the peer in the current snapshot
    double distance_m = 0.0;
    Point rel{};             // displacement transmitter -> peer
    bool los = true;
    double pathloss_db = 0.0;
    double shadow_db = 0.0;
    double rx_mw = 0.0;
};

/// Per-transmitter pairs (peer index, peer index) within `range` of each
/// other, found with a sweep over x. Lists are sorted by peer id.
inline std::vector<std::vector<std::uint32_t>> pairs_within(const ScenarioSnapshot& snap, double range)
{
    const std::size_t n = snap.size();
    std::vector<std::vector<std::uint32_t>> out(n);
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double xa = snap.positions[a].x, xb = snap.positions[b].x;
        return xa != xb ? xa < xb : snap.ids[a] < snap.ids[b];
    });
    const double wrap = snap.wrap_length_m;
    const bool periodic = wrap > 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t i = order[k];
        const double xi = snap.positions[i].x;
        for (std::size_t step = 1; step < n; ++step) {
            std::size_t m = k + step;
            if (m >= n) {
                if (!periodic)
                    break;
                m -= n;
            }
            const std::uint32_t j = order[m];
            double dx = snap.positions[j].x - xi;
            if (periodic && k + step >= n)
                dx += wrap;
            if (dx > range)
                break;
            // On a short ring the sweep can reach a peer from both sides; keep one.
            if (periodic && 2.0 * dx > wrap)
                break;
            if (snap.distance(i, j) <= range) {
                out[i].push_back(j);
                out[j].push_back(i);
            }
        }
    }
    // Transpose in id order instead of sorting every list: visiting sources
    // by ascending id appends them to each peer's list already in order.
    std::vector<std::uint32_t> by_id(n);
    std::iota(by_id.begin(), by_id.end(), 0u);
    std::sort(by_id.begin(), by_id.end(), [&](std::uint32_t a, std::uint32_t b) { return snap.ids[a] < snap.ids[b]; });
    std::vector<std::vector<std::uint32_t>> sorted(n);
    for (std::size_t i = 0; i < n; ++i)
        sorted[i].reserve(out[i].size());
    for (std::uint32_t i : by_id)
        for (std::uint32_t j : out[i])
            sorted[j].push_back(i);
    for (auto& list : sorted)
        list.erase(std::unique(list.begin(), list.end()), list.end());
    return sorted;
}

/// Channel state of all directed links shorter than the interference range.
/// Updated once per beacon period; shadowing of each link evolves with the
/// change in relative position of its two ends.
class ChannelRealization {
public:
    ChannelRealization(ChannelParams params, ObstacleMap obstacles, std::uint64_t seed)
        : params_(params), obstacles_(std::move(obstacles)), seed_(seed)
    {
        params_.validate();
    }

    const ChannelParams& params() const { return params_; }

    void update(const ScenarioSnapshot& snap)
    {
        const std::size_t n = snap.size();
        const auto pairs = pairs_within(snap, params_.interference_range_m);

        std::unordered_map<VehicleId, std::vector<Link>> previous;
        previous.reserve(links_.size());
        for (std::size_t i = 0; i < links_.size(); ++i)
            previous.emplace(ids_[i], std::move(links_[i]));

        links_.assign(n, {});
        ids_ = snap.ids;
        wrap_ = snap.wrap_length_m;
        for (std::size_t i = 0; i < n; ++i) {
            const VehicleId id = snap.ids[i];
            auto rng_it = rngs_.find(id);
            if (rng_it == rngs_.end())
                rng_it = rngs_.emplace(id, Rng::stream(seed_, "shadow", static_cast<std::uint64_t>(id))).first;
            Rng& rng = rng_it->second;

            static const std::vector<Link> none;
            auto prev_it = previous.find(id);
            const std::vector<Link>& old = prev_it == previous.end() ? none : prev_it->second;
            auto old_it = old.begin();

            auto& out = links_[i];
            out.reserve(pairs[i].size());
            for (std::uint32_t j : pairs[i]) {
                Link link;
                link.peer_id = snap.ids[j];
                link.peer = j;
                link.rel = displacement(snap.positions[i], snap.positions[j], wrap_);
                link.distance_m = norm(link.rel);
                link.los = obstacles_.empty() || los_state(obstacles_, snap.positions[i], snap.positions[j]);
                link.pathloss_db = link.los ? pathloss_los_db(params_, link.distance_m)
                                            : pathloss_nlos_db(params_, link.rel.x, link.rel.y);
                const double sigma = link.los ? params_.shadow_sigma_los_db : params_.shadow_sigma_nlos_db;

                while (old_it != old.end() && old_it->peer_id < link.peer_id)
                    ++old_it;
                if (old_it != old.end() && old_it->peer_id == link.peer_id) {
                    const double moved = norm(link.rel - old_it->rel);
                    link.shadow_db = shadow_step(old_it->shadow_db, moved, params_.decorr_dist_m, sigma, rng);
                } else {
                    link.shadow_db = sigma * rng.gaussian();
                }
                link.rx_mw = dbm_to_mw(rx_power_dbm(params_, link.pathloss_db, link.shadow_db));
                out.push_back(link);
            }
        }
        // A vehicle that leaves and later returns restarts its stream.
        if (rngs_.size() != n) {
            std::unordered_map<VehicleId, char> present;
            for (VehicleId id : ids_)
                present.emplace(id, 0);
            std::erase_if(rngs_, [&](const auto& kv) { return !present.contains(kv.first); });
        }
    }

    std::size_t size() const { return links_.size(); }

    /// Outgoing links of the vehicle at snapshot index `i`, sorted by peer id.
    const std::vector<Link>& links(std::size_t i) const { return links_[i]; }

    const Link* find(std::size_t from, std::size_t to) const
    {
        const auto& list = links_[from];
        const VehicleId target = ids_[to];
        auto it = std::lower_bound(list.begin(), list.end(), target,
                                   [](const Link& l, VehicleId id) { return l.peer_id < id; });
        if (it == list.end() || it->peer_id != target)
            return nullptr;
        return &*it;
    }

    /// Received power in mW at `to` from `from`; zero beyond the interference range.
    double gain_mw(std::size_t from, std::size_t to) const
    {
        const Link* l = find(from, to);
        return l ? l->rx_mw : 0.0;
    }

private:
    ChannelParams params_;
    ObstacleMap obstacles_;
    std::uint64_t seed_;
    double wrap_ = 0.0;
    std::vector<VehicleId> ids_;
    std::vector<std::vector<Link>> links_;
    std::unordered_map<VehicleId, Rng> rngs_;
};

}  // namespace cv2x
