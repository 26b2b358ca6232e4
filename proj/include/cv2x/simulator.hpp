#pragma once

// TTI-level scenario runner. Positions and the channel are refreshed at the
// start of every beacon period; within a TTI the order is
//   transmissions -> received power -> receptions and metrics -> sensing
//   -> beacon generation and MAC decisions,
// so a selection at TTI t sees the measurements of t and schedules its
// transmission strictly later.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cv2x/channel.hpp"
#include "cv2x/config.hpp"
#include "cv2x/errors.hpp"
#include "cv2x/geometry.hpp"
#include "cv2x/grid.hpp"
#include "cv2x/metrics.hpp"
#include "cv2x/mobility.hpp"
#include "cv2x/mode4.hpp"
#include "cv2x/phy.hpp"
#include "cv2x/rng.hpp"

namespace cv2x {

/// One snapshot per beacon period, from the highway model or a trace.
class MobilitySource {
public:
    explicit MobilitySource(const RunConfig& cfg) : cfg_(cfg)
    {
        if (cfg.scenario == Scenario::trace) {
            trace_ = load_trace(cfg.trace_path, cfg.beacon_period_ms, cfg.trace_max_gap_s);
        } else {
            Rng rng = Rng::stream(cfg.seed, "mobility");
            highway_ = make_highway(cfg.highway, rng);
        }
    }

    /// Snapshot of beacon period `period` (called with 0, 1, 2, ...).
    /// Returns false when a trace has run out.
    bool next(std::int64_t period, ScenarioSnapshot& out)
    {
        const double dt = cfg_.beacon_period_ms / 1000.0;
        if (cfg_.scenario == Scenario::trace) {
            if (period >= static_cast<std::int64_t>(trace_.size()))
                return false;
            out = trace_[static_cast<std::size_t>(period)];
            return true;
        }
        if (period > 0)
            step_highway(cfg_.highway, highway_, dt);
        out = highway_snapshot(cfg_.highway, highway_, period * dt);
        return true;
    }

private:
    RunConfig cfg_;
    std::vector<ScenarioSnapshot> trace_;
    HighwayState highway_;
};

struct HoldRecord {
    VehicleId vehicle = 0;
    std::int64_t start_period = 0;
    int length = 0;         // beacon periods on the same BR
    bool complete = false;  // false: still running when the vehicle or the run ended
};

struct TxLogEntry {
    Tti tti;
    VehicleId vehicle;
    BrIndex br;
};

struct RxLogEntry {
    Tti tti;
    VehicleId src;
    VehicleId dst;
};

struct RunResult {
    PrrAccumulator prr;
    UdTracker ud;
    std::vector<HoldRecord> holds;
    std::int64_t simulated_ms = 0;
    std::int64_t periods = 0;
    std::uint64_t beacons = 0;
    std::uint64_t transmissions = 0;
    std::uint64_t reselections = 0;
    std::uint64_t decoded_receptions = 0;
    std::uint64_t half_duplex_violations = 0;
    std::uint64_t neighbor_samples = 0;
    double neighbor_sum = 0.0;
    std::size_t max_vehicles = 0;
    std::vector<TxLogEntry> tx_log;
    std::vector<RxLogEntry> rx_log;

    double mean_neighbors() const { return neighbor_samples ? neighbor_sum / neighbor_samples : 0.0; }
};

namespace detail {

struct VehicleState {
    Mode4State mode4;
    Rng rng;
    int phase_ms = 0;
    BrIndex br{};
    Tti pending_tx = -1;
    Tti generated = 0;
    std::int64_t hold_start = 0;
    int hold_length = 0;
    bool allocated = false;

    VehicleState(const RunConfig& cfg, VehicleId id)
        : mode4(cfg.grid, cfg.mode4), rng(Rng::stream(cfg.seed, "vehicle", static_cast<std::uint64_t>(id)))
    {
        phase_ms = rng.uniform_int(0, cfg.grid.beacon_period_ms - 1);
    }
};

inline ObstacleMap obstacles_for(const RunConfig& cfg)
{
    return cfg.obstacle_map.empty() ? ObstacleMap{} : load_obstacle_map(cfg.obstacle_map);
}

}  // namespace detail

inline RunResult run_scenario(const RunConfig& cfg)
{
    const GridConfig& grid = cfg.grid;
    const int period_ms = grid.beacon_period_ms;
    const int slots = grid.brs_per_tti;
    const PhyParams phy = PhyParams::make(grid, cfg.channel, cfg.ibe_attenuation_db);
    const bool sensing = cfg.allocation == Allocation::mode4;
    const Tti total = std::llround(cfg.duration() * 1000.0);
    const Tti warm = std::llround(cfg.warmup() * 1000.0);

    MobilitySource mobility(cfg);
    ChannelRealization channel(cfg.channel, detail::obstacles_for(cfg), cfg.seed);
    InterferenceField field(grid, phy);

    RunResult res;
    res.prr = PrrAccumulator(cfg.prr_bin_m, cfg.awareness_m);
    std::unordered_map<VehicleId, std::unique_ptr<detail::VehicleState>> states;
    std::vector<detail::VehicleState*> active;
    std::vector<VehicleId> active_ids;
    ScenarioSnapshot snap;

    std::vector<TxEvent> txs;
    std::vector<VehicleId> tx_ids;
    std::vector<char> transmitting;
    std::vector<double> rsrp;  // strongest decodable transmission per (vehicle, slot)
    std::vector<double> s_rssi_buf(slots), rsrp_buf(slots);

    auto close_hold = [&](VehicleId id, detail::VehicleState& v, bool complete) {
        if (v.allocated && sensing)
            res.holds.push_back({id, v.hold_start, v.hold_length, complete});
    };

    Tti t = 0;
    for (; t < total; ++t) {
        if (t % period_ms == 0) {
            const std::int64_t period = t / period_ms;
            if (!mobility.next(period, snap))
                break;
            ++res.periods;
            channel.update(snap);
            const std::size_t n = snap.size();
            res.max_vehicles = std::max(res.max_vehicles, n);

            std::vector<VehicleId> sorted_now(snap.ids);
            std::sort(sorted_now.begin(), sorted_now.end());
            for (VehicleId id : active_ids) {
                if (!std::binary_search(sorted_now.begin(), sorted_now.end(), id)) {
                    auto it = states.find(id);
                    close_hold(id, *it->second, false);
                    states.erase(it);
                }
            }
            active.assign(n, nullptr);
            for (std::size_t i = 0; i < n; ++i) {
                auto& slot = states[snap.ids[i]];
                if (!slot)
                    slot = std::make_unique<detail::VehicleState>(cfg, snap.ids[i]);
                active[i] = slot.get();
            }
            active_ids = snap.ids;
            transmitting.assign(n, 0);
            rsrp.assign(n * static_cast<std::size_t>(slots), 0.0);

            if (t >= warm) {
                for (std::size_t i = 0; i < n; ++i) {
                    for (const Link& l : channel.links(i))
                        if (l.distance_m <= cfg.awareness_m)
                            res.neighbor_sum += 1.0;
                    ++res.neighbor_samples;
                }
            }
        }

        const std::size_t n = active.size();

        txs.clear();
        tx_ids.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (active[i]->pending_tx == t) {
                txs.push_back({i, active[i]->br});
                tx_ids.push_back(active_ids[i]);
            }
        }
        std::sort(tx_ids.begin(), tx_ids.end());
        res.transmissions += txs.size();

        field.reset(n);
        for (const TxEvent& tx : txs) {
            field.add(tx, channel.links(tx.vehicle));
            transmitting[tx.vehicle] = 1;
            if (cfg.event_log)
                res.tx_log.push_back({t, active_ids[tx.vehicle], tx.br});
        }

        for (const TxEvent& tx : txs) {
            const detail::VehicleState& src = *active[tx.vehicle];
            const bool measured = src.generated >= warm;
            const int f = tx.br.freq_slot;
            for (const Link& l : channel.links(tx.vehicle)) {
                const std::size_t j = l.peer;
                const bool neighbour = l.distance_m <= cfg.awareness_m;
                bool decoded = false;
                if (!transmitting[j]) {
                    decoded = decodable(phy, field.sinr(j, f, l.rx_mw));
                    if (decoded) {
                        double& best = rsrp[j * slots + f];
                        best = std::max(best, l.rx_mw);
                    }
                }
                if (decoded) {
                    ++res.decoded_receptions;
                    // Independent of `transmitting`: looked up by vehicle id.
                    if (std::binary_search(tx_ids.begin(), tx_ids.end(), active_ids[j]))
                        ++res.half_duplex_violations;
                    if (cfg.event_log)
                        res.rx_log.push_back({t, active_ids[tx.vehicle], active_ids[j]});
                }
                if (measured && neighbour) {
                    res.prr.add(l.distance_m, decoded);
                    if (decoded)
                        res.ud.add_reception(active_ids[tx.vehicle], active_ids[j], src.generated);
                }
            }
        }

        if (sensing) {
            for (std::size_t i = 0; i < n; ++i) {
                SensingMemory& memory = active[i]->mode4.memory;
                if (transmitting[i]) {
                    memory.record_unmonitored(t);
                    continue;
                }
                for (int f = 0; f < slots; ++f) {
                    s_rssi_buf[f] = field.total_mw(i, f);
                    rsrp_buf[f] = rsrp[i * slots + f];
                }
                memory.record_subframe(t, s_rssi_buf, rsrp_buf);
            }
        }
        for (std::size_t j : field.touched())
            for (int f = 0; f < slots; ++f)
                rsrp[j * slots + f] = 0.0;
        for (const TxEvent& tx : txs)
            transmitting[tx.vehicle] = 0;

        const int sub = subframe_of(grid, t);
        const std::int64_t period = t / period_ms;
        for (std::size_t i = 0; i < n; ++i) {
            detail::VehicleState& v = *active[i];
            if (v.phase_ms != sub)
                continue;
            v.generated = t;
            ++res.beacons;
            if (!sensing) {
                v.br = br_from_flat(grid, v.rng.uniform_int(0, br_count(grid) - 1));
            } else if (!v.allocated) {
                v.br = initial_select(v.mode4, cfg.mode4, grid, t, phy.noise_mw, v.rng);
                v.allocated = true;
                v.hold_start = period;
                v.hold_length = 1;
            } else if (on_beacon_period_end(v.mode4, cfg.mode4, v.rng) == SpsAction::reselect) {
                close_hold(active_ids[i], v, true);
                v.br = select_br(v.mode4, cfg.mode4, grid, t, phy.noise_mw, v.rng);
                v.hold_start = period;
                v.hold_length = 1;
                ++res.reselections;
            } else {
                ++v.hold_length;
            }
            v.pending_tx = t + subframe_delay(grid, t, v.br.subframe);
        }
    }
    res.simulated_ms = t;

    for (std::size_t i = 0; i < active.size(); ++i)
        close_hold(active_ids[i], *active[i], false);
    std::sort(res.holds.begin(), res.holds.end(), [](const HoldRecord& a, const HoldRecord& b) {
        return a.vehicle != b.vehicle ? a.vehicle < b.vehicle : a.start_period < b.start_period;
    });
    return res;
}

/// Hidden-node statistic over consecutive beacon periods.
inline HiddenNodeAccumulator run_hidden_node(const RunConfig& cfg)
{
    const PhyParams phy = PhyParams::make(cfg.grid, cfg.channel, cfg.ibe_attenuation_db);
    MobilitySource mobility(cfg);
    ChannelRealization channel(cfg.channel, detail::obstacles_for(cfg), cfg.seed);
    HiddenNodeAccumulator acc;
    ScenarioSnapshot snap;
    for (int k = 0; k < cfg.hidden_node_snapshots; ++k) {
        if (!mobility.next(k, snap))
            break;
        channel.update(snap);
        acc.add(hidden_node_probability(snap, GainTable::from(channel), phy.noise_mw, phy.gamma_min,
                                        cfg.hidden_node_bin_m, cfg.channel.interference_range_m));
    }
    return acc;
}

inline const std::vector<double>& ud_quantiles()
{
    static const std::vector<double> q{0.5, 0.9, 0.99, 0.999, 0.9999};
    return q;
}

namespace detail {

inline std::string format(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream out(p);
    if (!out)
        throw InputError("cannot write " + p.string());
    return out;
}

}  // namespace detail

inline std::string summary_text(const RunConfig& cfg, const RunResult& r)
{
    std::string s;
    auto line = [&](const std::string& k, const std::string& v) { s += k + ": " + v + "\n"; };
    line("seed", std::to_string(cfg.seed));
    line("allocation", cfg.allocation == Allocation::mode4 ? "mode4" : "random");
    line("simulated_s", detail::format("%.3f", r.simulated_ms / 1000.0));
    line("warmup_s", detail::format("%.3f", cfg.warmup()));
    line("periods", std::to_string(r.periods));
    line("max_vehicles", std::to_string(r.max_vehicles));
    line("mean_neighbors", detail::format("%.4f", r.mean_neighbors()));
    line("beacons", std::to_string(r.beacons));
    line("transmissions", std::to_string(r.transmissions));
    line("reselections", std::to_string(r.reselections));
    line("decoded_receptions", std::to_string(r.decoded_receptions));
    line("half_duplex_violations", std::to_string(r.half_duplex_violations));
    line("prr_pooled", detail::format("%.6f", r.prr.pooled()));
    for (double q : ud_quantiles()) {
        const std::string key = "ud_" + detail::format("%g", q * 100.0) + "_s";
        line(key, r.ud.count() ? detail::format("%.3f", r.ud.percentile(q)) : "nan");
    }
    line("ud_samples", std::to_string(r.ud.count()));
    return s;
}

inline void write_outputs(const RunConfig& cfg, const RunResult& r, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw InputError("cannot create " + dir.string() + ": " + ec.message());

    detail::open_out(dir / "config_resolved.txt") << to_text(cfg);
    detail::open_out(dir / "summary.txt") << summary_text(cfg, r);

    {
        auto out = detail::open_out(dir / "prr_by_distance.csv");
        out << "bin_center_m,prr,samples\n";
        for (std::size_t b = 0; b < r.prr.bins(); ++b)
            out << detail::format("%.1f", r.prr.bin_center(b)) << ',' << detail::format("%.6f", r.prr.prr(b)) << ','
                << r.prr.total(b) << '\n';
    }
    {
        auto out = detail::open_out(dir / "ud_percentiles.csv");
        out << "q,seconds\n";
        if (r.ud.count())
            for (double q : ud_quantiles())
                out << detail::format("%g", q) << ',' << detail::format("%.3f", r.ud.percentile(q)) << '\n';
    }
    {
        auto out = detail::open_out(dir / "hold_times.csv");
        out << "vehicle_id,start_period,length,complete\n";
        for (const auto& h : r.holds)
            out << h.vehicle << ',' << h.start_period << ',' << h.length << ',' << (h.complete ? 1 : 0) << '\n';
    }
    if (cfg.event_log) {
        auto tx = detail::open_out(dir / "tx_log.csv");
        tx << "tti,vehicle_id,subframe,freq_slot\n";
        for (const auto& e : r.tx_log)
            tx << e.tti << ',' << e.vehicle << ',' << e.br.subframe << ',' << e.br.freq_slot << '\n';
        auto rx = detail::open_out(dir / "rx_log.csv");
        rx << "tti,src_id,dst_id\n";
        for (const auto& e : r.rx_log)
            rx << e.tti << ',' << e.src << ',' << e.dst << '\n';
    }
}

inline void write_hidden_node(const RunConfig& cfg, const HiddenNodeAccumulator& acc,
                              const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw InputError("cannot create " + dir.string() + ": " + ec.message());
    detail::open_out(dir / "config_resolved.txt") << to_text(cfg);
    auto out = detail::open_out(dir / "hidden_node.csv");
    out << "d_bin_m,probability,pairs\n";
    for (std::size_t b = 0; b < acc.bins(); ++b) {
        if (acc.pairs(b) == 0)
            continue;
        out << detail::format("%.1f", (b + 0.5) * acc.bin_width()) << ','
            << detail::format("%.6f", acc.bin_probability(b)) << ',' << acc.pairs(b) << '\n';
    }
}

}  // namespace cv2x
