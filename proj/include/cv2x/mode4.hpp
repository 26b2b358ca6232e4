#pragma once

// Sensing-based semi-persistent scheduling (3GPP sidelink Mode 4).
//
// PHY side: a sensing memory of S-RSSI and decoded-SCI RSRP per BR over the
// last t_sense, and the candidate-set construction at a reselection
// instant. MAC side: uniform choice among the candidates and the
// reselection-counter / keep-probability state machine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cv2x/channel.hpp"
#include "cv2x/errors.hpp"
#include "cv2x/grid.hpp"
#include "cv2x/phy.hpp"
#include "cv2x/rng.hpp"

namespace cv2x {

enum class NrBasis { total, window };

struct Mode4Params {
    int t_sense_ms = 1000;
    double p_th_dbm = -110.0;
    double r_sel = 0.2;
    int t1 = 1;
    int t2 = 100;
    int n_min = 5;
    int n_max = 15;
    double p_keep = 0.4;
    // Relaxes the 3GPP ranges (t1 <= 4, t2 in [20, 100], p_keep <= 0.8) to
    // structural ones.
    bool nonstandard = false;
    NrBasis nr_basis = NrBasis::total;

    void validate(const GridConfig& grid) const
    {
        if (t_sense_ms < 1)
            throw ConfigError("t_sense_ms must be >= 1");
        if (!(r_sel > 0.0 && r_sel <= 1.0))
            throw ConfigError("r_sel must be in (0, 1]");
        if (n_min < 1 || n_min > n_max)
            throw ConfigError("need 1 <= n_min <= n_max");
        if (t1 < 1 || t1 >= t2 || t2 > grid.beacon_period_ms)
            throw ConfigError("need 1 <= t1 < t2 <= beacon period");
        if (!(p_keep >= 0.0 && p_keep < 1.0))
            throw ConfigError("p_keep must be in [0, 1)");
        if (!nonstandard) {
            if (t1 > 4)
                throw ConfigError("t1 must be <= 4 (set nonstandard to override)");
            if (t2 < 20 || t2 > 100)
                throw ConfigError("t2 must be in [20, 100] (set nonstandard to override)");
            if (p_keep > 0.8)
                throw ConfigError("p_keep must be <= 0.8 (set nonstandard to override)");
        }
    }
};

/// Sensing threshold from the priorities of transmitter (a) and receiver (b).
inline double power_threshold(int a, int b)
{
    if (a < 0 || a > 7 || b < 0 || b > 7)
        throw ConfigError("priorities must be in [0, 7]");
    return -128.0 + 2.0 * (a * 8 + b);
}

/// Number of BRs handed to the MAC: ceil(r_sel * basis).
inline int candidate_count(double r_sel, int basis)
{
    // The epsilon keeps products like 0.2 * 200 from rounding up to 41.
    return static_cast<int>(std::ceil(r_sel * basis - 1e-9));
}

/// Ring buffer of per-BR measurements over the last t_sense. Slot k of the
/// ring holds the occurrence of each BR in beacon periods p with
/// p mod K == k, K = ceil(t_sense / T_B).
class SensingMemory {
public:
    SensingMemory(const GridConfig& grid, int t_sense_ms)
        : grid_(grid),
          t_sense_(t_sense_ms),
          depth_((t_sense_ms + grid.beacon_period_ms - 1) / grid.beacon_period_ms),
          stamp_(static_cast<std::size_t>(grid.beacon_period_ms) * depth_, kNever),
          monitored_(stamp_.size(), 0),
          s_rssi_mw_(static_cast<std::size_t>(br_count(grid)) * depth_, kMissing),
          rsrp_mw_(s_rssi_mw_.size(), 0.0f)
    {
    }

    int depth() const { return depth_; }

    /// Fast path: all BRs of the subframe of `tti` at once. `rsrp_mw` holds 0
    /// where no SCI was decoded.
    void record_subframe(Tti tti, std::span<const double> s_rssi_mw, std::span<const double> rsrp_mw)
    {
        const int s = subframe_of(grid_, tti);
        const std::size_t slot = ring_slot(tti);
        const std::size_t key = sf_key(s, slot);
        if (stamp_[key] > tti)
            return;
        stamp_[key] = tti;
        monitored_[key] = 1;
        for (int f = 0; f < grid_.brs_per_tti; ++f) {
            const std::size_t k = br_key(flat_index(grid_, {s, f}), slot);
            s_rssi_mw_[k] = static_cast<float>(s_rssi_mw[f]);
            rsrp_mw_[k] = static_cast<float>(rsrp_mw[f]);
        }
    }

    /// Observer transmitted in `tti` (half duplex): nothing was measured.
    void record_unmonitored(Tti tti)
    {
        const int s = subframe_of(grid_, tti);
        const std::size_t slot = ring_slot(tti);
        const std::size_t key = sf_key(s, slot);
        if (stamp_[key] > tti)
            return;
        stamp_[key] = tti;
        monitored_[key] = 0;
        for (int f = 0; f < grid_.brs_per_tti; ++f) {
            const std::size_t k = br_key(flat_index(grid_, {s, f}), slot);
            s_rssi_mw_[k] = kMissing;
            rsrp_mw_[k] = 0.0f;
        }
    }

    /// Generic path for one sample. Samples older than what the ring already
    /// holds for that position are ignored.
    void record(const SenseSample& sample)
    {
        if (sample.br.subframe != subframe_of(grid_, sample.tti))
            throw std::invalid_argument("sense sample BR does not lie in its TTI's subframe");
        const std::size_t slot = ring_slot(sample.tti);
        const std::size_t key = sf_key(sample.br.subframe, slot);
        if (stamp_[key] > sample.tti)
            return;
        if (stamp_[key] < sample.tti) {
            stamp_[key] = sample.tti;
            monitored_[key] = 1;
            for (int f = 0; f < grid_.brs_per_tti; ++f) {
                const std::size_t k = br_key(flat_index(grid_, {sample.br.subframe, f}), slot);
                s_rssi_mw_[k] = kMissing;
                rsrp_mw_[k] = 0.0f;
            }
        }
        const std::size_t k = br_key(flat_index(grid_, sample.br), slot);
        s_rssi_mw_[k] = static_cast<float>(dbm_to_mw(sample.s_rssi_dbm));
        rsrp_mw_[k] = sample.rsrp_dbm ? static_cast<float>(dbm_to_mw(*sample.rsrp_dbm)) : 0.0f;
    }

    struct BrView {
        bool monitored = true;
        int samples = 0;             // valid monitored S-RSSI samples
        double mean_s_rssi_mw = 0.0; // noise floor when there are none
        double mean_rsrp_mw = 0.0;   // over samples with a decoded SCI; 0 if none
        bool reserved = false;       // SCI decoded at the latest monitored occurrence
    };

    BrView view(int r, Tti now, double noise_mw) const
    {
        BrView v;
        const int s = r / grid_.brs_per_tti;
        double sum_rssi = 0.0;
        double sum_rsrp = 0.0;
        int n_rsrp = 0;
        Tti latest = kNever;
        for (int slot = 0; slot < depth_; ++slot) {
            const std::size_t key = sf_key(s, slot);
            const Tti t = stamp_[key];
            if (!valid(t, now))
                continue;
            if (!monitored_[key]) {
                v.monitored = false;
                continue;
            }
            const std::size_t k = br_key(r, slot);
            const float rssi = s_rssi_mw_[k];
            if (!std::isnan(rssi)) {
                sum_rssi += rssi;
                ++v.samples;
            }
            const float rsrp = rsrp_mw_[k];
            if (rsrp > 0.0f) {
                sum_rsrp += rsrp;
                ++n_rsrp;
            }
            if (t > latest) {
                latest = t;
                v.reserved = rsrp > 0.0f;
            }
        }
        v.mean_s_rssi_mw = v.samples > 0 ? sum_rssi / v.samples : noise_mw;
        v.mean_rsrp_mw = n_rsrp > 0 ? sum_rsrp / n_rsrp : 0.0;
        return v;
    }

    /// True when nothing at all was recorded in the window ending at `now`.
    bool cold(Tti now) const
    {
        return std::none_of(stamp_.begin(), stamp_.end(), [&](Tti t) { return valid(t, now); });
    }

private:
    static constexpr Tti kNever = std::numeric_limits<Tti>::min();
    static constexpr float kMissing = std::numeric_limits<float>::quiet_NaN();

    bool valid(Tti stamp, Tti now) const { return stamp != kNever && stamp <= now && stamp > now - t_sense_; }

    std::size_t ring_slot(Tti tti) const
    {
        Tti p = tti / grid_.beacon_period_ms;
        if (tti < 0 && tti % grid_.beacon_period_ms != 0)
            --p;
        Tti m = p % depth_;
        return static_cast<std::size_t>(m < 0 ? m + depth_ : m);
    }
    std::size_t sf_key(int subframe, std::size_t slot) const
    {
        return static_cast<std::size_t>(subframe) * depth_ + slot;
    }
    std::size_t br_key(int r, std::size_t slot) const { return static_cast<std::size_t>(r) * depth_ + slot; }

    GridConfig grid_;
    Tti t_sense_;
    int depth_;
    std::vector<Tti> stamp_;
    std::vector<char> monitored_;
    std::vector<float> s_rssi_mw_;
    std::vector<float> rsrp_mw_;
};

struct CandidateSet {
    std::vector<BrIndex> brs;  // ascending average S-RSSI, ties by flat index
    int n_r = 0;
    double final_p_th_dbm = 0.0;
    bool cold_start = false;
};

/// PHY candidate selection at TTI `now` for the next beacon period.
inline CandidateSet candidate_set(const SensingMemory& memory, const Mode4Params& params, const GridConfig& grid,
                                  Tti now, double noise_mw, Rng& rng)
{
    const int R = br_count(grid);
    std::vector<int> window;
    for (int r = 0; r < R; ++r) {
        const int delay = subframe_delay(grid, now, r / grid.brs_per_tti);
        if (delay >= params.t1 && delay <= params.t2)
            window.push_back(r);
    }

    CandidateSet out;
    out.n_r = candidate_count(params.r_sel, params.nr_basis == NrBasis::total ? R : static_cast<int>(window.size()));
    out.final_p_th_dbm = params.p_th_dbm;

    struct Entry {
        int r;
        SensingMemory::BrView v;
    };
    std::vector<Entry> monitored;
    if (!memory.cold(now)) {
        monitored.reserve(window.size());
        for (int r : window) {
            auto v = memory.view(r, now, noise_mw);
            if (v.monitored)
                monitored.push_back({r, v});
        }
    }

    if (monitored.empty()) {
        // No usable history: every BR looks empty, so the pick is uniform
        // over the window.
        out.cold_start = true;
        std::shuffle(window.begin(), window.end(), rng.engine());
        window.resize(std::min<std::size_t>(window.size(), static_cast<std::size_t>(out.n_r)));
        std::sort(window.begin(), window.end());
        for (int r : window)
            out.brs.push_back(br_from_flat(grid, r));
        return out;
    }

    std::vector<Entry> survivors;
    double threshold = params.p_th_dbm;
    for (;;) {
        const double threshold_mw = dbm_to_mw(threshold);
        survivors.clear();
        for (const auto& e : monitored)
            if (!(e.v.reserved && e.v.mean_rsrp_mw > threshold_mw))
                survivors.push_back(e);
        if (static_cast<int>(survivors.size()) >= out.n_r || survivors.size() == monitored.size())
            break;
        threshold += 3.0;
    }
    out.final_p_th_dbm = threshold;

    std::stable_sort(survivors.begin(), survivors.end(),
                     [](const Entry& a, const Entry& b) { return a.v.mean_s_rssi_mw < b.v.mean_s_rssi_mw; });
    const std::size_t keep = std::min<std::size_t>(survivors.size(), static_cast<std::size_t>(out.n_r));
    for (std::size_t k = 0; k < keep; ++k)
        out.brs.push_back(br_from_flat(grid, survivors[k].r));
    return out;
}

inline BrIndex mac_select(std::span<const BrIndex> candidates, Rng& rng)
{
    if (candidates.empty())
        throw std::logic_error("mac_select: empty candidate list");
    return candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(candidates.size()) - 1))];
}

inline int draw_reselection_counter(const Mode4Params& params, Rng& rng)
{
    return rng.uniform_int(params.n_min, params.n_max);
}

struct Mode4State {
    SensingMemory memory;
    std::optional<BrIndex> current;
    int reselection_counter = 0;

    Mode4State(const GridConfig& grid, const Mode4Params& params) : memory(grid, params.t_sense_ms) {}
};

enum class SpsAction { keep, reselect };

/// Counter bookkeeping at the end of a beacon period. On `reselect` the
/// caller runs the selection; the counter is already redrawn either way.
inline SpsAction on_beacon_period_end(Mode4State& state, const Mode4Params& params, Rng& rng)
{
    --state.reselection_counter;
    if (state.reselection_counter > 0)
        return SpsAction::keep;
    const bool keep = rng.bernoulli(params.p_keep);
    state.reselection_counter = draw_reselection_counter(params, rng);
    return keep ? SpsAction::keep : SpsAction::reselect;
}

/// Candidate set plus MAC pick; the counter is left alone.
inline BrIndex select_br(Mode4State& state, const Mode4Params& params, const GridConfig& grid, Tti now,
                         double noise_mw, Rng& rng)
{
    const auto cs = candidate_set(state.memory, params, grid, now, noise_mw, rng);
    const BrIndex br = mac_select(cs.brs, rng);
    state.current = br;
    return br;
}

/// First allocation: selection and a fresh counter.
inline BrIndex initial_select(Mode4State& state, const Mode4Params& params, const GridConfig& grid, Tti now,
                              double noise_mw, Rng& rng)
{
    const BrIndex br = select_br(state, params, grid, now, noise_mw, rng);
    state.reselection_counter = draw_reselection_counter(params, rng);
    return br;
}

}  // namespace cv2x
