#pragma once

// Beacon-resource (BR) grid: the time-frequency layout of the single-subframe
// resources available in one beacon period.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "cv2x/errors.hpp"

namespace cv2x {

using Tti = std::int64_t;  // absolute subframe counter, 1 ms each

struct GridConfig {
    int beacon_period_ms = 100;
    int brs_per_tti = 2;
    int subchannels_total = 4;
    int subchannels_per_br = 2;
    int mcs_index = 7;
    double sinr_min_db = 7.30;

    void validate() const
    {
        if (beacon_period_ms < 1)
            throw ConfigError("beacon_period_ms must be >= 1");
        if (brs_per_tti < 1 || subchannels_per_br < 1 || subchannels_total < 1)
            throw ConfigError("grid dimensions must be positive");
        if (brs_per_tti * subchannels_per_br > subchannels_total)
            throw ConfigError("brs_per_tti * subchannels_per_br exceeds subchannels_total");
    }
};

/// Minimum SINR for the supported MCS indices. MCS 14 has no published
/// threshold, so it must come from configuration.
inline bool default_sinr_min_db(int mcs, double& out)
{
    switch (mcs) {
    case 4: out = 2.76; return true;
    case 7: out = 7.30; return true;
    default: return false;
    }
}

/// Grid for the 10 MHz channel with four 10-RB-pair subchannels and
/// non-adjacent SCIs. MCS 4 packs one beacon per subframe, MCS 7 two and
/// MCS 14 four.
inline GridConfig make_grid_config(int mcs, int beacon_period_ms = 100)
{
    GridConfig cfg;
    cfg.beacon_period_ms = beacon_period_ms;
    cfg.subchannels_total = 4;
    cfg.mcs_index = mcs;
    switch (mcs) {
    case 4: cfg.brs_per_tti = 1; cfg.subchannels_per_br = 4; break;
    case 7: cfg.brs_per_tti = 2; cfg.subchannels_per_br = 2; break;
    case 14: cfg.brs_per_tti = 4; cfg.subchannels_per_br = 1; break;
    default: throw ConfigError("unsupported mcs " + std::to_string(mcs) + " (expected 4, 7 or 14)");
    }
    double gamma = 0.0;
    cfg.sinr_min_db = default_sinr_min_db(mcs, gamma) ? gamma : 0.0;
    cfg.validate();
    return cfg;
}

struct BrIndex {
    int subframe = 0;   // [0, beacon_period_ms)
    int freq_slot = 0;  // [0, brs_per_tti)

    friend bool operator==(const BrIndex&, const BrIndex&) = default;
};

inline int br_count(const GridConfig& cfg) { return cfg.brs_per_tti * cfg.beacon_period_ms; }

/// Time-major flat index.
inline int flat_index(const GridConfig& cfg, BrIndex br) { return br.subframe * cfg.brs_per_tti + br.freq_slot; }

inline BrIndex br_from_flat(const GridConfig& cfg, int r)
{
    if (r < 0 || r >= br_count(cfg))
        throw std::out_of_range("BR index " + std::to_string(r) + " outside [0, " + std::to_string(br_count(cfg)) + ")");
    return BrIndex{r / cfg.brs_per_tti, r % cfg.brs_per_tti};
}

/// First subchannel used by a BR. BRs of one subframe tile the subchannels
/// without overlap.
inline int first_subchannel(const GridConfig& cfg, BrIndex br) { return br.freq_slot * cfg.subchannels_per_br; }

inline bool brs_overlap(const GridConfig& cfg, BrIndex a, BrIndex b)
{
    if (a.subframe != b.subframe)
        return false;
    int a0 = first_subchannel(cfg, a);
    int b0 = first_subchannel(cfg, b);
    return a0 < b0 + cfg.subchannels_per_br && b0 < a0 + cfg.subchannels_per_br;
}

/// Subframe offset of `subframe` after `now`, in [1, beacon_period_ms]:
/// the next occurrence strictly after the current TTI.
inline int subframe_delay(const GridConfig& cfg, Tti now, int subframe)
{
    const Tti period = cfg.beacon_period_ms;
    Tti d = (static_cast<Tti>(subframe) - now - 1) % period;
    if (d < 0)
        d += period;
    return static_cast<int>(d + 1);
}

inline int subframe_of(const GridConfig& cfg, Tti t)
{
    Tti s = t % cfg.beacon_period_ms;
    return static_cast<int>(s < 0 ? s + cfg.beacon_period_ms : s);
}

}  // namespace cv2x
