#pragma once

// Reception and sensing in one subframe.
//
// SINR of the transmission from i at receiver j:
//   gamma_ij = psi_ij / (P_n + sum_{k != i,j} K_S(k,i) K_IBE(k,i) psi_kj)
// K_S is 1 for transmitters in the same subframe and 0 otherwise (all
// allocations are single-subframe and TTI aligned). K_IBE is 1 when the
// two BRs share subchannels and the in-band-emission factor otherwise.
// A packet is decoded iff gamma_ij > gamma_min (strict).

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cv2x/channel.hpp"
#include "cv2x/grid.hpp"

namespace cv2x {

struct PhyParams {
    double noise_mw = 0.0;
    double gamma_min = 1.0;      // linear
    double ibe_factor = 0.0;     // linear K_IBE for disjoint subchannels

    static PhyParams make(const GridConfig& grid, const ChannelParams& channel, double ibe_attenuation_db)
    {
        PhyParams p;
        p.noise_mw = dbm_to_mw(noise_power_dbm(channel, grid));
        p.gamma_min = db_to_linear(grid.sinr_min_db);
        p.ibe_factor = std::isinf(ibe_attenuation_db) && ibe_attenuation_db > 0 ? 0.0 : db_to_linear(-ibe_attenuation_db);
        return p;
    }
};

struct TxEvent {
    std::size_t vehicle = 0;  // snapshot index
    BrIndex br{};
};

struct RxOutcome {
    std::size_t src = 0;
    std::size_t dst = 0;
    double sinr_db = -std::numeric_limits<double>::infinity();
    bool decoded = false;
    bool half_duplex_blocked = false;
};

struct SenseSample {
    BrIndex br{};
    double s_rssi_dbm = 0.0;
    std::optional<double> rsrp_dbm;  // strongest transmission whose SCI decodes
    Tti tti = 0;
};

/// Time overlap times in-band-emission coefficient of interferer `k` on a
/// signal in `i`.
inline double coupling(const GridConfig& grid, const PhyParams& phy, BrIndex k, BrIndex i)
{
    if (k.subframe != i.subframe)
        return 0.0;
    return brs_overlap(grid, k, i) ? 1.0 : phy.ibe_factor;
}

inline bool decodable(const PhyParams& phy, double sinr_linear) { return sinr_linear > phy.gamma_min; }

/// Linear SINR at `dst` of `src`. `gain(a, b)` returns the power in mW
/// received by b from a.
template <typename Gain>
double sinr_linear(const GridConfig& grid, const PhyParams& phy, std::size_t dst, const TxEvent& src,
                   std::span<const TxEvent> events, Gain&& gain)
{
    double interference = 0.0;
    for (const TxEvent& k : events) {
        if (k.vehicle == src.vehicle || k.vehicle == dst)
            continue;
        interference += coupling(grid, phy, k.br, src.br) * gain(k.vehicle, dst);
    }
    return gain(src.vehicle, dst) / (phy.noise_mw + interference);
}

template <typename Gain>
double sinr_db(const GridConfig& grid, const PhyParams& phy, std::size_t dst, const TxEvent& src,
               std::span<const TxEvent> events, Gain&& gain)
{
    return 10.0 * std::log10(sinr_linear(grid, phy, dst, src, events, gain));
}

/// Outcome of every (transmitter, receiver) pair in one subframe.
/// Receivers that transmit in the same subframe are half-duplex blocked.
template <typename Gain>
std::vector<RxOutcome> receive_subframe(const GridConfig& grid, const PhyParams& phy, std::span<const TxEvent> events,
                                        std::size_t vehicle_count, Gain&& gain)
{
    std::vector<char> transmitting(vehicle_count, 0);
    for (const auto& e : events)
        transmitting[e.vehicle] = 1;
    std::vector<RxOutcome> out;
    for (const TxEvent& src : events) {
        for (std::size_t dst = 0; dst < vehicle_count; ++dst) {
            if (dst == src.vehicle)
                continue;
            RxOutcome o;
            o.src = src.vehicle;
            o.dst = dst;
            if (transmitting[dst]) {
                o.half_duplex_blocked = true;
            } else {
                const double s = sinr_linear(grid, phy, dst, src, events, gain);
                o.sinr_db = 10.0 * std::log10(s);
                o.decoded = decodable(phy, s);
            }
            out.push_back(o);
        }
    }
    return out;
}

/// What `observer` measures in the subframe of `events`: one sample per BR
/// of the subframe, or nothing if the observer itself transmits.
template <typename Gain>
std::vector<SenseSample> sense_subframe(const GridConfig& grid, const PhyParams& phy, std::size_t observer,
                                        int subframe, std::span<const TxEvent> events, Gain&& gain, Tti tti)
{
    for (const auto& e : events)
        if (e.vehicle == observer)
            return {};
    std::vector<SenseSample> out;
    for (int f = 0; f < grid.brs_per_tti; ++f) {
        const BrIndex br{subframe, f};
        double total = phy.noise_mw;
        std::optional<double> rsrp_mw;
        for (const TxEvent& k : events) {
            const double p = gain(k.vehicle, observer);
            total += coupling(grid, phy, k.br, br) * p;
            if (k.br == br && decodable(phy, sinr_linear(grid, phy, observer, k, events, gain)))
                rsrp_mw = std::max(rsrp_mw.value_or(0.0), p);
        }
        SenseSample s;
        s.br = br;
        s.s_rssi_dbm = mw_to_dbm(total);
        if (rsrp_mw)
            s.rsrp_dbm = mw_to_dbm(*rsrp_mw);
        s.tti = tti;
        out.push_back(s);
    }
    return out;
}

/// Per-receiver received power of one subframe, accumulated per frequency
/// slot with the coupling weights. Same arithmetic as `sinr_linear` and
/// `sense_subframe`, in O(links) instead of O(receivers x transmitters).
class InterferenceField {
public:
    InterferenceField(const GridConfig& grid, const PhyParams& phy) : grid_(grid), phy_(phy) {}

    void reset(std::size_t vehicle_count)
    {
        const std::size_t slots = static_cast<std::size_t>(grid_.brs_per_tti);
        if (acc_.size() != vehicle_count * slots) {
            acc_.assign(vehicle_count * slots, 0.0);
            touched_flag_.assign(vehicle_count, 0);
            touched_.clear();
            return;
        }
        for (std::size_t j : touched_) {
            for (std::size_t f = 0; f < slots; ++f)
                acc_[j * slots + f] = 0.0;
            touched_flag_[j] = 0;
        }
        touched_.clear();
    }

    void add(const TxEvent& tx, std::span<const Link> links)
    {
        const int slots = grid_.brs_per_tti;
        for (const Link& l : links) {
            const std::size_t j = l.peer;
            if (!touched_flag_[j]) {
                touched_flag_[j] = 1;
                touched_.push_back(j);
            }
            for (int f = 0; f < slots; ++f)
                acc_[j * slots + f] += coupling(grid_, phy_, tx.br, BrIndex{tx.br.subframe, f}) * l.rx_mw;
        }
    }

    /// Noise plus all weighted received power in slot `f` at `j` (S-RSSI, mW).
    double total_mw(std::size_t j, int f) const
    {
        return phy_.noise_mw + acc_[j * static_cast<std::size_t>(grid_.brs_per_tti) + f];
    }

    /// SINR at `j` of a signal received with power `signal_mw` in slot `f`.
    double sinr(std::size_t j, int f, double signal_mw) const
    {
        const double others = acc_[j * static_cast<std::size_t>(grid_.brs_per_tti) + f] - signal_mw;
        return signal_mw / (phy_.noise_mw + std::max(others, 0.0));
    }

    std::span<const std::size_t> touched() const { return touched_; }

private:
    GridConfig grid_;
    PhyParams phy_;
    std::vector<double> acc_;
    std::vector<char> touched_flag_;
    std::vector<std::size_t> touched_;
};

}  // namespace cv2x
