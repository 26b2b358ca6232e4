#pragma once

// Output metrics: packet reception ratio by distance, update delay, and the
// hidden-node probability.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cv2x/channel.hpp"
#include "cv2x/geometry.hpp"
#include "cv2x/grid.hpp"
#include "cv2x/phy.hpp"

namespace cv2x {

/// Decoded / total neighbour counts per distance bin. Distances equal to
/// the range fall in the last bin.
class PrrAccumulator {
public:
    PrrAccumulator(double bin_width_m = 10.0, double range_m = 200.0)
        : bin_width_(bin_width_m), range_(range_m)
    {
        if (!(bin_width_m > 0.0) || !(range_m > 0.0))
            throw std::invalid_argument("PRR bins need positive width and range");
        const auto bins = static_cast<std::size_t>(std::ceil(range_m / bin_width_m - 1e-9));
        decoded_.assign(bins, 0);
        total_.assign(bins, 0);
    }

    void add(double distance_m, bool decoded)
    {
        if (distance_m > range_ || distance_m < 0.0)
            return;
        auto b = static_cast<std::size_t>(distance_m / bin_width_);
        b = std::min(b, total_.size() - 1);
        ++total_[b];
        if (decoded)
            ++decoded_[b];
    }

    void merge(const PrrAccumulator& other)
    {
        if (other.total_.size() != total_.size() || other.bin_width_ != bin_width_)
            throw std::invalid_argument("PRR accumulators with different bins");
        for (std::size_t b = 0; b < total_.size(); ++b) {
            decoded_[b] += other.decoded_[b];
            total_[b] += other.total_[b];
        }
    }

    std::size_t bins() const { return total_.size(); }
    double bin_width() const { return bin_width_; }
    double bin_center(std::size_t b) const { return (b + 0.5) * bin_width_; }
    std::uint64_t decoded(std::size_t b) const { return decoded_[b]; }
    std::uint64_t total(std::size_t b) const { return total_[b]; }
    double prr(std::size_t b) const { return total_[b] ? static_cast<double>(decoded_[b]) / total_[b] : 0.0; }

    double pooled() const
    {
        std::uint64_t d = 0, t = 0;
        for (std::size_t b = 0; b < total_.size(); ++b) {
            d += decoded_[b];
            t += total_[b];
        }
        return t ? static_cast<double>(d) / t : 0.0;
    }

private:
    double bin_width_;
    double range_;
    std::vector<std::uint64_t> decoded_;
    std::vector<std::uint64_t> total_;
};

/// Update delay per ordered (source, destination) link. Times are integer
/// milliseconds; gaps are pooled in a histogram.
class UdTracker {
public:
    void add_reception(VehicleId src, VehicleId dst, std::int64_t t_ms)
    {
        const auto key = std::make_pair(src, dst);
        auto [it, inserted] = last_.try_emplace(key, t_ms);
        if (!inserted) {
            const std::int64_t gap = t_ms - it->second;
            if (gap <= 0)
                throw std::invalid_argument("update delay gap must be positive");
            ++gaps_[gap];
            ++count_;
            it->second = t_ms;
        }
    }

    /// Gap histograms add; per-link state of `other` is not carried over.
    void merge(const UdTracker& other)
    {
        for (const auto& [gap, n] : other.gaps_)
            gaps_[gap] += n;
        count_ += other.count_;
    }

    std::uint64_t count() const { return count_; }
    const std::map<std::int64_t, std::uint64_t>& histogram_ms() const { return gaps_; }

    /// Nearest-rank quantile in seconds.
    double percentile(double q) const
    {
        if (count_ == 0)
            throw std::runtime_error("no update-delay samples");
        if (!(q > 0.0 && q <= 1.0))
            throw std::invalid_argument("quantile must be in (0, 1]");
        auto rank = static_cast<std::uint64_t>(std::ceil(q * static_cast<double>(count_) - 1e-9));
        rank = std::clamp<std::uint64_t>(rank, 1, count_);
        std::uint64_t seen = 0;
        for (const auto& [gap, n] : gaps_) {
            seen += n;
            if (seen >= rank)
                return gap / 1000.0;
        }
        return gaps_.rbegin()->first / 1000.0;
    }

private:
    struct PairHash {
        std::size_t operator()(const std::pair<VehicleId, VehicleId>& p) const
        {
            return std::hash<std::uint64_t>{}(static_cast<std::uint64_t>(p.first) * 0x9e3779b97f4a7c15ULL ^
                                              static_cast<std::uint64_t>(p.second));
        }
    };
    std::unordered_map<std::pair<VehicleId, VehicleId>, std::int64_t, PairHash> last_;
    std::map<std::int64_t, std::uint64_t> gaps_;
    std::uint64_t count_ = 0;
};

inline double ud_percentile(const UdTracker& ud, double q) { return ud.percentile(q); }

/// Accounts one beacon of `src` generated at `t_ms`: every neighbour within
/// the awareness range counts once, decoded or not.
inline void record_beacon(PrrAccumulator& prr, UdTracker& ud, std::size_t src, std::span<const RxOutcome> outcomes,
                          const ScenarioSnapshot& snap, double awareness_m, std::int64_t t_ms)
{
    for (const RxOutcome& o : outcomes) {
        if (o.src != src)
            continue;
        const double d = snap.distance(o.src, o.dst);
        if (d > awareness_m)
            continue;
        prr.add(d, o.decoded);
        if (o.decoded)
            ud.add_reception(snap.ids[o.src], snap.ids[o.dst], t_ms);
    }
}

/// Sparse received-power table: for each transmitter, (receiver, mW) sorted
/// by receiver index.
struct GainTable {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> out;

    std::size_t size() const { return out.size(); }

    double gain(std::size_t from, std::size_t to) const
    {
        const auto& l = out[from];
        auto it = std::lower_bound(l.begin(), l.end(), static_cast<std::uint32_t>(to),
                                   [](const auto& e, std::uint32_t v) { return e.first < v; });
        return it != l.end() && it->first == to ? it->second : 0.0;
    }

    static GainTable from(const ChannelRealization& ch)
    {
        GainTable t;
        t.out.resize(ch.size());
        for (std::size_t i = 0; i < ch.size(); ++i) {
            for (const Link& l : ch.links(i))
                t.out[i].emplace_back(l.peer, l.rx_mw);
            std::sort(t.out[i].begin(), t.out[i].end());
        }
        return t;
    }

    /// `mw[i][j]` = power received by j from i; zeros are dropped.
    static GainTable from_dense(const std::vector<std::vector<double>>& mw)
    {
        GainTable t;
        t.out.resize(mw.size());
        for (std::size_t i = 0; i < mw.size(); ++i)
            for (std::size_t j = 0; j < mw[i].size(); ++j)
                if (i != j && mw[i][j] > 0.0)
                    t.out[i].emplace_back(static_cast<std::uint32_t>(j), mw[i][j]);
        return t;
    }
};

struct HiddenNodeInstant {
    double probability = 0.0;        // mean of #H/#I over pairs with #I > 0
    std::uint64_t contributing_pairs = 0;
    bool zero_pairs = true;
    double bin_width_m = 10.0;
    std::vector<double> bin_ratio_sum;
    std::vector<std::uint64_t> bin_pairs;
};

/// Hidden-node statistics of one instant.
///   D_a  = { b : psi_ab / P_n > gamma }
///   I_ab = { c != a, b : psi_ab / (P_n + psi_cb) < gamma }
///   H_ab = { h in I_ab : psi_ha / P_n < gamma }
/// Pairs with empty I_ab are skipped; the remaining ratios are averaged.
inline HiddenNodeInstant hidden_node_probability(const ScenarioSnapshot& snap, const GainTable& gains, double noise_mw,
                                                 double gamma, double bin_width_m = 10.0, double max_distance_m = 2000.0)
{
    const std::size_t n = snap.size();
    HiddenNodeInstant res;
    res.bin_width_m = bin_width_m;
    const auto bins = static_cast<std::size_t>(std::ceil(max_distance_m / bin_width_m));
    res.bin_ratio_sum.assign(bins, 0.0);
    res.bin_pairs.assign(bins, 0);

    std::vector<std::vector<std::pair<std::uint32_t, double>>> incoming(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [j, mw] : gains.out[i])
            incoming[j].emplace_back(static_cast<std::uint32_t>(i), mw);

    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (const auto& [b, psi_ab] : gains.out[a]) {
            if (!(psi_ab / noise_mw > gamma))
                continue;
            std::uint64_t interferers = 0, hidden = 0;
            for (const auto& [c, psi_cb] : incoming[b]) {
                if (c == a)
                    continue;
                if (psi_ab / (noise_mw + psi_cb) < gamma) {
                    ++interferers;
                    if (gains.gain(c, a) / noise_mw < gamma)
                        ++hidden;
                }
            }
            if (interferers == 0)
                continue;
            const double ratio = static_cast<double>(hidden) / interferers;
            sum += ratio;
            ++res.contributing_pairs;
            const auto bin = static_cast<std::size_t>(snap.distance(a, b) / bin_width_m);
            if (bin < bins) {
                res.bin_ratio_sum[bin] += ratio;
                ++res.bin_pairs[bin];
            }
        }
    }
    res.zero_pairs = res.contributing_pairs == 0;
    res.probability = res.zero_pairs ? 0.0 : sum / res.contributing_pairs;
    return res;
}

/// Average over instants; instants without any interfered pair are skipped.
class HiddenNodeAccumulator {
public:
    void add(const HiddenNodeInstant& inst)
    {
        if (bin_pairs_.empty()) {
            bin_width_ = inst.bin_width_m;
            bin_ratio_sum_.assign(inst.bin_ratio_sum.size(), 0.0);
            bin_pairs_.assign(inst.bin_pairs.size(), 0);
        }
        if (inst.zero_pairs)
            return;
        prob_sum_ += inst.probability;
        ++instants_;
        for (std::size_t b = 0; b < bin_pairs_.size() && b < inst.bin_pairs.size(); ++b) {
            bin_ratio_sum_[b] += inst.bin_ratio_sum[b];
            bin_pairs_[b] += inst.bin_pairs[b];
        }
    }

    std::uint64_t instants() const { return instants_; }
    double probability() const { return instants_ ? prob_sum_ / instants_ : 0.0; }
    double bin_width() const { return bin_width_; }
    std::size_t bins() const { return bin_pairs_.size(); }
    std::uint64_t pairs(std::size_t b) const { return bin_pairs_[b]; }
    double bin_probability(std::size_t b) const { return bin_pairs_[b] ? bin_ratio_sum_[b] / bin_pairs_[b] : 0.0; }

private:
    double bin_width_ = 10.0;
    double prob_sum_ = 0.0;
    std::uint64_t instants_ = 0;
    std::vector<double> bin_ratio_sum_;
    std::vector<std::uint64_t> bin_pairs_;
};

}  // namespace cv2x
