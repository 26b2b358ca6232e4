#include "cv2x/metrics.hpp"

#include <gtest/gtest.h>

using namespace cv2x;

TEST(Prr, Bins)
{
    PrrAccumulator acc(10.0, 200.0);
    EXPECT_EQ(acc.bins(), 20u);
    acc.add(0.0, true);
    acc.add(9.99, false);
    acc.add(10.0, true);
    acc.add(200.0, true);
    acc.add(200.5, true);
    acc.add(-1.0, true);
    EXPECT_EQ(acc.total(0), 2u);
    EXPECT_EQ(acc.decoded(0), 1u);
    EXPECT_EQ(acc.total(1), 1u);
    EXPECT_EQ(acc.total(19), 1u);
    EXPECT_DOUBLE_EQ(acc.prr(0), 0.5);
    EXPECT_DOUBLE_EQ(acc.bin_center(3), 35.0);
    EXPECT_DOUBLE_EQ(acc.pooled(), 3.0 / 4.0);
    EXPECT_THROW(PrrAccumulator(0.0, 100.0), std::invalid_argument);
}

TEST(Prr, MergeMatchesSingleAccumulator)
{
    Rng rng(3);
    PrrAccumulator all, a, b;
    std::uint64_t dec = 0, tot = 0;
    for (int i = 0; i < 5000; ++i) {
        const double d = rng.uniform(0.0, 200.0);
        const bool ok = rng.bernoulli(1.0 - d / 250.0);
        all.add(d, ok);
        (i % 2 ? a : b).add(d, ok);
        dec += ok;
        ++tot;
    }
    a.merge(b);
    for (std::size_t k = 0; k < all.bins(); ++k) {
        EXPECT_EQ(a.total(k), all.total(k));
        EXPECT_EQ(a.decoded(k), all.decoded(k));
    }
    EXPECT_DOUBLE_EQ(all.pooled(), static_cast<double>(dec) / tot);
    EXPECT_THROW(a.merge(PrrAccumulator(20.0, 200.0)), std::invalid_argument);
}

TEST(UpdateDelay, GapBetweenDecodes)
{
    UdTracker ud;
    ud.add_reception(1, 2, 500);
    EXPECT_EQ(ud.count(), 0u);
    ud.add_reception(1, 2, 800);
    EXPECT_EQ(ud.count(), 1u);
    EXPECT_NEAR(ud.percentile(0.5), 0.3, 1e-12);
    // Links are directional.
    ud.add_reception(2, 1, 900);
    EXPECT_EQ(ud.count(), 1u);
    EXPECT_THROW(ud.add_reception(1, 2, 800), std::invalid_argument);
}

TEST(UpdateDelay, NearestRank)
{
    UdTracker ud;
    std::int64_t t = 0;
    ud.add_reception(1, 2, t);
    for (int i = 0; i < 9; ++i)
        ud.add_reception(1, 2, t += 100);
    ud.add_reception(1, 2, t += 500);
    EXPECT_EQ(ud.count(), 10u);
    EXPECT_NEAR(ud.percentile(0.9), 0.1, 1e-12);
    EXPECT_NEAR(ud.percentile(0.91), 0.5, 1e-12);
    EXPECT_NEAR(ud.percentile(1.0), 0.5, 1e-12);
    EXPECT_NEAR(ud_percentile(ud, 0.1), 0.1, 1e-12);
    EXPECT_THROW(ud.percentile(0.0), std::invalid_argument);
    EXPECT_THROW(ud.percentile(1.5), std::invalid_argument);
    EXPECT_THROW(UdTracker{}.percentile(0.5), std::runtime_error);
}

TEST(UpdateDelay, MonotoneInQuantileAndMerge)
{
    Rng rng(8);
    UdTracker a, b;
    std::int64_t ta = 0, tb = 0;
    for (int i = 0; i < 2000; ++i) {
        a.add_reception(i % 7, 100, ta += 100 * rng.uniform_int(1, 6));
        b.add_reception(i % 5, 101, tb += 100 * rng.uniform_int(1, 3));
    }
    const auto before = a.count() + b.count();
    a.merge(b);
    EXPECT_EQ(a.count(), before);
    double last = 0.0;
    for (double q = 0.01; q <= 1.0; q += 0.01) {
        const double v = a.percentile(q);
        EXPECT_GE(v, last);
        last = v;
    }
}

TEST(RecordBeacon, CountsNeighboursWithinAwareness)
{
    ScenarioSnapshot s;
    s.ids = {10, 11, 12, 13};
    s.positions = {{0, 0}, {50, 0}, {150, 0}, {400, 0}};
    std::vector<RxOutcome> out(3);
    out[0].src = 0, out[0].dst = 1, out[0].decoded = true;
    out[1].src = 0, out[1].dst = 2, out[1].decoded = false;
    out[2].src = 0, out[2].dst = 3, out[2].decoded = true;
    PrrAccumulator prr;
    UdTracker ud;
    record_beacon(prr, ud, 0, out, s, 200.0, 1000);
    record_beacon(prr, ud, 0, out, s, 200.0, 1100);
    EXPECT_EQ(prr.total(5), 2u);
    EXPECT_EQ(prr.decoded(5), 2u);
    EXPECT_EQ(prr.total(15), 2u);
    EXPECT_EQ(prr.decoded(15), 0u);
    EXPECT_DOUBLE_EQ(prr.pooled(), 0.5);
    EXPECT_EQ(ud.count(), 1u);
    EXPECT_NEAR(ud.percentile(1.0), 0.1, 1e-12);
}

namespace {

ScenarioSnapshot line(std::size_t n, double spacing)
{
    ScenarioSnapshot s;
    for (std::size_t i = 0; i < n; ++i) {
        s.ids.push_back(static_cast<VehicleId>(i));
        s.positions.push_back({spacing * static_cast<double>(i), 0.0});
    }
    return s;
}

}  // namespace

TEST(HiddenNode, TwoVehiclesHaveNoInterferedPair)
{
    const auto s = line(2, 50.0);
    const auto g = GainTable::from_dense({{0.0, 1.0}, {1.0, 0.0}});
    const auto r = hidden_node_probability(s, g, 1e-3, 2.0);
    EXPECT_TRUE(r.zero_pairs);
    EXPECT_EQ(r.contributing_pairs, 0u);
    HiddenNodeAccumulator acc;
    acc.add(r);
    EXPECT_EQ(acc.instants(), 0u);
}

TEST(HiddenNode, HandBuiltHiddenTerminal)
{
    // a and c both reach b strongly but cannot hear each other.
    const auto s = line(3, 100.0);
    const double n = 1.0;
    std::vector<std::vector<double>> mw(3, std::vector<double>(3, 0.0));
    mw[0][1] = 100.0;
    mw[2][1] = 100.0;
    const auto r = hidden_node_probability(s, GainTable::from_dense(mw), n, 2.0);
    EXPECT_FALSE(r.zero_pairs);
    EXPECT_EQ(r.contributing_pairs, 2u);
    EXPECT_DOUBLE_EQ(r.probability, 1.0);
    EXPECT_EQ(r.bin_pairs[10], 2u);

    // Once a and c hear each other, c is no longer hidden from a.
    mw[0][2] = mw[2][0] = 10.0;
    const auto r2 = hidden_node_probability(s, GainTable::from_dense(mw), n, 2.0);
    EXPECT_DOUBLE_EQ(r2.probability, 0.0);
}

TEST(HiddenNode, MatchesDenseBruteForce)
{
    Rng rng(21);
    const std::size_t n = 40;
    const auto s = line(n, 25.0);
    std::vector<std::vector<double>> mw(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && rng.bernoulli(0.7))
                mw[i][j] = std::pow(10.0, rng.uniform(-3.0, 2.0));
    const double noise = 1.0, gamma = 1.5;

    double sum = 0.0;
    std::uint64_t pairs = 0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b || !(mw[a][b] / noise > gamma))
                continue;
            int inter = 0, hid = 0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c == a || c == b || mw[c][b] == 0.0)
                    continue;
                if (mw[a][b] / (noise + mw[c][b]) < gamma) {
                    ++inter;
                    hid += mw[c][a] / noise < gamma;
                }
            }
            if (inter) {
                sum += static_cast<double>(hid) / inter;
                ++pairs;
            }
        }
    ASSERT_GT(pairs, 0u);
    const auto r = hidden_node_probability(s, GainTable::from_dense(mw), noise, gamma);
    EXPECT_EQ(r.contributing_pairs, pairs);
    EXPECT_NEAR(r.probability, sum / pairs, 1e-12);
    EXPECT_GE(r.probability, 0.0);
    EXPECT_LE(r.probability, 1.0);

    // A vanishing threshold leaves no interferer anywhere.
    const auto none = hidden_node_probability(s, GainTable::from_dense(mw), noise, 1e-12);
    EXPECT_TRUE(none.zero_pairs);
}

TEST(HiddenNode, AccumulatorAverages)
{
    HiddenNodeInstant x, y;
    x.zero_pairs = y.zero_pairs = false;
    x.probability = 0.2;
    y.probability = 0.6;
    x.bin_ratio_sum = {0.2, 0.0};
    x.bin_pairs = {1, 0};
    y.bin_ratio_sum = {1.2, 0.0};
    y.bin_pairs = {2, 0};
    HiddenNodeAccumulator acc;
    acc.add(x);
    acc.add(y);
    EXPECT_EQ(acc.instants(), 2u);
    EXPECT_NEAR(acc.probability(), 0.4, 1e-12);
    EXPECT_NEAR(acc.bin_probability(0), 1.4 / 3.0, 1e-12);
    EXPECT_EQ(acc.pairs(1), 0u);
}
