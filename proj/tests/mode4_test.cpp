#include "cv2x/mode4.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

using namespace cv2x;

TEST(PowerThreshold, FullTable)
{
    EXPECT_EQ(power_threshold(0, 0), -128.0);
    EXPECT_EQ(power_threshold(7, 7), -2.0);
    EXPECT_EQ(power_threshold(3, 4), -72.0);
    for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
            EXPECT_EQ(power_threshold(a, b), -128.0 + 2.0 * (a * 8 + b));
    EXPECT_THROW(power_threshold(8, 0), ConfigError);
    EXPECT_THROW(power_threshold(0, -1), ConfigError);
}

TEST(CandidateCount, Ceiling)
{
    EXPECT_EQ(candidate_count(0.2, 100), 20);
    EXPECT_EQ(candidate_count(0.2, 200), 40);
    EXPECT_EQ(candidate_count(0.2, 24), 5);
    EXPECT_EQ(candidate_count(0.2, 16), 4);
    EXPECT_EQ(candidate_count(1.0, 7), 7);
}

TEST(Mode4Params, Validation)
{
    const auto grid = make_grid_config(7);
    Mode4Params p;
    EXPECT_NO_THROW(p.validate(grid));
    p.p_keep = 0.9;
    EXPECT_THROW(p.validate(grid), ConfigError);
    p.nonstandard = true;
    EXPECT_NO_THROW(p.validate(grid));
    p = Mode4Params{};
    p.t1 = 5;
    EXPECT_THROW(p.validate(grid), ConfigError);
    p = Mode4Params{};
    p.t2 = 10;
    EXPECT_THROW(p.validate(grid), ConfigError);
    p.nonstandard = true;
    EXPECT_NO_THROW(p.validate(grid));
    p = Mode4Params{};
    p.n_min = 16;
    EXPECT_THROW(p.validate(grid), ConfigError);
    p = Mode4Params{};
    p.r_sel = 0.0;
    EXPECT_THROW(p.validate(grid), ConfigError);
}

namespace {

// Raw measurement log kept independently of SensingMemory.
struct RawSample {
    Tti tti;
    bool monitored;
    std::vector<double> s_rssi;  // per freq slot, mW
    std::vector<double> rsrp;    // per freq slot, mW, 0 = no SCI
};

constexpr double kUnit = 1.0 / 1099511627776.0;  // 2^-40: sums stay exact

std::vector<RawSample> random_log(const GridConfig& grid, Tti from, Tti to, Rng& rng)
{
    std::vector<RawSample> log;
    for (Tti t = from; t <= to; ++t) {
        if (rng.bernoulli(0.1))
            continue;  // nothing recorded at all
        RawSample s{t, !rng.bernoulli(0.05), {}, {}};
        for (int f = 0; f < grid.brs_per_tti; ++f) {
            s.s_rssi.push_back(rng.uniform_int(1, 50) * kUnit);
            s.rsrp.push_back(rng.bernoulli(0.4) ? rng.uniform_int(1, 40) * kUnit : 0.0);
        }
        log.push_back(s);
    }
    return log;
}

void replay(SensingMemory& m, const std::vector<RawSample>& log)
{
    for (const auto& s : log) {
        if (s.monitored)
            m.record_subframe(s.tti, s.s_rssi, s.rsrp);
        else
            m.record_unmonitored(s.tti);
    }
}

std::vector<BrIndex> brute_force(const std::vector<RawSample>& log, const Mode4Params& p, const GridConfig& grid,
                                 Tti now, double noise, double& final_th)
{
    struct Stat {
        int r;
        double rssi;
        double rsrp;
        bool reserved;
    };
    std::vector<int> window;
    for (int r = 0; r < br_count(grid); ++r) {
        const int s = r / grid.brs_per_tti;
        const int delay = static_cast<int>(((s - now - 1) % grid.beacon_period_ms + grid.beacon_period_ms) %
                                           grid.beacon_period_ms) + 1;
        if (delay >= p.t1 && delay <= p.t2)
            window.push_back(r);
    }
    std::vector<Stat> monitored;
    for (int r : window) {
        const int s = r / grid.brs_per_tti, f = r % grid.brs_per_tti;
        bool ok = true;
        double sum = 0, sum_rsrp = 0;
        int n = 0, n_rsrp = 0;
        Tti latest = -1;
        bool reserved = false;
        for (const auto& x : log) {
            if (x.tti <= now - p.t_sense_ms || x.tti > now || x.tti % grid.beacon_period_ms != s)
                continue;
            if (!x.monitored) {
                ok = false;
                continue;
            }
            sum += x.s_rssi[f];
            ++n;
            if (x.rsrp[f] > 0) {
                sum_rsrp += x.rsrp[f];
                ++n_rsrp;
            }
            if (x.tti > latest) {
                latest = x.tti;
                reserved = x.rsrp[f] > 0;
            }
        }
        if (ok)
            monitored.push_back({r, n ? sum / n : noise, n_rsrp ? sum_rsrp / n_rsrp : 0.0, reserved});
    }
    const int n_r = candidate_count(p.r_sel, br_count(grid));
    std::vector<Stat> surv;
    double th = p.p_th_dbm;
    for (;;) {
        surv.clear();
        for (const auto& m : monitored)
            if (!(m.reserved && m.rsrp > dbm_to_mw(th)))
                surv.push_back(m);
        if (static_cast<int>(surv.size()) >= n_r || surv.size() == monitored.size())
            break;
        th += 3.0;
    }
    final_th = th;
    std::sort(surv.begin(), surv.end(),
              [](const Stat& a, const Stat& b) { return a.rssi != b.rssi ? a.rssi < b.rssi : a.r < b.r; });
    std::vector<BrIndex> out;
    for (std::size_t k = 0; k < surv.size() && static_cast<int>(k) < n_r; ++k)
        out.push_back(br_from_flat(grid, surv[k].r));
    return out;
}

GridConfig small_grid()
{
    GridConfig g;
    g.beacon_period_ms = 20;
    g.brs_per_tti = 2;
    g.subchannels_per_br = 2;
    g.validate();
    return g;
}

}  // namespace

TEST(CandidateSet, MatchesExhaustiveResort)
{
    const auto grid = small_grid();
    Rng rng(42);
    for (int trial = 0; trial < 300; ++trial) {
        Mode4Params p;
        p.nonstandard = true;
        p.t_sense_ms = 20 * rng.uniform_int(1, 4) - rng.uniform_int(0, 5);
        p.t1 = rng.uniform_int(1, 4);
        p.t2 = rng.uniform_int(p.t1 + 1, 20);
        p.r_sel = rng.uniform(0.05, 0.6);
        // Threshold around the RSRP scale so exclusion and escalation both happen.
        p.p_th_dbm = mw_to_dbm(rng.uniform_int(1, 40) * kUnit);
        const Tti now = rng.uniform_int(100, 400);
        const auto log = random_log(grid, now - 120, now, rng);
        SensingMemory mem(grid, p.t_sense_ms);
        replay(mem, log);
        const double noise = 0.5 * kUnit;

        double th = 0.0;
        const auto expect = brute_force(log, p, grid, now, noise, th);
        Rng unused(0);
        const auto got = candidate_set(mem, p, grid, now, noise, unused);
        if (got.cold_start)
            continue;  // whole window unmonitored; covered separately
        EXPECT_EQ(got.brs, expect) << "trial " << trial;
        EXPECT_DOUBLE_EQ(got.final_p_th_dbm, th);
    }
}

TEST(CandidateSet, OldSamplesAreIgnored)
{
    const auto grid = small_grid();
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        Mode4Params p;
        p.nonstandard = true;
        p.t_sense_ms = 60;
        p.t1 = 1;
        p.t2 = 20;
        const Tti now = 500;
        SensingMemory mem(grid, p.t_sense_ms);
        replay(mem, random_log(grid, now - 59, now, rng));
        Rng r1(1), r2(1);
        const auto before = candidate_set(mem, p, grid, now, kUnit, r1);
        for (int k = 0; k < 300; ++k) {
            SenseSample s;
            s.tti = rng.uniform_int(0, static_cast<int>(now - p.t_sense_ms));
            s.br = {subframe_of(grid, s.tti), rng.uniform_int(0, 1)};
            s.s_rssi_dbm = rng.uniform(-120, 0);
            if (rng.bernoulli(0.5))
                s.rsrp_dbm = rng.uniform(-120, 0);
            mem.record(s);
        }
        const auto after = candidate_set(mem, p, grid, now, kUnit, r2);
        EXPECT_EQ(before.brs, after.brs);
        EXPECT_EQ(before.final_p_th_dbm, after.final_p_th_dbm);
    }
}

TEST(CandidateSet, ExpiredMemoryIsColdAgain)
{
    const auto grid = small_grid();
    SensingMemory mem(grid, 40);
    std::vector<double> rssi{1.0, 1.0}, rsrp{0.0, 0.0};
    mem.record_subframe(100, rssi, rsrp);
    EXPECT_FALSE(mem.cold(100));
    EXPECT_FALSE(mem.cold(139));
    EXPECT_TRUE(mem.cold(140));
}

TEST(CandidateSet, WindowAndExclusionInvariants)
{
    const auto grid = make_grid_config(7);
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Mode4Params p;
        p.t2 = rng.uniform_int(20, 100);
        p.t1 = rng.uniform_int(1, 4);
        const Tti now = rng.uniform_int(2000, 5000);
        SensingMemory mem(grid, p.t_sense_ms);
        for (Tti t = now - 1000; t <= now; ++t) {
            if (rng.bernoulli(0.01)) {
                mem.record_unmonitored(t);
                continue;
            }
            std::vector<double> rssi(2), rsrp(2);
            for (int f = 0; f < 2; ++f) {
                rssi[f] = dbm_to_mw(rng.uniform(-100, -60));
                rsrp[f] = rng.bernoulli(0.6) ? dbm_to_mw(rng.uniform(-115, -70)) : 0.0;
            }
            mem.record_subframe(t, rssi, rsrp);
        }
        const double noise = dbm_to_mw(-99.4);
        const auto cs = candidate_set(mem, p, grid, now, noise, rng);
        ASSERT_FALSE(cs.cold_start);
        EXPECT_LE(static_cast<int>(cs.brs.size()), cs.n_r);
        double prev = -1.0;
        for (const BrIndex& b : cs.brs) {
            const int d = subframe_delay(grid, now, b.subframe);
            EXPECT_GE(d, p.t1);
            EXPECT_LE(d, p.t2);
            const auto v = mem.view(flat_index(grid, b), now, noise);
            EXPECT_TRUE(v.monitored);
            EXPECT_FALSE(v.reserved && v.mean_rsrp_mw > dbm_to_mw(cs.final_p_th_dbm));
            EXPECT_GE(v.mean_s_rssi_mw, prev);
            prev = v.mean_s_rssi_mw;
        }
    }
}

TEST(CandidateSet, EscalatesThresholdInStepsOf3dB)
{
    const auto grid = small_grid();
    Mode4Params p;
    p.nonstandard = true;
    p.t1 = 1;
    p.t2 = 20;
    p.t_sense_ms = 20;
    p.r_sel = 0.5;
    SensingMemory mem(grid, p.t_sense_ms);
    for (Tti t = 81; t <= 100; ++t) {
        std::vector<double> rssi{dbm_to_mw(-90.0), dbm_to_mw(-90.0)};
        std::vector<double> rsrp{dbm_to_mw(-100.0), dbm_to_mw(-100.0)};
        mem.record_subframe(t, rssi, rsrp);
    }
    Rng rng(1);
    const auto cs = candidate_set(mem, p, grid, 100, dbm_to_mw(-99.0), rng);
    // -110 -> -107 -> -104 -> -101 -> -98: first threshold above -100 dBm.
    EXPECT_DOUBLE_EQ(cs.final_p_th_dbm, -98.0);
    EXPECT_EQ(cs.brs.size(), 20u);
}

TEST(CandidateSet, ColdStartIsUniformOverWindow)
{
    const auto grid = make_grid_config(7);
    Mode4Params p;
    SensingMemory mem(grid, p.t_sense_ms);
    Rng rng(17);
    std::map<int, int> hits;
    const int draws = 20000;
    for (int k = 0; k < draws; ++k) {
        const auto cs = candidate_set(mem, p, grid, 1000, 1e-10, rng);
        ASSERT_TRUE(cs.cold_start);
        ASSERT_EQ(cs.brs.size(), 40u);
        const BrIndex b = mac_select(cs.brs, rng);
        ++hits[flat_index(grid, b)];
    }
    EXPECT_EQ(hits.size(), 200u);
    for (const auto& [r, n] : hits)
        EXPECT_NEAR(n / static_cast<double>(draws), 1.0 / 200, 0.0025) << r;
}

TEST(CandidateSet, TwentyFourBrGrid)
{
    // Four BRs per subframe over six subframes (R = 24); the window keeps
    // four subframes, i.e. 16 BRs.
    GridConfig g;
    g.beacon_period_ms = 6;
    g.brs_per_tti = 4;
    g.subchannels_per_br = 1;
    g.validate();
    Mode4Params p;
    p.nonstandard = true;
    p.t1 = 1;
    p.t2 = 4;
    SensingMemory mem(g, p.t_sense_ms);
    Rng rng(1);
    auto cs = candidate_set(mem, p, g, 0, 1e-10, rng);
    EXPECT_EQ(cs.n_r, 5);
    p.nr_basis = NrBasis::window;
    cs = candidate_set(mem, p, g, 0, 1e-10, rng);
    EXPECT_EQ(cs.n_r, 4);
    EXPECT_EQ(cs.brs.size(), 4u);
}

TEST(Mac, SelectUniform)
{
    Rng rng(99);
    std::vector<BrIndex> one{{3, 1}};
    EXPECT_EQ(mac_select(one, rng), (BrIndex{3, 1}));
    EXPECT_THROW(mac_select(std::span<const BrIndex>{}, rng), std::logic_error);

    std::vector<BrIndex> c;
    for (int k = 0; k < 20; ++k)
        c.push_back({k, 0});
    std::vector<int> hits(20, 0);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k)
        ++hits[mac_select(c, rng).subframe];
    for (int h : hits)
        EXPECT_NEAR(h / static_cast<double>(draws), 0.05, 0.005);
}

TEST(Mac, CounterUniform)
{
    Rng rng(5);
    Mode4Params p;
    std::vector<int> hits(16, 0);
    const int draws = 110000;
    for (int k = 0; k < draws; ++k) {
        const int c = draw_reselection_counter(p, rng);
        ASSERT_GE(c, 5);
        ASSERT_LE(c, 15);
        ++hits[c];
    }
    for (int c = 5; c <= 15; ++c)
        EXPECT_NEAR(hits[c] / static_cast<double>(draws), 1.0 / 11, 0.005);
}

TEST(Mac, BeaconPeriodEnd)
{
    const auto grid = make_grid_config(7);
    Mode4Params p;
    Rng rng(1);
    Mode4State st(grid, p);
    st.reselection_counter = 3;
    EXPECT_EQ(on_beacon_period_end(st, p, rng), SpsAction::keep);
    EXPECT_EQ(st.reselection_counter, 2);

    p.p_keep = 0.0;
    for (int k = 0; k < 1000; ++k) {
        st.reselection_counter = 1;
        EXPECT_EQ(on_beacon_period_end(st, p, rng), SpsAction::reselect);
        EXPECT_GE(st.reselection_counter, 5);
        EXPECT_LE(st.reselection_counter, 15);
    }

    p.p_keep = 0.8;
    int kept = 0;
    const int trials = 100000;
    for (int k = 0; k < trials; ++k) {
        st.reselection_counter = 1;
        if (on_beacon_period_end(st, p, rng) == SpsAction::keep)
            ++kept;
        EXPECT_GE(st.reselection_counter, 5);
    }
    EXPECT_NEAR(kept / static_cast<double>(trials), 0.8, 0.01);
}

TEST(Mac, HoldLengthsFollowTheCounter)
{
    // Drive the state machine alone and check the mean hold against
    // mean(counter) / (1 - p_keep).
    const auto grid = make_grid_config(7);
    Mode4Params p;
    p.p_keep = 0.4;
    Rng rng(8);
    Mode4State st(grid, p);
    st.reselection_counter = draw_reselection_counter(p, rng);
    long holds = 0, periods = 0;
    int len = 1;
    for (int k = 0; k < 400000; ++k) {
        if (on_beacon_period_end(st, p, rng) == SpsAction::reselect) {
            ++holds;
            periods += len;
            len = 1;
        } else {
            ++len;
        }
    }
    EXPECT_NEAR(static_cast<double>(periods) / holds, 10.0 / 0.6, 0.15);
}
