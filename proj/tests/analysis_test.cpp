#include "cv2x/analysis.hpp"

#include <gtest/gtest.h>

using namespace cv2x;

namespace {

std::vector<double> naive_convolve(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> r(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            r[i + j] += a[i] * b[j];
    return r;
}

// Direct recursion: P(n) = (1-p) TBE(n) + p sum_k TBE(k) P(n-k).
std::vector<double> tbc_by_recursion(int n_min, int n_max, double p, std::size_t len)
{
    const auto tbe = tbe_distribution(n_min, n_max).p;
    std::vector<double> out(len, 0.0);
    for (std::size_t n = 1; n < len; ++n) {
        double v = n < tbe.size() ? (1.0 - p) * tbe[n] : 0.0;
        for (std::size_t k = 1; k < tbe.size() && k < n; ++k)
            v += p * tbe[k] * out[n - k];
        out[n] = v;
    }
    return out;
}

}  // namespace

TEST(Fft, ConvolutionMatchesDirectSum)
{
    Rng rng(5);
    for (std::size_t na : {1u, 3u, 16u, 100u}) {
        std::vector<double> a(na), b(37);
        for (auto& x : a)
            x = rng.uniform(-1, 1);
        for (auto& x : b)
            x = rng.uniform(-1, 1);
        const auto got = convolve(a, b);
        const auto want = naive_convolve(a, b);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            EXPECT_NEAR(got[i], want[i], 1e-10);
    }
}

TEST(Fft, RoundTripAndErrors)
{
    std::vector<std::complex<double>> x{1, 2, 3, 4, 5, 6, 7, 8}, y = x;
    fft(y, false);
    EXPECT_NEAR(y[0].real(), 36.0, 1e-12);
    fft(y, true);
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_NEAR(std::abs(x[i] - y[i]), 0.0, 1e-12);
    std::vector<std::complex<double>> bad(6);
    EXPECT_THROW(fft(bad, false), std::invalid_argument);
    EXPECT_EQ(next_pow2(17), 32u);
    EXPECT_EQ(next_pow2(16), 16u);
}

TEST(Tbe, UniformAndOneOverN)
{
    const auto u = tbe_distribution(5, 15);
    EXPECT_NEAR(u.mass(), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(u.p[4], 0.0);
    EXPECT_DOUBLE_EQ(u.p[5], 1.0 / 11.0);
    EXPECT_NEAR(u.mean(), 10.0, 1e-12);
    const auto h = tbe_distribution(5, 15, TbeForm::one_over_n);
    EXPECT_NEAR(h.mass(), 1.0, 1e-12);
    EXPECT_NEAR(h.p[5] / h.p[10], 2.0, 1e-12);
    EXPECT_THROW(tbe_distribution(0, 5), ConfigError);
    EXPECT_THROW(tbe_distribution(6, 5), ConfigError);
    EXPECT_THROW(parse_tbe_form("geometric"), ConfigError);
    EXPECT_EQ(parse_tbe_form("one_over_n"), TbeForm::one_over_n);
}

TEST(Tbc, ZeroKeepIsTbe)
{
    const auto a = tbc_distribution(5, 15, 0.0);
    const auto b = tbe_distribution(5, 15);
    ASSERT_EQ(a.p.size(), b.p.size());
    for (std::size_t n = 0; n < a.p.size(); ++n)
        EXPECT_NEAR(a.p[n], b.p[n], 1e-12);
    EXPECT_EQ(a.truncation_mass, 0.0);
}

TEST(Tbc, MatchesRecursionAndMeanIdentity)
{
    for (double p : {0.2, 0.4, 0.8}) {
        const auto d = tbc_distribution(5, 15, p);
        const auto r = tbc_by_recursion(5, 15, p, d.p.size());
        // Exact up to the first length the dropped terms can reach.
        const std::size_t exact = static_cast<std::size_t>(d.terms + 1) * 5;
        for (std::size_t n = 0; n < d.p.size(); ++n)
            EXPECT_NEAR(d.p[n], r[n], n < exact ? 1e-12 : d.truncation_mass) << p << " " << n;
        EXPECT_LT(d.truncation_mass, 1e-6);
        EXPECT_NEAR(d.mass() + d.truncation_mass, 1.0, 1e-9);
        // E[TBC] = E[TBE] / (1 - p_k), less what the truncated tail carries.
        const double mean = 10.0 / (1.0 - p);
        EXPECT_NEAR(d.mean(), mean, 1e-4 * mean);
    }
}

TEST(Tbc, TermsAndErrors)
{
    const auto d = tbc_distribution(5, 15, 0.8);
    EXPECT_EQ(d.terms, 62);
    EXPECT_EQ(d.n_max(), 930u);
    EXPECT_THROW(tbc_distribution(5, 15, 1.0), std::domain_error);
    EXPECT_THROW(tbc_distribution(5, 15, -0.1), ConfigError);
    EXPECT_THROW(tbc_distribution(5, 15, 0.5, 0.0), ConfigError);
}

TEST(ReallocationProbability, ReferenceValues)
{
    struct Case {
        int n_min, n_max;
        double p;
        double want;
    };
    for (const Case& c : {Case{5, 15, 0.0, 0.89933}, Case{5, 15, 0.4, 0.71421}, Case{5, 15, 0.8, 0.38990},
                          Case{10, 20, 0.4, 0.53246}, Case{10, 30, 0.0, 0.55525}}) {
        const auto pr = reallocation_probability(tbc_distribution(c.n_min, c.n_max, c.p), 10);
        EXPECT_NEAR(pr.value, c.want, 1e-5) << c.n_min << "," << c.n_max << "," << c.p;
    }
}

TEST(ReallocationProbability, MonotoneAndSaturates)
{
    const auto d = tbc_distribution(5, 15, 0.4);
    double last = 0.0;
    for (int n = 1; n <= 200; ++n) {
        const double v = reallocation_probability(d, n).value;
        EXPECT_GE(v, last - 1e-15);
        last = v;
    }
    const auto e = tbc_distribution(5, 15, 0.0);
    EXPECT_NEAR(reallocation_probability(e, 15).value, 1.0, 1e-15);
    EXPECT_NEAR(reallocation_probability(e, 40).value, 1.0, 1e-15);
    EXPECT_THROW(reallocation_probability(e, 0), std::invalid_argument);
}

TEST(Ccdf, Examples)
{
    // Point mass at 7.
    const auto pm = tbc_ccdf(tbc_distribution(7, 7, 0.0));
    EXPECT_DOUBLE_EQ(pm[6], 1.0);
    EXPECT_DOUBLE_EQ(pm[7], 0.0);

    const auto c = tbc_ccdf(tbc_distribution(5, 15, 0.0));
    EXPECT_NEAR(c[0], 1.0, 1e-12);
    EXPECT_NEAR(c[4], 1.0, 1e-12);
    EXPECT_NEAR(c[14], 1.0 / 11.0, 1e-12);
    EXPECT_EQ(c[15], 0.0);

    const auto p8 = tbc_ccdf(tbc_distribution(5, 15, 0.8));
    EXPECT_NEAR(p8[100], 0.120592, 1e-5);

    // (10,30,0) sits above (5,15,0.4) early and below later; one crossing.
    const auto a = tbc_ccdf(tbc_distribution(10, 30, 0.0));
    const auto b = tbc_ccdf(tbc_distribution(5, 15, 0.4));
    int crossings = 0;
    int sign = 0;
    for (std::size_t n = 0; n < 60; ++n) {
        const double da = n < a.size() ? a[n] : 0.0;
        const double diff = da - b[n];
        if (std::abs(diff) < 1e-12)
            continue;
        const int s = diff > 0 ? 1 : -1;
        if (sign != 0 && s != sign)
            ++crossings;
        sign = s;
    }
    EXPECT_EQ(crossings, 1);
    EXPECT_GT(a[12], b[12]);
    EXPECT_LT(a[30], b[30]);
}

TEST(MonteCarlo, HoldTimesMatchTbc)
{
    Rng rng(99);
    const auto hist = sample_hold_times(5, 15, 0.4, 400000, rng);
    const double tv = total_variation(tbc_distribution(5, 15, 0.4), hist);
    EXPECT_LT(tv, 0.01);
    EXPECT_THROW(total_variation(tbc_distribution(5, 15, 0.4), {}), std::invalid_argument);
}

TEST(MonteCarlo, ReallocationProbability)
{
    Rng rng(7);
    for (double p : {0.0, 0.4, 0.8}) {
        const double mc = sample_reallocation_probability(5, 15, p, 10, 200000, rng);
        const double exact = reallocation_probability(tbc_distribution(5, 15, p), 10).value;
        EXPECT_NEAR(mc, exact, 0.01) << p;
    }
}
