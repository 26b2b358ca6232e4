#pragma once

// Closed-form statistics of the SPS counter process.
//
// TBE: one counter draw, uniform on [n_min, n_max] beacon periods.
// TBC: time before the BR actually changes,
//   P_TBC(n) = (1 - p_k) sum_{i>=1} p_k^{i-1} (P_TBE^{*i})(n)
// evaluated as a single inverse transform of sum_i w_i X^i, X = DFT(P_TBE),
// truncated after I terms with p_k^I < eps.
// Probability of a change inside a window of n* periods starting at a
// uniformly random period of the current hold:
//   P_r(n*) = 1 - sum_{n >= n*} (n - n*) / n * P_TBC(n)

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "cv2x/errors.hpp"
#include "cv2x/rng.hpp"

namespace cv2x {

/// In-place iterative radix-2 transform. `a.size()` must be a power of two.
inline void fft(std::vector<std::complex<double>>& a, bool inverse)
{
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::size_t half = len / 2;
        // Twiddles from direct evaluation rather than repeated multiplication,
        // so rounding does not accumulate along the stage.
        std::vector<std::complex<double>> w(half);
        for (std::size_t k = 0; k < half; ++k)
            w[k] = std::polar(1.0, ang * static_cast<double>(k));
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + half] * w[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
    if (inverse)
        for (auto& x : a)
            x /= static_cast<double>(n);
}

inline std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

/// Linear convolution through zero-padded transforms.
inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.empty() || b.empty())
        return {};
    const std::size_t out = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(out);
    std::vector<std::complex<double>> fa(a.begin(), a.end()), fb(b.begin(), b.end());
    fa.resize(n);
    fb.resize(n);
    fft(fa, false);
    fft(fb, false);
    for (std::size_t i = 0; i < n; ++i)
        fa[i] *= fb[i];
    fft(fa, true);
    std::vector<double> r(out);
    for (std::size_t i = 0; i < out; ++i)
        r[i] = fa[i].real();
    return r;
}

/// p[n] = probability of a hold of n beacon periods; p[0] is always 0.
struct HoldTimeDistribution {
    std::vector<double> p;
    double truncation_mass = 0.0;  // probability beyond the stored support
    int terms = 1;

    std::size_t n_max() const { return p.empty() ? 0 : p.size() - 1; }

    double mass() const
    {
        double s = 0.0;
        for (double x : p)
            s += x;
        return s;
    }

    double mean() const
    {
        double s = 0.0;
        for (std::size_t n = 0; n < p.size(); ++n)
            s += static_cast<double>(n) * p[n];
        return s;
    }
};

enum class TbeForm { uniform, one_over_n };

inline TbeForm parse_tbe_form(const std::string& s)
{
    if (s == "uniform")
        return TbeForm::uniform;
    if (s == "one_over_n")
        return TbeForm::one_over_n;
    throw ConfigError("tbe_form must be uniform or one_over_n, got '" + s + "'");
}

inline const char* to_string(TbeForm f) { return f == TbeForm::uniform ? "uniform" : "one_over_n"; }

/// One counter draw. `one_over_n` weights n by 1/n and renormalizes.
inline HoldTimeDistribution tbe_distribution(int n_min, int n_max, TbeForm form = TbeForm::uniform)
{
    if (n_min < 1 || n_max < n_min)
        throw ConfigError("need 1 <= n_min <= n_max");
    HoldTimeDistribution d;
    d.p.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    if (form == TbeForm::uniform) {
        for (int n = n_min; n <= n_max; ++n)
            d.p[n] = 1.0 / (n_max - n_min + 1);
    } else {
        double z = 0.0;
        for (int n = n_min; n <= n_max; ++n)
            z += 1.0 / n;
        for (int n = n_min; n <= n_max; ++n)
            d.p[n] = (1.0 / n) / z;
    }
    return d;
}

inline HoldTimeDistribution tbc_distribution(int n_min, int n_max, double p_keep, double eps = 1e-6,
                                             TbeForm form = TbeForm::uniform)
{
    if (!(p_keep >= 0.0) || p_keep >= 1.0) {
        if (p_keep == 1.0)
            throw std::domain_error("p_keep = 1 gives an infinite hold time");
        throw ConfigError("p_keep must be in [0, 1)");
    }
    if (!(eps > 0.0) || eps >= 1.0)
        throw ConfigError("eps must be in (0, 1)");
    const HoldTimeDistribution tbe = tbe_distribution(n_min, n_max, form);
    if (p_keep == 0.0)
        return tbe;

    int terms = static_cast<int>(std::ceil(std::log(eps) / std::log(p_keep)));
    if (std::pow(p_keep, terms) >= eps)
        ++terms;
    terms = std::max(terms, 1);

    const std::size_t support = static_cast<std::size_t>(terms) * static_cast<std::size_t>(n_max) + 1;
    const std::size_t len = next_pow2(support);
    std::vector<std::complex<double>> x(len);
    for (std::size_t n = 0; n < tbe.p.size(); ++n)
        x[n] = tbe.p[n];
    fft(x, false);

    std::vector<std::complex<double>> acc(len);
    for (std::size_t k = 0; k < len; ++k) {
        // Horner form of sum_{i=1..I} (1-p) p^{i-1} X^i
        std::complex<double> s = 0.0;
        for (int i = terms; i >= 1; --i)
            s = (s + (1.0 - p_keep) * std::pow(p_keep, i - 1)) * x[k];
        acc[k] = s;
    }
    fft(acc, true);

    HoldTimeDistribution d;
    d.terms = terms;
    d.truncation_mass = std::pow(p_keep, terms);
    d.p.assign(support, 0.0);
    for (std::size_t n = 1; n < support; ++n)
        d.p[n] = std::max(acc[n].real(), 0.0);
    // Below n_min the exact value is zero; leave no transform residue there.
    for (std::size_t n = 0; n < std::min<std::size_t>(support, static_cast<std::size_t>(n_min)); ++n)
        d.p[n] = 0.0;
    return d;
}

struct ReallocationProbability {
    double value = 0.0;
    double error_bound = 0.0;  // true value lies in [value - error_bound, value]
};

inline ReallocationProbability reallocation_probability(const HoldTimeDistribution& dist, int n_star)
{
    if (n_star < 1)
        throw std::invalid_argument("n_star must be >= 1");
    double keep = 0.0;
    for (std::size_t n = static_cast<std::size_t>(n_star); n < dist.p.size(); ++n)
        keep += (static_cast<double>(n) - n_star) / static_cast<double>(n) * dist.p[n];
    return {1.0 - keep, dist.truncation_mass};
}

/// c[n] = P(hold > n) for n = 0..n_max.
inline std::vector<double> tbc_ccdf(const HoldTimeDistribution& dist)
{
    std::vector<double> c(dist.p.size(), 0.0);
    double tail = dist.truncation_mass;
    for (std::size_t n = dist.p.size(); n-- > 0;) {
        c[n] = tail;
        tail += dist.p[n];
    }
    return c;
}

/// Monte Carlo of the counter process: draw a counter, at expiry keep with
/// probability p_keep and draw again. Returns a histogram of hold lengths.
inline std::vector<std::uint64_t> sample_hold_times(int n_min, int n_max, double p_keep, std::uint64_t samples,
                                                    Rng& rng)
{
    std::vector<std::uint64_t> hist;
    for (std::uint64_t s = 0; s < samples; ++s) {
        std::size_t len = 0;
        do {
            len += static_cast<std::size_t>(rng.uniform_int(n_min, n_max));
        } while (rng.bernoulli(p_keep));
        if (len >= hist.size())
            hist.resize(len + 1, 0);
        ++hist[len];
    }
    return hist;
}

/// Total-variation distance between `dist` and an empirical histogram.
/// Truncated mass counts as disagreement with whatever falls beyond.
inline double total_variation(const HoldTimeDistribution& dist, const std::vector<std::uint64_t>& hist)
{
    std::uint64_t total = 0;
    for (auto h : hist)
        total += h;
    if (total == 0)
        throw std::invalid_argument("empty histogram");
    const std::size_t n = std::max(dist.p.size(), hist.size());
    double tv = 0.0;
    double beyond_emp = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = k < hist.size() ? static_cast<double>(hist[k]) / total : 0.0;
        if (k < dist.p.size())
            tv += std::abs(dist.p[k] - e);
        else
            beyond_emp += e;
    }
    tv += std::abs(dist.truncation_mass - beyond_emp);
    return 0.5 * tv;
}

/// Monte Carlo of P_r: sample a hold length l, a uniform starting offset
/// u in {0..l-1} of the observation window inside it, and count a change
/// when the hold ends within the window (l - u <= n_star).
inline double sample_reallocation_probability(int n_min, int n_max, double p_keep, int n_star,
                                              std::uint64_t samples, Rng& rng)
{
    std::uint64_t changes = 0;
    for (std::uint64_t s = 0; s < samples; ++s) {
        std::int64_t len = 0;
        do {
            len += rng.uniform_int(n_min, n_max);
        } while (rng.bernoulli(p_keep));
        const std::int64_t u = rng.uniform_int(std::int64_t{0}, len - 1);
        if (len - u <= n_star)
            ++changes;
    }
    return static_cast<double>(changes) / static_cast<double>(samples);
}

}  // namespace cv2x
