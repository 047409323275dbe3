#pragma once

// Receiver operating characteristics: analytic curves from Gaussian moments and
// empirical curves from labeled sample sets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qi/detection_models.hpp"
#include "qi/error.hpp"

namespace qi::roc {

/// Standard normal tail P(Z > x). glibc erfc is a rational Chebyshev
/// expansion accurate to ~1 ulp; for x > 0 the x/sqrt2 rounding costs at most
/// ~x^2 ulp relative, below 1e-12 for x <= 38.
inline double q_function(double x)
{
    if (std::isnan(x)) {
        return x;
    }
    return 0.5 * std::erfc(x * (1.0 / std::numbers::sqrt2));
}

/// Inverse tail: x with q_function(x) == p. Bracketed Newton on log Q.
inline double q_inverse(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw PhysicsError("q_inverse: probability must lie in (0,1)");
    }
    if (p == 0.5) {
        return 0.0;
    }
    if (p > 0.5) {
        // Q(-x) = 1 - Q(x); 1 - p is exact for p in [0.5, 1).
        return -q_inverse(1.0 - p);
    }
    // Q is decreasing; Q(0) = 0.5 > p and Q(40) < 1e-300 <= p.
    double lo = 0.0;
    double hi = 40.0;
    const double target = std::log(p);
    const double t = std::sqrt(-2.0 * target);
    double x = std::clamp(t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                                  (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t),
                          lo, hi);
    for (int iter = 0; iter < 100; ++iter) {
        const double q = q_function(x);
        const double f = std::log(q) - target;
        if (f > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        // d/dx log Q(x) = -phi(x) / Q(x)
        const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        double next = x + f * q / phi;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

struct RocPoint {
    double beta = 0.0;
    double p_f = 0.0;
    double p_d = 0.0;
    std::optional<std::pair<double, double>> p_f_ci;
    std::optional<std::pair<double, double>> p_d_ci;
    /// False when p_f is below the absent set's resolvable rate (no counts).
    bool estimable = true;

    friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
    std::vector<RocPoint> points; ///< descending beta
};

enum class Label { h0, h1 };

inline const char* to_string(Label l) { return l == Label::h0 ? "h0" : "h1"; }

struct SampleSet {
    Label label = Label::h0;
    std::vector<double> values;

    void validate() const
    {
        if (values.size() < 2) {
            throw DataError(std::string("SampleSet ") + to_string(label) + ": need at least 2 samples");
        }
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (!std::isfinite(values[k])) {
                throw DataError(std::string("SampleSet ") + to_string(label) + ": non-finite value at index " +
                                std::to_string(k));
            }
        }
    }
};

/// Linear sweep from -3 sigma0 to mu1 + 3 sigma1 (ascending).
inline std::vector<double> threshold_grid(const HypothesisMoments& m, std::size_t n_points = 512)
{
    m.validate();
    if (n_points < 2) {
        throw ConfigError("threshold_grid: need at least 2 points");
    }
    const double lo = -3.0 * m.sigma0;
    const double hi = m.mu1 + 3.0 * m.sigma1;
    std::vector<double> out(n_points);
    const double step = (hi - lo) / static_cast<double>(n_points - 1);
    for (std::size_t k = 0; k < n_points; ++k) {
        out[k] = lo + step * static_cast<double>(k);
    }
    out.back() = hi;
    return out;
}

/// Thresholds whose analytic false-alarm rates are log-spaced over
/// [pf_min, pf_max]; resolves the small-P_F corner.
inline std::vector<double> log_pf_threshold_grid(const HypothesisMoments& m, std::size_t n_points = 128,
                                                 double pf_min = 1e-8, double pf_max = 0.5)
{
    m.validate();
    if (n_points < 2) {
        throw ConfigError("log_pf_threshold_grid: need at least 2 points");
    }
    if (!(pf_min > 0.0 && pf_min < pf_max && pf_max < 1.0)) {
        throw ConfigError("log_pf_threshold_grid: need 0 < pf_min < pf_max < 1");
    }
    const double a = std::log10(pf_min);
    const double b = std::log10(pf_max);
    std::vector<double> out(n_points);
    for (std::size_t k = 0; k < n_points; ++k) {
        const double pf = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(n_points - 1));
        out[k] = m.mu0 + m.sigma0 * q_inverse(pf);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

inline void sort_descending_beta(std::vector<RocPoint>& pts)
{
    std::stable_sort(pts.begin(), pts.end(), [](const RocPoint& a, const RocPoint& b) { return a.beta > b.beta; });
}

} // namespace detail

inline RocCurve roc_analytic(const HypothesisMoments& m, const std::vector<double>& betas)
{
    m.validate();
    RocCurve out;
    out.points.reserve(betas.size());
    for (double beta : betas) {
        RocPoint pt;
        pt.beta = beta;
        pt.p_f = q_function((beta - m.mu0) / m.sigma0);
        pt.p_d = q_function((beta - m.mu1) / m.sigma1);
        out.points.push_back(pt);
    }
    detail::sort_descending_beta(out.points);
    return out;
}

/// Neyman-Pearson operating point: detection probability at a false-alarm constraint.
inline double pd_at_pf(const HypothesisMoments& m, double p_f)
{
    m.validate();
    if (p_f <= 0.0) {
        return 0.0;
    }
    if (p_f >= 1.0) {
        return 1.0;
    }
    return q_function(q_inverse(p_f) * (m.sigma0 / m.sigma1) + (m.mu0 - m.mu1) / m.sigma1);
}

/// Smallest nonzero rate an n-sample set can express.
inline double min_resolvable_rate(std::size_t n_samples)
{
    if (n_samples == 0) {
        throw DataError("min_resolvable_rate: need at least one sample");
    }
    return 1.0 / static_cast<double>(n_samples);
}

/// Wilson score interval for k successes out of n at z standard deviations.
inline std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.0)
{
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::clamp(center - half, 0.0, p), std::clamp(center + half, p, 1.0)};
}

/// Tail fractions by exact counting over sorted samples.
class TailCounter {
  public:
    explicit TailCounter(std::vector<double> values) : sorted_(std::move(values))
    {
        std::sort(sorted_.begin(), sorted_.end());
    }

    /// Number of samples strictly greater than beta.
    std::size_t count_above(double beta) const
    {
        return static_cast<std::size_t>(sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), beta));
    }
    std::size_t size() const { return sorted_.size(); }

  private:
    std::vector<double> sorted_;
};

/// Histogram approximation of the tail integral: samples are binned on a shared
/// grid over [min, max] of both sets and a bin counts toward the tail when its
/// left edge is >= beta.
class BinnedTail {
  public:
    BinnedTail(const std::vector<double>& values, double lo, double hi, std::size_t bins)
        : lo_(lo), width_((hi - lo) / static_cast<double>(bins)), counts_(bins, 0), total_(values.size())
    {
        for (double v : values) {
            ++counts_[bin_of(v)];
        }
        // suffix sums: tail_[b] = samples in bins b..end
        tail_.assign(bins + 1, 0);
        for (std::size_t b = bins; b-- > 0;) {
            tail_[b] = tail_[b + 1] + counts_[b];
        }
    }

    std::size_t count_above(double beta) const
    {
        if (!(width_ > 0.0)) {
            return beta < lo_ ? total_ : 0;
        }
        const double pos = std::ceil((beta - lo_) / width_);
        if (pos <= 0.0) {
            return total_;
        }
        const auto b = static_cast<std::size_t>(pos);
        return b >= counts_.size() ? 0 : tail_[b];
    }
    std::size_t size() const { return total_; }

  private:
    std::size_t bin_of(double v) const
    {
        if (!(width_ > 0.0)) {
            return 0;
        }
        const auto b = static_cast<std::ptrdiff_t>(std::floor((v - lo_) / width_));
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(counts_.size()) - 1));
    }

    double lo_;
    double width_;
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> tail_;
    std::size_t total_;
};

enum class TailMode { exact, binned };

struct EmpiricalOptions {
    TailMode mode = TailMode::exact;
    std::size_t bins = 256;
    double ci_z = 1.0;
};

namespace detail {

inline void check_pair(const SampleSet& absent, const SampleSet& present)
{
    if (absent.label != Label::h0) {
        throw DataError("roc_empirical: absent set must be labeled h0");
    }
    if (present.label != Label::h1) {
        throw DataError("roc_empirical: present set must be labeled h1");
    }
    absent.validate();
    present.validate();
}

template <class Counter>
RocCurve empirical_from(const Counter& c0, const Counter& c1, const std::vector<double>& betas, double z)
{
    const double floor_pf = min_resolvable_rate(c0.size());
    RocCurve out;
    out.points.reserve(betas.size());
    for (double beta : betas) {
        const std::size_t k0 = c0.count_above(beta);
        const std::size_t k1 = c1.count_above(beta);
        RocPoint pt;
        pt.beta = beta;
        pt.p_f = static_cast<double>(k0) / static_cast<double>(c0.size());
        pt.p_d = static_cast<double>(k1) / static_cast<double>(c1.size());
        pt.p_f_ci = wilson_interval(k0, c0.size(), z);
        pt.p_d_ci = wilson_interval(k1, c1.size(), z);
        pt.estimable = pt.p_f >= floor_pf;
        out.points.push_back(pt);
    }
    sort_descending_beta(out.points);
    return out;
}

} // namespace detail

inline RocCurve roc_empirical(const SampleSet& absent, const SampleSet& present, const std::vector<double>& betas,
                              const EmpiricalOptions& opt = {})
{
    detail::check_pair(absent, present);
    if (opt.mode == TailMode::exact) {
        return detail::empirical_from(TailCounter(absent.values), TailCounter(present.values), betas, opt.ci_z);
    }
    if (opt.bins == 0) {
        throw ConfigError("roc_empirical: bins must be >= 1");
    }
    const auto [lo0, hi0] = std::minmax_element(absent.values.begin(), absent.values.end());
    const auto [lo1, hi1] = std::minmax_element(present.values.begin(), present.values.end());
    const double lo = std::min(*lo0, *lo1);
    const double hi = std::max(*hi0, *hi1);
    return detail::empirical_from(BinnedTail(absent.values, lo, hi, opt.bins),
                                  BinnedTail(present.values, lo, hi, opt.bins), betas, opt.ci_z);
}

/// Sample mean and (n-1) standard deviation.
inline std::pair<double, double> sample_moments(const std::vector<double>& v)
{
    if (v.size() < 2) {
        throw DataError("sample_moments: need at least 2 samples");
    }
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

/// Gaussian fit to a labeled pair. Degenerate (zero-spread) sets keep a tiny
/// positive sigma so downstream curves are still defined.
inline HypothesisMoments fit_moments(const SampleSet& absent, const SampleSet& present)
{
    detail::check_pair(absent, present);
    auto [m0, s0] = sample_moments(absent.values);
    auto [m1, s1] = sample_moments(present.values);
    const double scale = std::max({std::abs(m0), std::abs(m1), 1.0});
    const double tiny = scale * std::numeric_limits<double>::epsilon();
    return {m0, std::max(s0, tiny), m1, std::max(s1, tiny)};
}

} // namespace qi::roc
