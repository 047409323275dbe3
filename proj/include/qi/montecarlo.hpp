#pragma once

// Synthetic detector output under h0 / h1. Noise is drawn once per M-mode
// decision window (or per sample within a window for time series), never per
// optical mode.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "qi/detection_models.hpp"
#include "qi/error.hpp"
#include "qi/random.hpp"
#include "qi/roc.hpp"

namespace qi::mc {

using roc::Label;
using roc::SampleSet;

struct SimConfig {
    SystemParams params;
    double f_mod = 3571.0;
    std::size_t samples_per_halfperiod = 16;
    std::size_t n_decisions = 100000;
    std::uint64_t seed = 0;
    Model model = Model::qi;
    double sigma_present_scale = 1.0;
    /// Worker threads; output does not depend on it.
    unsigned threads = 1;

    void validate() const
    {
        params.validate();
        if (!(f_mod > 0.0 && std::isfinite(f_mod))) throw ConfigError("SimConfig: f_mod must be > 0");
        if (samples_per_halfperiod == 0) throw ConfigError("SimConfig: samples_per_halfperiod must be >= 1");
        if (n_decisions == 0) throw ConfigError("SimConfig: n_decisions must be >= 1");
        if (!(sigma_present_scale > 0.0 && std::isfinite(sigma_present_scale))) {
            throw ConfigError("SimConfig: sigma_present_scale must be > 0");
        }
        if (threads == 0) throw ConfigError("SimConfig: threads must be >= 1");
    }

    /// Moments the simulation draws from, including sigma_present_scale.
    HypothesisMoments moments() const
    {
        auto m = model_moments(params, model);
        m.sigma1 *= sigma_present_scale;
        return m;
    }
};

struct LabeledSeries {
    Label label = Label::h0;
    std::vector<double> times;
    std::vector<double> values;
    /// Index of the last sample of each half-period window.
    std::vector<std::size_t> decision_marks;
};

enum class ModulationPhase { zero, pi };
enum class SignConvention { aligned, raw };

namespace detail {

enum class Kind : std::uint64_t { decisions = 0, timeseries = 1 };

inline std::uint64_t stream_id(Kind kind, Model model, Label label)
{
    return (static_cast<std::uint64_t>(kind) << 16) | (static_cast<std::uint64_t>(model) << 8) |
           static_cast<std::uint64_t>(label);
}

/// Runs body(begin, end) over [0, n) split into contiguous chunks.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t, std::size_t)>& body)
{
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(1, n));
    if (workers <= 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back(body, b, e);
    }
    for (auto& t : pool) {
        t.join();
    }
}

} // namespace detail

inline SampleSet simulate_decisions(const SimConfig& cfg, Label hypothesis)
{
    cfg.validate();
    const auto m = cfg.moments();
    const double mu = hypothesis == Label::h0 ? m.mu0 : m.mu1;
    const double sigma = hypothesis == Label::h0 ? m.sigma0 : m.sigma1;
    const random::NormalStream rng(cfg.seed, detail::stream_id(detail::Kind::decisions, cfg.model, hypothesis));

    SampleSet out;
    out.label = hypothesis;
    out.values.resize(cfg.n_decisions);
    detail::parallel_for(cfg.n_decisions, cfg.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            out.values[k] = mu + sigma * rng.normal(k);
        }
    });
    return out;
}

/// Square-wave BPSK trace: window w covers one half-period; under h1 its
/// mean is +mu1 for even w and -mu1 for odd w. Per-sample noise is
/// sigma * sqrt(samples_per_halfperiod) so each window average has std sigma.
inline LabeledSeries simulate_timeseries(const SimConfig& cfg, Label hypothesis)
{
    cfg.validate();
    const auto m = cfg.moments();
    const std::size_t per = cfg.samples_per_halfperiod;
    const std::size_t n = cfg.n_decisions * per;
    const double mu = hypothesis == Label::h0 ? m.mu0 : m.mu1;
    const double sigma = (hypothesis == Label::h0 ? m.sigma0 : m.sigma1) * std::sqrt(static_cast<double>(per));
    const double dt = 1.0 / (2.0 * cfg.f_mod * static_cast<double>(per));
    const random::NormalStream rng(cfg.seed, detail::stream_id(detail::Kind::timeseries, cfg.model, hypothesis));

    LabeledSeries out;
    out.label = hypothesis;
    out.times.resize(n);
    out.values.resize(n);
    out.decision_marks.resize(cfg.n_decisions);
    detail::parallel_for(cfg.n_decisions, cfg.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t w = b; w < e; ++w) {
            const double level = hypothesis == Label::h1 && w % 2 == 1 ? -mu : mu;
            for (std::size_t s = 0; s < per; ++s) {
                const std::size_t k = w * per + s;
                out.times[k] = dt * static_cast<double>(k);
                out.values[k] = level + sigma * rng.normal(k);
            }
            out.decision_marks[w] = w * per + per - 1;
        }
    });
    return out;
}

/// Per-window averages of the selected BPSK phase (even windows for 0, odd
/// for pi). With the aligned convention the pi set is negated so both phases
/// give a positively displaced present-case set.
inline SampleSet sample_at_phase(const LabeledSeries& series, ModulationPhase phase,
                                 SignConvention convention = SignConvention::aligned)
{
    if (series.values.empty() || series.decision_marks.empty()) {
        throw DataError("sample_at_phase: empty series");
    }
    if (series.times.size() != series.values.size()) {
        throw DataError("sample_at_phase: times/values length mismatch");
    }
    const std::size_t first = phase == ModulationPhase::zero ? 0 : 1;
    const double sign = phase == ModulationPhase::pi && convention == SignConvention::aligned ? -1.0 : 1.0;
    SampleSet out;
    out.label = series.label;
    for (std::size_t w = first; w < series.decision_marks.size(); w += 2) {
        const std::size_t begin = w == 0 ? 0 : series.decision_marks[w - 1] + 1;
        const std::size_t end = series.decision_marks[w] + 1;
        if (end > series.values.size() || begin >= end) {
            throw DataError("sample_at_phase: decision marks out of order at window " + std::to_string(w));
        }
        double acc = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            acc += series.values[k];
        }
        out.values.push_back(sign * acc / static_cast<double>(end - begin));
    }
    if (out.values.empty()) {
        throw DataError("sample_at_phase: no window at the requested phase");
    }
    return out;
}

} // namespace qi::mc
