#pragma once

// Closed-form decision statistics for classical-illumination (coherent state +
// homodyne) and quantum-illumination (TMSV + phase-conjugate receiver) target
// detection, in the regime N_B >> 1 >> kappa N_S.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qi/error.hpp"

namespace qi {

struct SystemParams {
    double n_s = 6.8e-4;     ///< mean signal photons per mode
    double n_b = 1.3e3;      ///< mean noise photons per mode at the receiver
    double kappa = 0.086;    ///< channel (target) transmissivity
    double kappa_i = 1.0;    ///< idler storage transmissivity
    double zeta = 1.0;       ///< lumped receiver imperfection factor
    double m = std::pow(10.0, 8.12); ///< modes per decision, real-valued
    double g_a = 1.0 + 0.321e-3;     ///< phase-conjugator gain
    double kappa_r = 1.0;    ///< receiver-path transmissivity after the conjugator

    void validate() const
    {
        auto fail = [](const std::string& what) { throw PhysicsError("SystemParams: " + what); };
        if (!(std::isfinite(n_s) && n_s > 0.0)) fail("n_s must be > 0");
        if (!(std::isfinite(n_b) && n_b >= 0.0)) fail("n_b must be >= 0");
        if (!(kappa >= 0.0 && kappa <= 1.0)) fail("kappa must lie in [0,1]");
        if (!(kappa_i > 0.0 && kappa_i <= 1.0)) fail("kappa_i must lie in (0,1]");
        if (!(zeta > 0.0 && zeta <= 1.0)) fail("zeta must lie in (0,1]");
        if (!(std::isfinite(m) && m > 0.0)) fail("m must be > 0");
        if (!(std::isfinite(g_a) && g_a > 1.0)) fail("g_a must be > 1");
        if (!(kappa_r > 0.0 && kappa_r <= 1.0)) fail("kappa_r must lie in (0,1]");
    }
};

/// Thresholds for the N_B >> 1 >> kappa N_S regime check.
struct RegimeThresholds {
    double min_n_b = 10.0;
    double max_kappa_n_s = 0.1;
};

struct RegimeWarning {
    std::string code;
    std::string message;
    double value = 0.0;
    double threshold = 0.0;
};

inline std::vector<RegimeWarning> regime_warnings(const SystemParams& p, const RegimeThresholds& t = {})
{
    std::vector<RegimeWarning> out;
    if (p.n_b < t.min_n_b) {
        out.push_back({"low_noise", "n_b below the bright-noise regime; equal-variance Gaussian model is approximate",
                       p.n_b, t.min_n_b});
    }
    if (p.kappa * p.n_s > t.max_kappa_n_s) {
        out.push_back({"bright_return", "kappa*n_s above the weak-return regime", p.kappa * p.n_s, t.max_kappa_n_s});
    }
    return out;
}

/// Gaussian (mean, std) pairs of the decision statistic under h0 / h1.
struct HypothesisMoments {
    double mu0 = 0.0;
    double sigma0 = 1.0;
    double mu1 = 0.0;
    double sigma1 = 1.0;

    void validate() const
    {
        if (!(std::isfinite(mu0) && std::isfinite(mu1))) {
            throw PhysicsError("HypothesisMoments: non-finite mean");
        }
        if (!(sigma0 > 0.0 && sigma1 > 0.0 && std::isfinite(sigma0) && std::isfinite(sigma1))) {
            throw PhysicsError("HypothesisMoments: standard deviations must be positive and finite");
        }
    }

    /// Detectability index (mu1 - mu0) / sigma0.
    double separation() const { return (mu1 - mu0) / sigma0; }
};

enum class Phase { plus, minus };
enum class Model { ci, qi };

inline const char* to_string(Model m) { return m == Model::ci ? "ci" : "qi"; }

namespace detail {

inline double noise_sigma(const SystemParams& p)
{
    const double sigma = std::sqrt(p.n_b * p.m);
    if (!(sigma > 0.0)) {
        throw PhysicsError("degenerate decision statistic: n_b * m must be > 0");
    }
    return sigma;
}

} // namespace detail

inline HypothesisMoments ci_moments(const SystemParams& p)
{
    p.validate();
    const double sigma = detail::noise_sigma(p);
    return {0.0, sigma, std::sqrt(2.0 * p.kappa * p.n_s) * p.m, sigma};
}

/// Keeps the (N_S + 1) factor; the common kappa_R (G_A - 1) scale cancels.
inline HypothesisMoments qi_moments(const SystemParams& p, Phase phase = Phase::plus)
{
    p.validate();
    const double sigma = detail::noise_sigma(p);
    const double mu = 2.0 * std::sqrt(p.kappa * p.kappa_i * p.n_s * (p.n_s + 1.0)) * p.m;
    return {0.0, sigma, phase == Phase::plus ? mu : -mu, sigma};
}

/// QI moments with the imperfection factor folded into the mean (mu1 scaled
/// by sqrt(zeta)). Equals qi_moments at zeta = 1.
inline HypothesisMoments qi_fitted_moments(const SystemParams& p)
{
    auto out = qi_moments(p, Phase::plus);
    out.mu1 *= std::sqrt(p.zeta);
    return out;
}

inline HypothesisMoments model_moments(const SystemParams& p, Model model)
{
    return model == Model::ci ? ci_moments(p) : qi_fitted_moments(p);
}

inline double snr_ci(const SystemParams& p)
{
    p.validate();
    detail::noise_sigma(p);
    return 2.0 * p.kappa * p.n_s * p.m / p.n_b;
}

/// N_S << 1 form: the N_S^2 term is dropped.
inline double snr_qi(const SystemParams& p)
{
    p.validate();
    detail::noise_sigma(p);
    return 4.0 * p.m * p.zeta * p.kappa * p.kappa_i * p.n_s / p.n_b;
}

/// Equal-variance moments whose separation squared is snr_qi(p), i.e. the
/// ROC implied by the reduced QI SNR. Differs from qi_moments by the
/// (N_S + 1) factor only.
inline HypothesisMoments qi_snr_moments(const SystemParams& p)
{
    const double sigma = detail::noise_sigma(p);
    return {0.0, sigma, sigma * std::sqrt(snr_qi(p)), sigma};
}

/// 10 log10(snr_qi / snr_ci) = 10 log10(2 zeta kappa_i). Independent of kappa,
/// so it stays defined when kappa = 0 even though both SNRs vanish.
inline double advantage_db(const SystemParams& p)
{
    p.validate();
    return 10.0 * std::log10(2.0 * p.zeta * p.kappa_i);
}

/// Largest SNR gain a phase-conjugate receiver can deliver, in dB.
inline double pcr_bound_db() { return 10.0 * std::log10(2.0); }

/// Inverse of advantage_db for zeta. Advantages quoted to 4 decimals of a dB
/// (3.0103) are accepted as the bound itself; the result is clamped to 1.
inline double fit_zeta(double measured_advantage_db, double kappa_i, double slack_db = 1e-4)
{
    if (!(kappa_i > 0.0 && kappa_i <= 1.0)) {
        throw PhysicsError("fit_zeta: kappa_i must lie in (0,1]");
    }
    if (!std::isfinite(measured_advantage_db)) {
        throw PhysicsError("fit_zeta: advantage must be finite");
    }
    const double zeta = std::pow(10.0, measured_advantage_db / 10.0) / (2.0 * kappa_i);
    if (zeta > std::pow(10.0, slack_db / 10.0)) {
        throw PhysicsError("fit_zeta: advantage of " + std::to_string(measured_advantage_db) +
                           " dB exceeds the 3 dB phase-conjugate receiver bound for kappa_i = " +
                           std::to_string(kappa_i));
    }
    return std::min(zeta, 1.0);
}

/// M = W T.
inline double mode_count(double bandwidth_hz, double half_period_s)
{
    if (!(bandwidth_hz >= 0.0 && half_period_s >= 0.0)) {
        throw PhysicsError("mode_count: bandwidth and period must be >= 0");
    }
    return bandwidth_hz * half_period_s;
}

// Per-mode closed forms, before the M scaling. These are what the Gaussian
// covariance oracle reproduces.

struct ModeMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Balanced homodyne of the returned coherent mode against a unit local oscillator:
/// mean 2 sqrt(kappa N_S), variance 2 N_B + 1.
inline ModeMoments ci_mode_moments(const SystemParams& p)
{
    return {2.0 * std::sqrt(p.kappa * p.n_s), 2.0 * p.n_b + 1.0};
}

/// N_X - N_Y of the phase-conjugate receiver with the kappa_R (G_A - 1) scale
/// removed (mean divided by sqrt of it, variance by it).
inline ModeMoments qi_mode_moments(const SystemParams& p, Phase phase = Phase::plus)
{
    const double mu = 2.0 * std::sqrt(p.kappa * p.kappa_i * p.n_s * (p.n_s + 1.0));
    return {phase == Phase::plus ? mu : -mu, p.n_b};
}

/// Intermediate variance form (N_B + 1), valid when kappa_R (G_A - 1) N_B >> N_S.
inline double qi_mode_variance_unreduced(const SystemParams& p) { return p.n_b + 1.0; }

} // namespace qi
