#pragma once

// Single-mode-pair covariance simulations of the two receivers, plus the grid
// comparison against the closed forms in detection_models.hpp.

#include <algorithm>
#include <cmath>
#include <vector>

#include "qi/detection_models.hpp"
#include "qi/gaussian_optics.hpp"

namespace qi::optics {

/// Raw N_X - N_Y statistics of the phase-conjugate receiver for one mode pair.
///
/// Chain: TMSV(N_S) on (signal, idler) -> BPSK sign on the signal -> thermal
/// loss (kappa, N_B/(1-kappa)) -> conjugation as a two-mode squeezer with a
/// fresh vacuum, gain G_A, keeping the vacuum-port output -> loss kappa_R on
/// the conjugate and kappa_I on the idler -> balanced beamsplitter.
/// g_a = 1 is accepted here (no conjugate light).
inline PhotonStats qi_receiver_stats(const SystemParams& p, Phase phase)
{
    if (!(p.kappa >= 0.0 && p.kappa < 1.0)) {
        throw PhysicsError("qi_receiver_stats: kappa must lie in [0,1)");
    }
    if (!(p.g_a >= 1.0)) {
        throw PhysicsError("qi_receiver_stats: g_a must be >= 1");
    }
    constexpr std::size_t signal = 0;
    constexpr std::size_t idler = 1;

    auto st = two_mode_squeeze(vacuum(2), signal, idler, p.n_s);
    if (phase == Phase::minus) {
        st = flip_sign(st, signal);
    }
    st = thermal_loss(st, signal, p.kappa, p.n_b / (1.0 - p.kappa));

    st = append_vacuum(st);
    const std::size_t ancilla = 2;
    st = two_mode_squeeze(st, ancilla, signal, p.g_a - 1.0);
    st = trace_out(st, signal); // modes are now (idler, conjugate)
    constexpr std::size_t idler_out = 0;
    constexpr std::size_t conj = 1;

    st = thermal_loss(st, conj, p.kappa_r, 0.0);
    st = thermal_loss(st, idler_out, p.kappa_i, 0.0);

    // conj -> X = (C + I)/sqrt2, idler_out -> Y = (C - I)/sqrt2
    st = beamsplitter(st, conj, idler_out, 0.5);
    return photon_diff_stats(st, conj, idler_out);
}

/// Receiver stats with the common kappa_R (G_A - 1) scale s removed:
/// mean / sqrt(s), variance / s.
inline ModeMoments qi_receiver_scaled(const SystemParams& p, Phase phase)
{
    const double s = p.kappa_r * (p.g_a - 1.0);
    if (!(s > 0.0)) {
        throw PhysicsError("qi_receiver_scaled: kappa_r (g_a - 1) must be > 0");
    }
    const auto raw = qi_receiver_stats(p, phase);
    return {raw.mean / std::sqrt(s), raw.variance / s};
}

/// Raw N_X - N_Y of balanced homodyne: coherent probe sqrt(N_S) through the
/// thermal-loss channel, mixed with a real local oscillator of amplitude lo.
inline PhotonStats ci_homodyne_stats(const SystemParams& p, double lo_amplitude)
{
    if (!(p.kappa >= 0.0 && p.kappa < 1.0)) {
        throw PhysicsError("ci_homodyne_stats: kappa must lie in [0,1)");
    }
    auto st = displace(vacuum(1), 0, std::sqrt(p.n_s));
    st = thermal_loss(st, 0, p.kappa, p.n_b / (1.0 - p.kappa));
    st = displace(append_vacuum(st), 1, lo_amplitude);
    st = beamsplitter(st, 0, 1, 0.5);
    return photon_diff_stats(st, 0, 1);
}

/// Homodyne stats normalized to a unit local oscillator (mean / lo, variance / lo^2).
inline ModeMoments ci_homodyne_scaled(const SystemParams& p, double lo_amplitude = 1e4)
{
    const auto raw = ci_homodyne_stats(p, lo_amplitude);
    return {raw.mean / lo_amplitude, raw.variance / (lo_amplitude * lo_amplitude)};
}

struct OraclePoint {
    SystemParams params;
    ModeMoments oracle;
    ModeMoments closed_form;
    double mean_rel_dev = 0.0;
    double variance_rel_dev = 0.0;
    /// Deviation against the (N_B + 1) form, for diagnostics.
    double variance_rel_dev_unreduced = 0.0;
    bool pass = false;
};

struct OracleTolerances {
    double mean_rel = 1e-6;
    double variance_rel = 1e-2;
};

inline double relative_deviation(double value, double reference)
{
    if (reference == 0.0) {
        return std::abs(value);
    }
    return std::abs(value - reference) / std::abs(reference);
}

inline OraclePoint check_qi_point(const SystemParams& p, const OracleTolerances& tol = {})
{
    OraclePoint pt;
    pt.params = p;
    pt.oracle = qi_receiver_scaled(p, Phase::plus);
    pt.closed_form = qi_mode_moments(p, Phase::plus);
    pt.mean_rel_dev = relative_deviation(pt.oracle.mean, pt.closed_form.mean);
    pt.variance_rel_dev = relative_deviation(pt.oracle.variance, pt.closed_form.variance);
    pt.variance_rel_dev_unreduced = relative_deviation(pt.oracle.variance, qi_mode_variance_unreduced(p));
    pt.pass = pt.mean_rel_dev <= tol.mean_rel && pt.variance_rel_dev <= tol.variance_rel;
    return pt;
}

struct GridAxes {
    std::vector<double> n_s{1e-4, 1e-3, 1e-2};
    std::vector<double> n_b{1e2, 1e3, 1e4};
    std::vector<double> kappa{0.01, 0.086, 0.5};
    std::vector<double> gain_minus_one{1e-4, 3.21e-4, 1e-2};
};

/// 3x3x3x3 sweep with kappa_i = kappa_r = 1 unless overridden in `base`.
inline std::vector<OraclePoint> oracle_grid(const GridAxes& axes = {}, SystemParams base = {},
                                            const OracleTolerances& tol = {})
{
    std::vector<OraclePoint> out;
    for (double ns : axes.n_s) {
        for (double nb : axes.n_b) {
            for (double k : axes.kappa) {
                for (double g1 : axes.gain_minus_one) {
                    SystemParams p = base;
                    p.n_s = ns;
                    p.n_b = nb;
                    p.kappa = k;
                    p.g_a = 1.0 + g1;
                    out.push_back(check_qi_point(p, tol));
                }
            }
        }
    }
    return out;
}

} // namespace qi::optics
