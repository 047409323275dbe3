#pragma once

// Multimode Gaussian states in the quadrature picture.
//
// Conventions: quadratures are ordered (q1, p1, q2, p2, ...) with
// q = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)). The covariance is the
// symmetrized second moment, so vacuum has zero mean and covariance I/2 and
// the photon number of a mode is n = (q^2 + p^2 - 1)/2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qi/error.hpp"

namespace qi::optics {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class QuadratureState {
  public:
    QuadratureState(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov))
    {
        if (mean_.size() == 0 || mean_.size() % 2 != 0 || cov_.rows() != mean_.size() ||
            cov_.cols() != mean_.size()) {
            throw PhysicsError("QuadratureState: mean/covariance shape mismatch");
        }
        symmetrize();
    }

    std::size_t n_modes() const { return static_cast<std::size_t>(mean_.size() / 2); }
    const Vector& mean() const { return mean_; }
    const Matrix& cov() const { return cov_; }

    /// 2x2 covariance block between modes i and j.
    Eigen::Matrix2d block(std::size_t i, std::size_t j) const
    {
        return cov_.block<2, 2>(static_cast<Eigen::Index>(2 * i), static_cast<Eigen::Index>(2 * j));
    }
    Eigen::Vector2d mode_mean(std::size_t i) const
    {
        return mean_.segment<2>(static_cast<Eigen::Index>(2 * i));
    }

    /// Apply the linear symplectic map x -> S x (+ nothing) on the full phase space.
    QuadratureState transformed(const Matrix& s) const
    {
        return QuadratureState(s * mean_, s * cov_ * s.transpose());
    }

    QuadratureState with_mean(Vector mean) const { return QuadratureState(std::move(mean), cov_); }

  private:
    void symmetrize() { cov_ = 0.5 * (cov_ + cov_.transpose()).eval(); }

    Vector mean_;
    Matrix cov_;
};

struct PhotonStats {
    double mean = 0.0;
    double variance = 0.0;
};

namespace detail {

inline void check_mode(const QuadratureState& st, std::size_t i, const char* op)
{
    if (i >= st.n_modes()) {
        throw PhysicsError(std::string(op) + ": mode index " + std::to_string(i) +
                           " out of range for " + std::to_string(st.n_modes()) + "-mode state");
    }
}

inline void check_pair(const QuadratureState& st, std::size_t i, std::size_t j, const char* op)
{
    check_mode(st, i, op);
    check_mode(st, j, op);
    if (i == j) {
        throw PhysicsError(std::string(op) + ": modes must be distinct");
    }
}

inline Eigen::Index q(std::size_t i) { return static_cast<Eigen::Index>(2 * i); }
inline Eigen::Index p(std::size_t i) { return static_cast<Eigen::Index>(2 * i + 1); }

} // namespace detail

inline QuadratureState vacuum(std::size_t n_modes)
{
    if (n_modes == 0) {
        throw PhysicsError("vacuum: need at least one mode");
    }
    const auto dim = static_cast<Eigen::Index>(2 * n_modes);
    return QuadratureState(Vector::Zero(dim), 0.5 * Matrix::Identity(dim, dim));
}

/// Product of independent thermal modes with the given mean photon numbers.
inline QuadratureState thermal(const std::vector<double>& mean_photons)
{
    QuadratureState st = vacuum(mean_photons.size());
    Matrix cov = st.cov();
    for (std::size_t k = 0; k < mean_photons.size(); ++k) {
        if (mean_photons[k] < 0.0) {
            throw PhysicsError("thermal: negative mean photon number");
        }
        cov(detail::q(k), detail::q(k)) = mean_photons[k] + 0.5;
        cov(detail::p(k), detail::p(k)) = mean_photons[k] + 0.5;
    }
    return QuadratureState(st.mean(), cov);
}

/// Tensor product `st` (x) thermal(mean_photon); the new mode is the last one.
inline QuadratureState append_thermal(const QuadratureState& st, double mean_photon)
{
    if (mean_photon < 0.0) {
        throw PhysicsError("append_thermal: negative mean photon number");
    }
    const Eigen::Index n = st.mean().size();
    Vector mean = Vector::Zero(n + 2);
    mean.head(n) = st.mean();
    Matrix cov = Matrix::Zero(n + 2, n + 2);
    cov.topLeftCorner(n, n) = st.cov();
    cov(n, n) = mean_photon + 0.5;
    cov(n + 1, n + 1) = mean_photon + 0.5;
    return QuadratureState(std::move(mean), std::move(cov));
}

inline QuadratureState append_vacuum(const QuadratureState& st) { return append_thermal(st, 0.0); }

/// Partial trace over mode i (drop its rows/columns).
inline QuadratureState trace_out(const QuadratureState& st, std::size_t i)
{
    detail::check_mode(st, i, "trace_out");
    if (st.n_modes() == 1) {
        throw PhysicsError("trace_out: cannot trace out the only mode");
    }
    std::vector<Eigen::Index> keep;
    for (std::size_t k = 0; k < st.n_modes(); ++k) {
        if (k != i) {
            keep.push_back(detail::q(k));
            keep.push_back(detail::p(k));
        }
    }
    const auto m = static_cast<Eigen::Index>(keep.size());
    Vector mean(m);
    Matrix cov(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        mean(r) = st.mean()(keep[r]);
        for (Eigen::Index c = 0; c < m; ++c) {
            cov(r, c) = st.cov()(keep[r], keep[c]);
        }
    }
    return QuadratureState(std::move(mean), std::move(cov));
}

/// a_i -> cosh(r) a_i + sinh(r) a_j^dag, a_j -> cosh(r) a_j + sinh(r) a_i^dag,
/// with sinh^2(r) = mean_photon. On vacuum this yields a TMSV with mean_photon
/// photons in each arm; on (vacuum, a) the first output is the phase conjugate
/// sqrt(G) v + sqrt(G-1) a^dag with G = 1 + mean_photon.
inline QuadratureState two_mode_squeeze(const QuadratureState& st, std::size_t i, std::size_t j,
                                        double mean_photon)
{
    detail::check_pair(st, i, j, "two_mode_squeeze");
    if (!(mean_photon >= 0.0)) {
        throw PhysicsError("two_mode_squeeze: mean photon number must be >= 0");
    }
    const double sh = std::sqrt(mean_photon);
    const double ch = std::sqrt(mean_photon + 1.0);
    const auto dim = st.mean().size();
    Matrix s = Matrix::Identity(dim, dim);
    using detail::p;
    using detail::q;
    s(q(i), q(i)) = ch;
    s(q(i), q(j)) = sh;
    s(p(i), p(i)) = ch;
    s(p(i), p(j)) = -sh;
    s(q(j), q(j)) = ch;
    s(q(j), q(i)) = sh;
    s(p(j), p(j)) = ch;
    s(p(j), p(i)) = -sh;
    return st.transformed(s);
}

/// out_i = sqrt(T) in_i + sqrt(1-T) in_j, out_j = sqrt(1-T) in_i - sqrt(T) in_j.
inline QuadratureState beamsplitter(const QuadratureState& st, std::size_t i, std::size_t j,
                                    double transmissivity)
{
    detail::check_pair(st, i, j, "beamsplitter");
    if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
        throw PhysicsError("beamsplitter: transmissivity must lie in [0,1]");
    }
    const double t = std::sqrt(transmissivity);
    const double r = std::sqrt(1.0 - transmissivity);
    const auto dim = st.mean().size();
    Matrix s = Matrix::Identity(dim, dim);
    for (auto [xi, xj] : {std::pair{detail::q(i), detail::q(j)}, std::pair{detail::p(i), detail::p(j)}}) {
        s(xi, xi) = t;
        s(xi, xj) = r;
        s(xj, xi) = r;
        s(xj, xj) = -t;
    }
    return st.transformed(s);
}

/// a_i -> exp(i theta) a_i.
inline QuadratureState phase_shift(const QuadratureState& st, std::size_t i, double theta)
{
    detail::check_mode(st, i, "phase_shift");
    const auto dim = st.mean().size();
    Matrix s = Matrix::Identity(dim, dim);
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    using detail::p;
    using detail::q;
    s(q(i), q(i)) = c;
    s(q(i), p(i)) = -sn;
    s(p(i), q(i)) = sn;
    s(p(i), p(i)) = c;
    return st.transformed(s);
}

/// Exact sign flip a_i -> -a_i (BPSK pi phase); avoids cos(pi) rounding.
inline QuadratureState flip_sign(const QuadratureState& st, std::size_t i)
{
    detail::check_mode(st, i, "flip_sign");
    const auto dim = st.mean().size();
    Matrix s = Matrix::Identity(dim, dim);
    s(detail::q(i), detail::q(i)) = -1.0;
    s(detail::p(i), detail::p(i)) = -1.0;
    return st.transformed(s);
}

/// Mode i passes a beamsplitter of transmissivity kappa against a fresh thermal
/// environment of env_mean_photon photons, which is then discarded.
inline QuadratureState thermal_loss(const QuadratureState& st, std::size_t i, double kappa,
                                    double env_mean_photon)
{
    detail::check_mode(st, i, "thermal_loss");
    if (!(kappa >= 0.0 && kappa <= 1.0)) {
        throw PhysicsError("thermal_loss: kappa must lie in [0,1]");
    }
    if (!(env_mean_photon >= 0.0)) {
        throw PhysicsError("thermal_loss: environment photon number must be >= 0");
    }
    if (kappa == 1.0) {
        return st;
    }
    const std::size_t env = st.n_modes();
    auto widened = append_thermal(st, env_mean_photon);
    widened = beamsplitter(widened, i, env, kappa);
    return trace_out(widened, env);
}

/// Displacement by a complex amplitude; vacuum displaced by alpha has |alpha|^2 photons.
inline QuadratureState displace(const QuadratureState& st, std::size_t i, std::complex<double> amplitude)
{
    detail::check_mode(st, i, "displace");
    Vector mean = st.mean();
    mean(detail::q(i)) += std::sqrt(2.0) * amplitude.real();
    mean(detail::p(i)) += std::sqrt(2.0) * amplitude.imag();
    return st.with_mean(std::move(mean));
}

inline double photon_mean(const QuadratureState& st, std::size_t i)
{
    detail::check_mode(st, i, "photon_mean");
    const Eigen::Matrix2d v = st.block(i, i);
    const Eigen::Vector2d m = st.mode_mean(i);
    return 0.5 * (v.trace() - 1.0) + 0.5 * m.squaredNorm();
}

/// Photon-number variance of a single mode: Tr(V^2)/2 - 1/4 + m^T V m.
inline double photon_variance(const QuadratureState& st, std::size_t i)
{
    detail::check_mode(st, i, "photon_variance");
    const Eigen::Matrix2d v = st.block(i, i);
    const Eigen::Vector2d m = st.mode_mean(i);
    return 0.5 * (v * v).trace() - 0.25 + m.dot(v * m);
}

/// Covariance of photon numbers of two distinct modes. The modes commute, so
/// the Wigner-function (classical Gaussian) moment formula is exact here.
inline double photon_covariance(const QuadratureState& st, std::size_t i, std::size_t j)
{
    detail::check_pair(st, i, j, "photon_covariance");
    const Eigen::Matrix2d c = st.block(i, j);
    return 0.5 * c.squaredNorm() + st.mode_mean(i).dot(c * st.mode_mean(j));
}

/// Mean and variance of n_i - n_j, exact for any Gaussian state.
inline PhotonStats photon_diff_stats(const QuadratureState& st, std::size_t i, std::size_t j)
{
    detail::check_pair(st, i, j, "photon_diff_stats");
    PhotonStats out;
    out.mean = photon_mean(st, i) - photon_mean(st, j);
    out.variance = photon_variance(st, i) + photon_variance(st, j) - 2.0 * photon_covariance(st, i, j);
    return out;
}

/// Symplectic spectrum, ascending, one value per mode.
inline std::vector<double> symplectic_eigenvalues(const QuadratureState& st)
{
    const auto dim = st.cov().rows();
    Matrix omega = Matrix::Zero(dim, dim);
    for (Eigen::Index k = 0; k < dim; k += 2) {
        omega(k, k + 1) = 1.0;
        omega(k + 1, k) = -1.0;
    }
    Eigen::EigenSolver<Matrix> solver(omega * st.cov(), false);
    std::vector<double> nu;
    nu.reserve(static_cast<std::size_t>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) {
        nu.push_back(std::abs(solver.eigenvalues()(k).imag()));
    }
    std::sort(nu.begin(), nu.end());
    std::vector<double> out;
    for (std::size_t k = 0; k < nu.size(); k += 2) {
        out.push_back(0.5 * (nu[k] + nu[k + 1]));
    }
    return out;
}

inline bool is_physical(const QuadratureState& st, double tol = 1e-9)
{
    const auto nu = symplectic_eigenvalues(st);
    return nu.front() >= 0.5 - tol;
}

} // namespace qi::optics
