#pragma once

// Trajectory analytics.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hglue/core/error.hpp"
#include "hglue/geometry.hpp"

namespace hglue {

struct ObservableSeries {
    Vector values;
    double dt_phys = 1.0;   // time per frame
    std::string label;

    std::size_t size() const noexcept { return values.size(); }
    bool valid() const { return !values.empty() && all_finite(values); }
};

/// Wraps into [-pi, pi).
inline double wrap_angle(double theta) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(theta + std::numbers::pi, two_pi);
    if (w < 0.0) w += two_pi;
    w -= std::numbers::pi;
    return w >= std::numbers::pi ? -std::numbers::pi : w;
}

/// Angles stored in canonical [-pi, pi) form.
class AngleSeries {
public:
    AngleSeries() = default;
    explicit AngleSeries(const Vector& thetas) {
        thetas_.reserve(thetas.size());
        for (double t : thetas) thetas_.push_back(wrap_angle(t));
    }
    const Vector& thetas() const noexcept { return thetas_; }
    std::size_t size() const noexcept { return thetas_.size(); }

private:
    Vector thetas_;
};

/// C(tau) = mean over t of cos(theta_t - theta_{t+tau}), tau = 0..max_lag.
inline Vector circular_acf(const AngleSeries& angles, std::size_t max_lag) {
    const Vector& th = angles.thetas();
    if (th.empty()) throw DomainError("circular_acf: empty series");
    if (max_lag >= th.size()) throw DomainError("circular_acf: max_lag must be < length");
    Vector c(max_lag + 1);
    c[0] = 1.0;
    for (std::size_t tau = 1; tau <= max_lag; ++tau) {
        double s = 0.0;
        const std::size_t m = th.size() - tau;
        for (std::size_t t = 0; t < m; ++t) s += std::cos(th[t] - th[t + tau]);
        c[tau] = std::clamp(s / static_cast<double>(m), -1.0, 1.0);
    }
    return c;
}

/// Lag axis pair: (frame index, physical time = index * dt).
struct LagAxis {
    std::vector<std::size_t> index;
    Vector time;
};

inline LagAxis lag_axis(std::size_t max_lag, double dt_phys) {
    LagAxis a;
    for (std::size_t i = 0; i <= max_lag; ++i) {
        a.index.push_back(i);
        a.time.push_back(static_cast<double>(i) * dt_phys);
    }
    return a;
}

/// Normalized autocorrelation rho(tau) of a real series, biased estimator.
inline double autocorrelation_at(const Vector& x, double mean, double var, std::size_t tau) {
    const std::size_t n = x.size();
    double s = 0.0;
    for (std::size_t t = 0; t + tau < n; ++t) s += (x[t] - mean) * (x[t + tau] - mean);
    return s / (static_cast<double>(n) * var);
}

struct AutocorrelationTime {
    double tau_int = 1.0;
    double n_eff = 0.0;
    std::size_t window = 0;
};

/// tau_int = 1 + 2 sum_{tau=1..W} rho(tau) with the smallest W >= c tau_int(W).
/// A constant series reports tau_int = +inf and n_eff = 0.
inline AutocorrelationTime integrated_autocorrelation(const ObservableSeries& series, double c = 5.0) {
    const Vector& x = series.values;
    const std::size_t n = x.size();
    if (n < 10) throw DomainError("integrated_autocorrelation: need at least 10 samples");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    if (!(var > 0.0)) return {std::numeric_limits<double>::infinity(), 0.0, 0};

    double tau = 1.0;
    std::size_t w = 0;
    while (w + 1 < n) {
        ++w;
        tau += 2.0 * autocorrelation_at(x, mean, var, w);
        if (static_cast<double>(w) >= c * tau) break;
    }
    return {tau, static_cast<double>(n) / (2.0 * tau), w};
}

/// sum_tau w_tau C(tau) dt: generic weighted lag sum (trapezoid-free, left rule).
inline double weighted_lag_sum(const Vector& acf, const Vector& weights, double dt_phys) {
    if (weights.size() != acf.size()) throw DomainError("weighted_lag_sum: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < acf.size(); ++i) s += weights[i] * acf[i];
    return s * dt_phys;
}

/// Pearson correlation across rows. Rows with zero variance yield NaN entries
/// (diagonal included); `undefined` lists them.
struct CorrelationMatrix {
    Eigen::MatrixXd values;
    std::vector<std::size_t> undefined;
};

inline CorrelationMatrix batch_correlation_matrix(const std::vector<Vector>& rows) {
    if (rows.empty()) throw DomainError("batch_correlation_matrix: no rows");
    const std::size_t len = rows.front().size();
    if (len < 2) throw DomainError("batch_correlation_matrix: rows need length >= 2");
    const auto B = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd z(B, static_cast<Eigen::Index>(len));
    CorrelationMatrix out;
    std::vector<bool> ok(rows.size(), true);
    for (Eigen::Index i = 0; i < B; ++i) {
        const Vector& r = rows[static_cast<std::size_t>(i)];
        if (r.size() != len) throw DomainError("batch_correlation_matrix: rows differ in length");
        Eigen::Map<const Eigen::RowVectorXd> v(r.data(), static_cast<Eigen::Index>(len));
        const Eigen::RowVectorXd c = v.array() - v.mean();
        const double norm = c.norm();
        if (!(norm > 0.0)) {
            ok[static_cast<std::size_t>(i)] = false;
            out.undefined.push_back(static_cast<std::size_t>(i));
            z.row(i).setZero();
        } else {
            z.row(i) = c / norm;
        }
    }
    out.values = z * z.transpose();
    for (Eigen::Index i = 0; i < B; ++i)
        for (Eigen::Index j = 0; j < B; ++j) {
            if (!ok[static_cast<std::size_t>(i)] || !ok[static_cast<std::size_t>(j)])
                out.values(i, j) = std::numeric_limits<double>::quiet_NaN();
            else if (i == j) out.values(i, j) = 1.0;
            else out.values(i, j) = std::clamp(out.values(i, j), -1.0, 1.0);
        }
    return out;
}

/// B x B RMSD matrix; frames are centered, and Kabsch-aligned pairwise when `align` is set.
inline Eigen::MatrixXd pairwise_distance_matrix(const std::vector<Vector>& frames, bool align = true) {
    const auto B = static_cast<Eigen::Index>(frames.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(B, B);
    for (Eigen::Index i = 0; i < B; ++i)
        for (Eigen::Index j = i + 1; j < B; ++j) {
            const double v = frame_distance(frames[static_cast<std::size_t>(i)], frames[static_cast<std::size_t>(j)],
                                            align);
            d(i, j) = v;
            d(j, i) = v;
        }
    return d;
}

/// Dihedral angle in [-pi, pi) of points (p0, p1, p2, p3).
inline double dihedral(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                       const Eigen::Vector3d& p3) {
    const Eigen::Vector3d b0 = p0 - p1, b1 = p2 - p1, b2 = p3 - p2;
    const Eigen::Vector3d axis = b1.normalized();
    const Eigen::Vector3d v = b0 - b0.dot(axis) * axis;
    const Eigen::Vector3d w = b2 - b2.dot(axis) * axis;
    return wrap_angle(std::atan2(axis.cross(v).dot(w), v.dot(w)));
}

/// Dihedral of atoms (i, j, k, l) in a flattened N x 3 frame.
inline double frame_dihedral(std::span<const double> frame, std::array<std::size_t, 4> idx) {
    const Points p = to_points(frame);
    for (auto i : idx)
        if (i >= static_cast<std::size_t>(p.rows())) throw DomainError("frame_dihedral: atom index out of range");
    auto row = [&](std::size_t i) { return Eigen::Vector3d(p.row(static_cast<Eigen::Index>(i)).transpose()); };
    return dihedral(row(idx[0]), row(idx[1]), row(idx[2]), row(idx[3]));
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace hglue
