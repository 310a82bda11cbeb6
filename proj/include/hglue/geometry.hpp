#pragma once

// Frames are flattened N x 3 row-major coordinate arrays.

#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "hglue/core/error.hpp"
#include "hglue/core/state.hpp"

namespace hglue {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

inline std::size_t atom_count(std::span<const double> frame) {
    if (frame.size() % 3 != 0) throw DomainError("frame length must be a multiple of 3");
    return frame.size() / 3;
}

inline Points to_points(std::span<const double> frame) {
    const auto n = static_cast<Eigen::Index>(atom_count(frame));
    return Eigen::Map<const Points>(frame.data(), n, 3);
}

inline Vector to_vector(const Points& p) {
    Vector out(static_cast<std::size_t>(p.size()));
    Eigen::Map<Points>(out.data(), p.rows(), 3) = p;
    return out;
}

inline Points centered(const Points& p) { return p.rowwise() - p.colwise().mean(); }

/// Unweighted radius of gyration.
inline double radius_of_gyration(std::span<const double> frame) {
    const Points c = centered(to_points(frame));
    if (c.rows() == 0) throw DomainError("radius_of_gyration: need at least one atom");
    return std::sqrt(c.squaredNorm() / static_cast<double>(c.rows()));
}

/// Root mean square per-atom displacement, no alignment.
inline double rmsd(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DomainError("rmsd: frame shapes differ");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sq / static_cast<double>(atom_count(a)));
}

struct KabschResult {
    Eigen::Matrix3d rotation;   // proper; aligned = moving_centered * rotation
    Points aligned;             // centered moving frame after rotation
    double rmsd = 0.0;          // against the centered reference
    bool degenerate = false;    // rank(H) < 2, rotation not unique
};

/// Best proper rotation of `moving` onto `reference`. Both are centered first.
inline KabschResult kabsch_align(const Points& reference, const Points& moving) {
    if (reference.rows() != moving.rows()) throw DomainError("kabsch_align: atom counts differ");
    if (reference.rows() == 0) throw DomainError("kabsch_align: empty frame");
    const Points ref = centered(reference);
    const Points mov = centered(moving);
    const Eigen::Matrix3d h = mov.transpose() * ref;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d& u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    const double d = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d rot = u * Eigen::Vector3d(1.0, 1.0, d).asDiagonal() * v.transpose();

    KabschResult out;
    out.rotation = rot;
    out.aligned = mov * rot;
    out.rmsd = std::sqrt((out.aligned - ref).squaredNorm() / static_cast<double>(ref.rows()));
    const Eigen::Vector3d s = svd.singularValues();
    out.degenerate = s(1) <= 1e-12 * std::max(1.0, s(0));
    return out;
}

inline KabschResult kabsch_align(std::span<const double> reference, std::span<const double> moving) {
    return kabsch_align(to_points(reference), to_points(moving));
}

/// RMSD after centering, and after optimal rotation when `align` is set.
inline double frame_distance(std::span<const double> a, std::span<const double> b, bool align) {
    if (align) return kabsch_align(a, b).rmsd;
    const Points ca = centered(to_points(a));
    const Points cb = centered(to_points(b));
    if (ca.rows() != cb.rows()) throw DomainError("frame_distance: atom counts differ");
    return std::sqrt((ca - cb).squaredNorm() / static_cast<double>(ca.rows()));
}

/// Rotation about a unit axis, for building synthetic test frames.
inline Eigen::Matrix3d axis_rotation(Eigen::Vector3d axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

} // namespace hglue
