#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "scan2part/common.hpp"
#include "scan2part/transform.hpp"

namespace s2p {

struct IcpParams {
    int max_iterations = 50;
    double convergence_eps = 1e-7;  // RMSE improvement threshold, meters
};

enum class IcpScore { kRmse, kSum };

struct IcpResult {
    AffineTransform transform;  // rigid: rotation + translation
    double rmse = 0.0;
    double sum_distance = 0.0;
    std::vector<double> rmse_trace;  // per-iteration, non-increasing
    int best_start = -1;             // set by best_alignment
};

// The 20 unit vertex directions of a regular dodecahedron, built from the
// golden ratio coordinates (+-1,+-1,+-1), (0,+-1/phi,+-phi), (+-1/phi,+-phi,0),
// (+-phi,0,+-1/phi), each normalized.
inline std::vector<Vec3> dodecahedron_vertices() {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double inv = 1.0 / phi;
    std::vector<Vec3> verts;
    for (double sx : {-1.0, 1.0})
        for (double sy : {-1.0, 1.0})
            for (double sz : {-1.0, 1.0}) verts.emplace_back(sx, sy, sz);
    for (double sy : {-1.0, 1.0})
        for (double sz : {-1.0, 1.0}) {
            verts.emplace_back(0.0, sy * inv, sz * phi);
            verts.emplace_back(sy * inv, sz * phi, 0.0);
            verts.emplace_back(sy * phi, 0.0, sz * inv);
        }
    for (auto& v : verts) v.normalize();
    return verts;
}

// One rotation per dodecahedron vertex, carrying the canonical +Z axis onto
// that vertex direction. A golden-angle twist about +Z is folded in before the
// tilt so the 20 rotations also spread over the roll dimension; with zero
// twist all starts share one roll and multi-start ICP cannot recover
// roll-heavy rotations.
inline std::vector<Quat> dodecahedron_rotations() {
    std::vector<Quat> rots;
    const Vec3 z = Vec3::UnitZ();
    const auto verts = dodecahedron_vertices();
    const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < verts.size(); ++i) {
        Quat tilt = Quat::FromTwoVectors(z, verts[i]);
        Quat twist(Eigen::AngleAxisd(static_cast<double>(i) * golden_angle, z));
        rots.push_back(tilt * twist);
    }
    return rots;
}

namespace detail {

// Exact nearest neighbor, brute force. Cloud sizes here are a few hundred.
inline std::size_t nearest_index(const Vec3& q, const std::vector<Vec3>& pts) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double d2 = (pts[i] - q).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

// Kabsch best-fit rigid transform minimizing sum ||R*a_i + t - b_i||^2.
inline AffineTransform kabsch(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    const std::size_t n = a.size();
    Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        ca += a[i];
        cb += b[i];
    }
    ca /= static_cast<double>(n);
    cb /= static_cast<double>(n);
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < n; ++i) h += (a[i] - ca) * (b[i] - cb).transpose();
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
    AffineTransform out;
    out.linear = svd.matrixV() * d * svd.matrixU().transpose();
    out.translation = cb - out.linear * ca;
    return out;
}

}  // namespace detail

// Point-to-point ICP: every src point corresponds to its nearest dst point;
// alternates correspondence and Kabsch until the RMSE improvement drops below
// convergence_eps or max_iterations is hit.
inline IcpResult icp_point_to_point(const PointCloud& src, const PointCloud& dst,
                                    const Quat& init_rotation, const IcpParams& params = {}) {
    if (src.empty() || dst.empty()) throw invalid_input("icp: point clouds must be non-empty");
    if (params.max_iterations < 1 || params.convergence_eps <= 0.0)
        throw invalid_input("icp: bad parameters");

    IcpResult res;
    res.transform.linear = init_rotation.toRotationMatrix();
    // start with centroids aligned so the first correspondences overlap
    Vec3 src_c = Vec3::Zero(), dst_c = Vec3::Zero();
    for (const auto& p : src.points) src_c += p;
    for (const auto& p : dst.points) dst_c += p;
    src_c /= static_cast<double>(src.points.size());
    dst_c /= static_cast<double>(dst.points.size());
    res.transform.translation = dst_c - res.transform.linear * src_c;

    std::vector<Vec3> moved(src.points.size());
    double prev_rmse = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < params.max_iterations; ++iter) {
        for (std::size_t i = 0; i < src.points.size(); ++i)
            moved[i] = res.transform.apply(src.points[i]);
        std::vector<Vec3> targets(src.points.size());
        for (std::size_t i = 0; i < moved.size(); ++i)
            targets[i] = dst.points[detail::nearest_index(moved[i], dst.points)];

        res.transform = detail::kabsch(src.points, targets);

        double sq = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < src.points.size(); ++i) {
            Vec3 p = res.transform.apply(src.points[i]);
            double d = (p - dst.points[detail::nearest_index(p, dst.points)]).norm();
            sq += d * d;
            sum += d;
        }
        res.rmse = std::sqrt(sq / static_cast<double>(src.points.size()));
        res.sum_distance = sum;
        res.rmse_trace.push_back(res.rmse);
        if (prev_rmse - res.rmse < params.convergence_eps) break;
        prev_rmse = res.rmse;
    }
    return res;
}

// Multi-start ICP over the 20 dodecahedron initializations; returns the run
// with the minimal score, ties broken by lowest initialization index.
inline IcpResult best_alignment(const PointCloud& src, const PointCloud& dst,
                                const IcpParams& params = {}, IcpScore score = IcpScore::kRmse) {
    const auto inits = dodecahedron_rotations();
    IcpResult best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inits.size(); ++i) {
        IcpResult r = icp_point_to_point(src, dst, inits[i], params);
        double s = score == IcpScore::kRmse ? r.rmse : r.sum_distance;
        if (s < best_score) {
            best_score = s;
            best = std::move(r);
            best.best_start = static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace s2p
