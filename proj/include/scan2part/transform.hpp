#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "scan2part/common.hpp"

namespace s2p {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

struct PointCloud {
    std::vector<Vec3> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

// General affine map p -> linear*p + translation. Closed under composition;
// 9DoF transforms with anisotropic scale are not, so chained alignments live
// in this form.
struct AffineTransform {
    Mat3 linear = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return linear * p + translation; }

    static AffineTransform identity() { return {}; }

    AffineTransform inverse() const {
        AffineTransform inv;
        inv.linear = linear.inverse();
        inv.translation = -inv.linear * translation;
        return inv;
    }
};

inline AffineTransform compose(const AffineTransform& outer, const AffineTransform& inner) {
    AffineTransform out;
    out.linear = outer.linear * inner.linear;
    out.translation = outer.linear * inner.translation + outer.translation;
    return out;
}

// Scale, then rotate, then translate: p -> R*(S*p) + t.
struct Transform9 {
    Vec3 scale = Vec3::Ones();
    Quat rotation = Quat::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const {
        return rotation * scale.cwiseProduct(p).eval() + translation;
    }

    AffineTransform to_affine() const {
        AffineTransform a;
        a.linear = rotation.toRotationMatrix() * scale.asDiagonal();
        a.translation = translation;
        return a;
    }

    void validate() const {
        if (std::abs(rotation.norm() - 1.0) > 1e-9)
            throw invalid_input("rotation quaternion is not unit norm");
        if (scale.minCoeff() <= 0.0) throw invalid_input("scale components must be positive");
    }
};

template <typename TransformT>
PointCloud apply(const TransformT& t, const PointCloud& pc) {
    PointCloud out;
    out.points.reserve(pc.points.size());
    for (const auto& p : pc.points) out.points.push_back(t.apply(p));
    return out;
}

// --- file formats ------------------------------------------------------------

// One "x y z" triple per line.
inline PointCloud parse_point_cloud(const std::string& text) {
    PointCloud pc;
    std::size_t lineno = 0, pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++lineno;
        if (line.empty()) continue;
        double v[3];
        std::size_t field = 0, fpos = 0;
        while (fpos < line.size() && field < 3) {
            while (fpos < line.size() && line[fpos] == ' ') ++fpos;
            std::size_t fend = fpos;
            while (fend < line.size() && line[fend] != ' ') ++fend;
            if (fend > fpos) v[field++] = parse_double(line.substr(fpos, fend - fpos));
            fpos = fend;
        }
        if (field != 3) throw parse_error("point cloud", lineno, "expected 3 coordinates");
        pc.points.emplace_back(v[0], v[1], v[2]);
    }
    return pc;
}

inline std::string write_point_cloud(const PointCloud& pc) {
    std::string out;
    for (const auto& p : pc.points)
        out += format_double(p.x()) + " " + format_double(p.y()) + " " + format_double(p.z()) + "\n";
    return out;
}

// {"scale":[3],"rotation_wxyz":[4],"translation":[3]} or
// {"linear":[9 row-major],"translation":[3]}.
inline AffineTransform parse_transform(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("transform JSON: ") + e.what());
    }
    auto vec3 = [](const nlohmann::json& a) {
        if (!a.is_array() || a.size() != 3) throw parse_error("transform JSON: expected 3-vector");
        return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    };
    if (j.contains("linear")) {
        const auto& lin = j["linear"];
        if (!lin.is_array() || lin.size() != 9)
            throw parse_error("transform JSON: 'linear' must hold 9 row-major entries");
        if (!j.contains("translation"))
            throw parse_error("transform JSON: missing 'translation'");
        AffineTransform a;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) a.linear(r, c) = lin[3 * r + c].get<double>();
        a.translation = vec3(j.at("translation"));
        return a;
    }
    if (!j.contains("scale") || !j.contains("rotation_wxyz") || !j.contains("translation"))
        throw parse_error("transform JSON: expected 'linear' or scale/rotation_wxyz/translation");
    Transform9 t;
    t.scale = vec3(j.at("scale"));
    const auto& q = j.at("rotation_wxyz");
    if (!q.is_array() || q.size() != 4) throw parse_error("transform JSON: expected wxyz quaternion");
    t.rotation = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
    t.translation = vec3(j.at("translation"));
    t.validate();
    return t.to_affine();
}

inline std::string write_transform(const AffineTransform& a) {
    nlohmann::json j;
    auto lin = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) lin.push_back(a.linear(r, c));
    j["linear"] = std::move(lin);
    j["translation"] = {a.translation.x(), a.translation.y(), a.translation.z()};
    return j.dump(2) + "\n";
}

}  // namespace s2p
