#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scan2part/common.hpp"
#include "scan2part/taxonomy.hpp"
#include "scan2part/transform.hpp"

namespace s2p {

struct VoxelKey {
    std::int32_t i = 0, j = 0, k = 0;
    auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelData {
    double tsdf = 0.0;
    NodeId leaf_label = 0;
    std::int64_t instance_id = 0;
    std::int64_t object_id = 0;
    std::optional<std::array<std::uint8_t, 3>> color;
};

// Sparse truncated-distance voxel grid. Occupied iff an entry exists; the
// distance field is unsigned (occupancy shell), clamped to the truncation band.
struct VoxelScene {
    double resolution = 0.05;
    Vec3 origin = Vec3::Zero();
    double truncation = 0.05;
    std::map<VoxelKey, VoxelData> entries;  // ordered by (i,j,k) for stable files

    VoxelKey key_of(const Vec3& p) const {
        return {static_cast<std::int32_t>(std::floor((p.x() - origin.x()) / resolution)),
                static_cast<std::int32_t>(std::floor((p.y() - origin.y()) / resolution)),
                static_cast<std::int32_t>(std::floor((p.z() - origin.z()) / resolution))};
    }
    Vec3 center_of(const VoxelKey& key) const {
        return origin + resolution * Vec3(key.i + 0.5, key.j + 0.5, key.k + 0.5);
    }
};

struct LabeledMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::int32_t, 3>> triangles;
    std::vector<NodeId> vertex_labels;       // leaf label per vertex
    std::vector<std::int64_t> vertex_instances;  // instance id per vertex
    std::int64_t object_id = 0;

    void validate() const {
        if (vertices.empty()) throw invalid_input("mesh has no vertices");
        if (vertex_labels.size() != vertices.size() ||
            vertex_instances.size() != vertices.size())
            throw invalid_input("mesh label/instance arrays must match vertex count");
        for (const auto& t : triangles)
            for (int c : {0, 1, 2})
                if (t[c] < 0 || static_cast<std::size_t>(t[c]) >= vertices.size())
                    throw invalid_input("triangle index out of range");
    }
};

namespace detail {

inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Ericson, Real-Time Collision Detection, closest point on triangle.
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();
    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return (p - (a + (d1 / (d1 - d3)) * ab)).norm();
    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return (p - (a + (d2 / (d2 - d6)) * ac)).norm();
    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + w * (c - b))).norm();
    }
    double denom = 1.0 / (va + vb + vc);
    return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

}  // namespace detail

// Every voxel whose center lies within `truncation` of the mesh surface is
// present, tsdf = unsigned distance. Labels are left unset; transfer_labels
// fills them.
inline VoxelScene voxelize_mesh(const LabeledMesh& mesh, double resolution, double truncation,
                                const Vec3& origin = Vec3::Zero()) {
    mesh.validate();
    if (resolution <= 0.0) throw invalid_input("resolution must be positive");
    if (truncation < resolution) throw invalid_input("truncation must be >= resolution");
    if (mesh.triangles.empty()) throw invalid_input("mesh has no triangles");

    VoxelScene scene;
    scene.resolution = resolution;
    scene.truncation = truncation;
    scene.origin = origin;

    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        Vec3 lo = (a.cwiseMin(b).cwiseMin(c).array() - truncation).matrix();
        Vec3 hi = (a.cwiseMax(b).cwiseMax(c).array() + truncation).matrix();
        VoxelKey klo = scene.key_of(lo), khi = scene.key_of(hi);
        for (std::int32_t i = klo.i; i <= khi.i; ++i)
            for (std::int32_t j = klo.j; j <= khi.j; ++j)
                for (std::int32_t k = klo.k; k <= khi.k; ++k) {
                    VoxelKey key{i, j, k};
                    double d = detail::point_triangle_distance(scene.center_of(key), a, b, c);
                    if (d > truncation) continue;
                    auto [it, inserted] = scene.entries.try_emplace(key);
                    if (inserted || d < it->second.tsdf) it->second.tsdf = d;
                }
    }
    return scene;
}

struct TransferOptions {
    bool sample_faces = false;      // add surface samples for vertex-free voxels
    double samples_per_voxel_area = 4.0;
};

// Majority-vote label transfer. Votes are (instance_id, leaf_label) pairs from
// transformed mesh vertices falling inside each occupied voxel; the winning
// pair is the most frequent one, ties broken by smallest (instance, label).
// Voxels receiving no votes keep their existing labels.
inline void transfer_labels(VoxelScene& scene, const std::vector<LabeledMesh>& meshes,
                            const std::vector<AffineTransform>& transforms,
                            const TransferOptions& opts = {}) {
    if (meshes.size() != transforms.size())
        throw invalid_input("transfer_labels: mesh/transform count mismatch");

    struct Vote {
        std::int64_t instance;
        NodeId label;
        std::int64_t object;
        auto operator<=>(const Vote&) const = default;
    };
    std::map<VoxelKey, std::map<Vote, std::int64_t>> votes;
    std::map<VoxelKey, std::map<Vote, std::int64_t>> fallback_votes;

    for (std::size_t m = 0; m < meshes.size(); ++m) {
        const auto& mesh = meshes[m];
        mesh.validate();
        const auto& t = transforms[m];
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
            VoxelKey key = scene.key_of(t.apply(mesh.vertices[v]));
            if (!scene.entries.count(key)) continue;
            votes[key][{mesh.vertex_instances[v], mesh.vertex_labels[v], mesh.object_id}] += 1;
        }
        if (opts.sample_faces) {
            const double voxel_area = scene.resolution * scene.resolution;
            for (const auto& tri : mesh.triangles) {
                Vec3 a = t.apply(mesh.vertices[tri[0]]);
                Vec3 b = t.apply(mesh.vertices[tri[1]]);
                Vec3 c = t.apply(mesh.vertices[tri[2]]);
                double area = 0.5 * (b - a).cross(c - a).norm();
                auto n = static_cast<std::size_t>(
                    std::ceil(opts.samples_per_voxel_area * area / voxel_area));
                // Deterministic low-discrepancy barycentric pattern.
                for (std::size_t s = 0; s < n; ++s) {
                    double u = std::fmod((s + 0.5) * 0.7548776662466927, 1.0);
                    double w = std::fmod((s + 0.5) * 0.5698402909980532, 1.0);
                    if (u + w > 1.0) {
                        u = 1.0 - u;
                        w = 1.0 - w;
                    }
                    Vec3 p = a + u * (b - a) + w * (c - a);
                    VoxelKey key = scene.key_of(p);
                    if (!scene.entries.count(key)) continue;
                    Vote vote{mesh.vertex_instances[tri[0]], mesh.vertex_labels[tri[0]],
                              mesh.object_id};
                    fallback_votes[key][vote] += 1;
                }
            }
        }
    }

    auto assign = [](VoxelData& data, const std::map<Vote, std::int64_t>& ballot) {
        std::int64_t best_count = 0;
        const Vote* winner = nullptr;
        for (const auto& [vote, count] : ballot) {
            if (count > best_count) {  // map order makes ties pick smallest vote
                best_count = count;
                winner = &vote;
            }
        }
        data.instance_id = winner->instance;
        data.leaf_label = winner->label;
        data.object_id = winner->object;
    };

    for (auto& [key, data] : scene.entries) {
        if (auto it = votes.find(key); it != votes.end())
            assign(data, it->second);
        else if (auto fit = fallback_votes.find(key); fit != fallback_votes.end())
            assign(data, fit->second);
    }
}

inline void transfer_labels(VoxelScene& scene, const LabeledMesh& mesh, const AffineTransform& t,
                            const TransferOptions& opts = {}) {
    transfer_labels(scene, std::vector<LabeledMesh>{mesh}, std::vector<AffineTransform>{t}, opts);
}

inline VoxelScene remove_background(const VoxelScene& scene) {
    VoxelScene out = scene;
    std::erase_if(out.entries, [](const auto& kv) { return kv.second.object_id <= 0; });
    return out;
}

// Leaf labels projected to level k; unlabeled voxels stay 0.
inline std::map<VoxelKey, NodeId> project_scene_labels(const VoxelScene& scene,
                                                       const PartTaxonomy& tax, int k) {
    std::map<VoxelKey, NodeId> out;
    for (const auto& [key, data] : scene.entries)
        out[key] = data.leaf_label == kUnlabeled ? kUnlabeled
                                                 : tax.project_to_level(data.leaf_label, k);
    return out;
}

// --- .s2p scene file ---------------------------------------------------------

inline std::string write_scene(const VoxelScene& scene) {
    std::string out = "S2P v1 res=" + format_double(scene.resolution) + " origin=" +
                      format_double(scene.origin.x()) + " " + format_double(scene.origin.y()) +
                      " " + format_double(scene.origin.z()) +
                      " trunc=" + format_double(scene.truncation) + "\n";
    for (const auto& [key, d] : scene.entries) {
        out += std::to_string(key.i) + " " + std::to_string(key.j) + " " + std::to_string(key.k) +
               " " + format_double(d.tsdf) + " " + std::to_string(d.leaf_label) + " " +
               std::to_string(d.instance_id) + " " + std::to_string(d.object_id);
        if (d.color)
            out += " " + std::to_string((*d.color)[0]) + " " + std::to_string((*d.color)[1]) +
                   " " + std::to_string((*d.color)[2]);
        out += "\n";
    }
    return out;
}

inline VoxelScene read_scene(const std::string& text) {
    VoxelScene scene;
    std::size_t pos = 0, lineno = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        line = std::string_view(text.data() + pos, end - pos);
        pos = end + 1;
        ++lineno;
        return true;
    };
    auto split = [](std::string_view line) {
        std::vector<std::string_view> fields;
        std::size_t p = 0;
        while (p < line.size()) {
            while (p < line.size() && line[p] == ' ') ++p;
            std::size_t e = p;
            while (e < line.size() && line[e] != ' ') ++e;
            if (e > p) fields.push_back(line.substr(p, e - p));
            p = e;
        }
        return fields;
    };

    std::string_view header;
    if (!next_line(header)) throw parse_error("scene file", 1, "missing header");
    auto hf = split(header);
    if (hf.size() != 7 || hf[0] != "S2P" || hf[1] != "v1" || !hf[2].starts_with("res=") ||
        !hf[3].starts_with("origin=") || !hf[6].starts_with("trunc="))
        throw parse_error("scene file", 1, "malformed header");
    scene.resolution = parse_double(hf[2].substr(4));
    scene.origin = Vec3(parse_double(hf[3].substr(7)), parse_double(hf[4]), parse_double(hf[5]));
    scene.truncation = parse_double(hf[6].substr(6));

    std::string_view line;
    while (next_line(line)) {
        if (line.empty()) continue;
        auto f = split(line);
        if (f.size() != 7 && f.size() != 10)
            throw parse_error("scene file", lineno, "expected 7 or 10 fields");
        VoxelKey key{static_cast<std::int32_t>(parse_int(f[0])),
                     static_cast<std::int32_t>(parse_int(f[1])),
                     static_cast<std::int32_t>(parse_int(f[2]))};
        VoxelData d;
        d.tsdf = parse_double(f[3]);
        d.leaf_label = parse_int(f[4]);
        d.instance_id = parse_int(f[5]);
        d.object_id = parse_int(f[6]);
        if (f.size() == 10)
            d.color = {{static_cast<std::uint8_t>(parse_int(f[7])),
                        static_cast<std::uint8_t>(parse_int(f[8])),
                        static_cast<std::uint8_t>(parse_int(f[9]))}};
        if (!scene.entries.emplace(key, d).second)
            throw parse_error("scene file", lineno, "duplicate voxel key");
    }
    return scene;
}

}  // namespace s2p
