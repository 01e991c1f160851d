#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scan2part/common.hpp"
#include "scan2part/meanshift.hpp"
#include "scan2part/rng.hpp"
#include "scan2part/taxonomy.hpp"
#include "scan2part/transform.hpp"
#include "scan2part/voxel.hpp"

namespace s2p::synthetic {

// Fixed node ids of the synthetic 3-level taxonomy (category / coarse part /
// fine part). Intentionally imbalanced: legs dominate, tabletops are rare.
enum : NodeId {
    kChair = 1,
    kChairBase = 2,
    kChairLeg = 3,
    kChairSeat = 4,
    kChairSeatSurface = 5,
    kChairBack = 6,
    kChairBackSurface = 7,
    kTable = 8,
    kTableBase = 9,
    kTableLeg = 10,
    kTabletop = 11,
    kTabletopSurface = 12,
    kStorage = 13,
    kStorageBody = 14,
    kStorageSidePanel = 15,
    kStorageShelf = 16,
};

inline PartTaxonomy make_taxonomy() {
    std::vector<PartNode> nodes = {
        {kChair, "Chair", 0, {}, 0},
        {kChairBase, "Chair/chair_base", kChair, {}, 0},
        {kChairLeg, "Chair/chair_base/chair_leg", kChairBase, {}, 0},
        {kChairSeat, "Chair/chair_seat", kChair, {}, 0},
        {kChairSeatSurface, "Chair/chair_seat/seat_surface", kChairSeat, {}, 0},
        {kChairBack, "Chair/chair_back", kChair, {}, 0},
        {kChairBackSurface, "Chair/chair_back/back_surface", kChairBack, {}, 0},
        {kTable, "Table", 0, {}, 0},
        {kTableBase, "Table/table_base", kTable, {}, 0},
        {kTableLeg, "Table/table_base/table_leg", kTableBase, {}, 0},
        {kTabletop, "Table/tabletop", kTable, {}, 0},
        {kTabletopSurface, "Table/tabletop/tabletop_surface", kTabletop, {}, 0},
        {kStorage, "Storage", 0, {}, 0},
        {kStorageBody, "Storage/storage_body", kStorage, {}, 0},
        {kStorageSidePanel, "Storage/storage_body/side_panel", kStorageBody, {}, 0},
        {kStorageShelf, "Storage/storage_body/shelf", kStorageBody, {}, 0},
    };
    return PartTaxonomy::from_nodes(std::move(nodes));
}

enum class Category { kChairObj, kTableObj, kStorageObj };

struct ObjectRecipe {
    Category category = Category::kChairObj;
    double size = 1.0;       // uniform scale on the canonical part dimensions
    Transform9 pose;         // applied to the assembled object
};

struct SyntheticSpec {
    std::uint64_t seed = 1;
    std::vector<ObjectRecipe> objects;
    double resolution = 0.05;
    double truncation = 0.05;
};

struct SyntheticScene {
    std::vector<LabeledMesh> meshes;  // one per object, world coordinates
    PartTaxonomy taxonomy;            // occurrences counted from the gt scene
    VoxelScene ground_truth;
};

namespace detail {

// Axis-aligned box surface subdivided so that every surface voxel receives
// mesh vertices during label transfer.
inline void append_box(LabeledMesh& mesh, const Vec3& lo, const Vec3& hi, double step,
                       NodeId label, std::int64_t instance, const Transform9& pose) {
    if ((hi - lo).minCoeff() <= 0.0) throw invalid_input("synthetic: degenerate box dimensions");
    auto grid_axis = [step](double a, double b) {
        int n = std::max(1, static_cast<int>(std::ceil((b - a) / step)));
        std::vector<double> vals(n + 1);
        for (int i = 0; i <= n; ++i) vals[i] = a + (b - a) * i / n;
        return vals;
    };
    auto xs = grid_axis(lo.x(), hi.x());
    auto ys = grid_axis(lo.y(), hi.y());
    auto zs = grid_axis(lo.z(), hi.z());

    // axis = fixed dimension, side = lo/hi face
    auto emit_face = [&](int axis, bool high) {
        const auto& u = axis == 0 ? ys : xs;
        const auto& v = axis == 2 ? ys : zs;
        double fixed = high ? hi[axis] : lo[axis];
        auto base = static_cast<std::int32_t>(mesh.vertices.size());
        for (std::size_t iu = 0; iu < u.size(); ++iu)
            for (std::size_t iv = 0; iv < v.size(); ++iv) {
                Vec3 p;
                if (axis == 0) p = Vec3(fixed, u[iu], v[iv]);
                else if (axis == 1) p = Vec3(u[iu], fixed, v[iv]);
                else p = Vec3(u[iu], v[iv], fixed);
                mesh.vertices.push_back(pose.apply(p));
                mesh.vertex_labels.push_back(label);
                mesh.vertex_instances.push_back(instance);
            }
        auto nv = static_cast<std::int32_t>(v.size());
        for (std::size_t iu = 0; iu + 1 < u.size(); ++iu)
            for (std::size_t iv = 0; iv + 1 < v.size(); ++iv) {
                auto a = base + static_cast<std::int32_t>(iu) * nv + static_cast<std::int32_t>(iv);
                mesh.triangles.push_back({a, a + nv, a + 1});
                mesh.triangles.push_back({a + 1, a + nv, a + nv + 1});
            }
    };
    for (int axis : {0, 1, 2}) {
        emit_face(axis, false);
        emit_face(axis, true);
    }
}

}  // namespace detail

// Builds one parametric furniture object; part instance ids are assigned from
// `next_instance` onward.
inline LabeledMesh make_object(const ObjectRecipe& recipe, double vertex_step,
                               std::int64_t object_id, std::int64_t& next_instance) {
    if (recipe.size <= 0.0) throw invalid_input("synthetic: object size must be positive");
    LabeledMesh mesh;
    mesh.object_id = object_id;
    const double s = recipe.size;
    auto box = [&](double x0, double y0, double z0, double x1, double y1, double z1, NodeId label,
                   std::int64_t instance) {
        detail::append_box(mesh, s * Vec3(x0, y0, z0), s * Vec3(x1, y1, z1), vertex_step, label,
                           instance, recipe.pose);
    };

    switch (recipe.category) {
        case Category::kChairObj: {
            for (double cx : {0.0, 0.35})
                for (double cy : {0.0, 0.35})
                    box(cx, cy, 0.0, cx + 0.05, cy + 0.05, 0.40, kChairLeg, next_instance++);
            box(0.0, 0.0, 0.40, 0.40, 0.40, 0.45, kChairSeatSurface, next_instance++);
            box(0.0, 0.35, 0.45, 0.40, 0.40, 0.85, kChairBackSurface, next_instance++);
            break;
        }
        case Category::kTableObj: {
            for (double cx : {0.0, 1.10})
                for (double cy : {0.0, 0.70})
                    box(cx, cy, 0.0, cx + 0.06, cy + 0.06, 0.70, kTableLeg, next_instance++);
            box(0.0, 0.0, 0.70, 1.16, 0.76, 0.75, kTabletopSurface, next_instance++);
            break;
        }
        case Category::kStorageObj: {
            box(0.0, 0.0, 0.0, 0.05, 0.40, 0.90, kStorageSidePanel, next_instance++);
            box(0.75, 0.0, 0.0, 0.80, 0.40, 0.90, kStorageSidePanel, next_instance++);
            box(0.05, 0.0, 0.25, 0.75, 0.40, 0.30, kStorageShelf, next_instance++);
            box(0.05, 0.0, 0.60, 0.75, 0.40, 0.65, kStorageShelf, next_instance++);
            break;
        }
    }
    return mesh;
}

inline void merge_scene(VoxelScene& into, const VoxelScene& from) {
    for (const auto& [key, data] : from.entries) {
        auto [it, inserted] = into.entries.try_emplace(key, data);
        if (!inserted && data.tsdf < it->second.tsdf) it->second.tsdf = data.tsdf;
    }
}

// Deterministic spec from a seed: 3 objects (one per category) with seeded
// sizes, yaws, and non-overlapping positions.
inline SyntheticSpec default_spec(std::uint64_t seed, double resolution = 0.05,
                                  double truncation = 0.05) {
    SplitMix64 rng(seed);
    SyntheticSpec spec;
    spec.seed = seed;
    spec.resolution = resolution;
    spec.truncation = truncation;
    const Category cats[] = {Category::kChairObj, Category::kTableObj, Category::kStorageObj};
    for (int i = 0; i < 3; ++i) {
        ObjectRecipe r;
        r.category = cats[i];
        r.size = rng.uniform(0.8, 1.2);
        double yaw = rng.uniform(0.0, 2.0 * M_PI);
        r.pose.rotation = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
        r.pose.translation = Vec3(2.5 * i + rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 0.0);
        spec.objects.push_back(r);
    }
    return spec;
}

inline SyntheticScene gen_synthetic(const SyntheticSpec& spec) {
    if (spec.objects.empty()) throw invalid_input("synthetic: no object recipes");
    SyntheticScene out;
    std::int64_t next_instance = 1;
    for (std::size_t i = 0; i < spec.objects.size(); ++i)
        out.meshes.push_back(make_object(spec.objects[i], spec.resolution / 2.0,
                                         static_cast<std::int64_t>(i) + 1, next_instance));

    VoxelScene scene;
    scene.resolution = spec.resolution;
    scene.truncation = spec.truncation;
    for (const auto& mesh : out.meshes)
        merge_scene(scene, voxelize_mesh(mesh, spec.resolution, spec.truncation));
    std::vector<AffineTransform> identities(out.meshes.size());
    transfer_labels(scene, out.meshes, identities);
    out.ground_truth = remove_background(scene);

    std::vector<NodeId> labels;
    for (const auto& [key, d] : out.ground_truth.entries) labels.push_back(d.leaf_label);
    out.taxonomy = make_taxonomy().with_occurrences(labels);
    return out;
}

// Ground-truth instances at a hierarchy level, confidence 1.
inline InstanceSet instances_from_scene(const VoxelScene& scene, const PartTaxonomy& tax,
                                        int level) {
    std::map<std::int64_t, Instance> by_id;
    std::map<std::int64_t, std::map<NodeId, std::int64_t>> votes;
    for (const auto& [key, d] : scene.entries) {
        if (d.instance_id <= 0 || d.leaf_label == kUnlabeled) continue;
        auto& inst = by_id[d.instance_id];
        inst.voxels.insert(key);
        inst.confidence = 1.0;
        votes[d.instance_id][tax.project_to_level(d.leaf_label, level)] += 1;
    }
    InstanceSet out;
    for (auto& [id, inst] : by_id) {
        std::int64_t best = 0;
        for (const auto& [label, count] : votes.at(id))
            if (count > best) {  // ties keep smallest label via map order
                best = count;
                inst.class_id = label;
            }
        out.instances.push_back(std::move(inst));
    }
    return out;
}

}  // namespace s2p::synthetic
