#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scan2part/common.hpp"
#include "scan2part/meanshift.hpp"
#include "scan2part/taxonomy.hpp"
#include "scan2part/voxel.hpp"

namespace s2p {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw parse_error("write failed: " + path);
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t p = 0;
    while (p < line.size()) {
        while (p < line.size() && (line[p] == ' ' || line[p] == '\t')) ++p;
        std::size_t e = p;
        while (e < line.size() && line[e] != ' ' && line[e] != '\t') ++e;
        if (e > p) fields.push_back(line.substr(p, e - p));
        p = e;
    }
    return fields;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
    std::size_t pos = 0, lineno = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        fn(std::string_view(text.data() + pos, end - pos), ++lineno);
        pos = end + 1;
    }
}

}  // namespace detail

// Voxel-keyed tensor rows (embeddings or per-level scores), keys sorted.
struct VoxelTensor {
    std::string field = "emb";  // "emb" or "score"
    int level = 0;              // meaningful for score fields
    std::vector<VoxelKey> keys;
    Eigen::MatrixXd values;     // N x D, row order matches keys
};

inline std::string write_tensor(const VoxelTensor& t) {
    std::string out = "# field=" + t.field + " level=" + std::to_string(t.level) +
                      " dim=" + std::to_string(t.values.cols()) + "\n";
    for (std::size_t i = 0; i < t.keys.size(); ++i) {
        out += std::to_string(t.keys[i].i) + "\t" + std::to_string(t.keys[i].j) + "\t" +
               std::to_string(t.keys[i].k);
        for (Eigen::Index d = 0; d < t.values.cols(); ++d)
            out += "\t" + format_double(t.values(static_cast<Eigen::Index>(i), d));
        out += "\n";
    }
    return out;
}

inline VoxelTensor read_tensor(const std::string& text) {
    VoxelTensor t;
    int dim = -1;
    std::vector<std::vector<double>> rows;
    detail::for_each_line(text, [&](std::string_view line, std::size_t lineno) {
        if (line.empty()) return;
        if (line[0] == '#') {
            auto fields = detail::split_ws(line.substr(1));
            for (auto f : fields) {
                if (f.starts_with("field=")) t.field = std::string(f.substr(6));
                else if (f.starts_with("level=")) t.level = static_cast<int>(parse_int(f.substr(6)));
                else if (f.starts_with("dim=")) dim = static_cast<int>(parse_int(f.substr(4)));
            }
            return;
        }
        auto f = detail::split_ws(line);
        if (dim < 0 || f.size() != static_cast<std::size_t>(3 + dim))
            throw parse_error("tensor file", lineno, "bad field count");
        t.keys.push_back({static_cast<std::int32_t>(parse_int(f[0])),
                          static_cast<std::int32_t>(parse_int(f[1])),
                          static_cast<std::int32_t>(parse_int(f[2]))});
        std::vector<double> row(dim);
        for (int d = 0; d < dim; ++d) row[d] = parse_double(f[3 + d]);
        rows.push_back(std::move(row));
    });
    if (dim < 0) throw parse_error("tensor file: missing header");
    t.values.resize(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int d = 0; d < dim; ++d) t.values(static_cast<Eigen::Index>(i), d) = rows[i][d];
    return t;
}

// Per-level prediction file: `# level=<k>` then one `i j k label` per line.
inline std::string write_predictions(const std::map<VoxelKey, NodeId>& labels, int level) {
    std::string out = "# level=" + std::to_string(level) + "\n";
    for (const auto& [key, label] : labels)
        out += std::to_string(key.i) + "\t" + std::to_string(key.j) + "\t" +
               std::to_string(key.k) + "\t" + std::to_string(label) + "\n";
    return out;
}

inline std::pair<std::map<VoxelKey, NodeId>, int> read_predictions(const std::string& text) {
    std::map<VoxelKey, NodeId> labels;
    int level = 0;
    detail::for_each_line(text, [&](std::string_view line, std::size_t lineno) {
        if (line.empty()) return;
        if (line[0] == '#') {
            for (auto f : detail::split_ws(line.substr(1)))
                if (f.starts_with("level=")) level = static_cast<int>(parse_int(f.substr(6)));
            return;
        }
        auto f = detail::split_ws(line);
        if (f.size() != 4) throw parse_error("prediction file", lineno, "expected 4 fields");
        VoxelKey key{static_cast<std::int32_t>(parse_int(f[0])),
                     static_cast<std::int32_t>(parse_int(f[1])),
                     static_cast<std::int32_t>(parse_int(f[2]))};
        if (!labels.emplace(key, parse_int(f[3])).second)
            throw parse_error("prediction file", lineno, "duplicate voxel key");
    });
    return {std::move(labels), level};
}

// Instance file: header block of `instance_id class_id confidence` lines, then
// `instance_id i j k` membership lines, separated by a `---` line.
inline std::string write_instances(const InstanceSet& set) {
    std::string out;
    for (std::size_t i = 0; i < set.instances.size(); ++i) {
        const auto& inst = set.instances[i];
        out += std::to_string(i + 1) + "\t" + std::to_string(inst.class_id) + "\t" +
               format_double(inst.confidence) + "\n";
    }
    out += "---\n";
    for (std::size_t i = 0; i < set.instances.size(); ++i)
        for (const auto& key : set.instances[i].voxels)
            out += std::to_string(i + 1) + "\t" + std::to_string(key.i) + "\t" +
                   std::to_string(key.j) + "\t" + std::to_string(key.k) + "\n";
    return out;
}

inline InstanceSet read_instances(const std::string& text) {
    InstanceSet set;
    bool in_members = false;
    detail::for_each_line(text, [&](std::string_view line, std::size_t lineno) {
        if (line.empty()) return;
        if (line == "---") {
            in_members = true;
            return;
        }
        auto f = detail::split_ws(line);
        if (!in_members) {
            if (f.size() != 3) throw parse_error("instance file", lineno, "expected 3 fields");
            auto id = parse_int(f[0]);
            if (id != static_cast<std::int64_t>(set.instances.size()) + 1)
                throw parse_error("instance file", lineno, "instance ids must be dense from 1");
            Instance inst;
            inst.class_id = parse_int(f[1]);
            inst.confidence = parse_double(f[2]);
            set.instances.push_back(std::move(inst));
        } else {
            if (f.size() != 4) throw parse_error("instance file", lineno, "expected 4 fields");
            auto id = parse_int(f[0]);
            if (id < 1 || id > static_cast<std::int64_t>(set.instances.size()))
                throw parse_error("instance file", lineno, "membership references unknown instance");
            set.instances[id - 1].voxels.insert(
                {static_cast<std::int32_t>(parse_int(f[1])),
                 static_cast<std::int32_t>(parse_int(f[2])),
                 static_cast<std::int32_t>(parse_int(f[3]))});
        }
    });
    return set;
}

// Labeled mesh file: `LMESH v1 object=<id>` header, `v x y z label instance`
// vertex lines, `f a b c` triangle lines (0-based indices).
inline std::string write_mesh(const LabeledMesh& mesh) {
    std::string out = "LMESH v1 object=" + std::to_string(mesh.object_id) + "\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto& p = mesh.vertices[i];
        out += "v " + format_double(p.x()) + " " + format_double(p.y()) + " " +
               format_double(p.z()) + " " + std::to_string(mesh.vertex_labels[i]) + " " +
               std::to_string(mesh.vertex_instances[i]) + "\n";
    }
    for (const auto& t : mesh.triangles)
        out += "f " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " +
               std::to_string(t[2]) + "\n";
    return out;
}

inline LabeledMesh read_mesh(const std::string& text) {
    LabeledMesh mesh;
    bool saw_header = false;
    detail::for_each_line(text, [&](std::string_view line, std::size_t lineno) {
        if (line.empty()) return;
        auto f = detail::split_ws(line);
        if (!saw_header) {
            if (f.size() != 3 || f[0] != "LMESH" || f[1] != "v1" || !f[2].starts_with("object="))
                throw parse_error("mesh file", lineno, "malformed header");
            mesh.object_id = parse_int(f[2].substr(7));
            saw_header = true;
            return;
        }
        if (f[0] == "v") {
            if (f.size() != 6) throw parse_error("mesh file", lineno, "expected v x y z label inst");
            mesh.vertices.emplace_back(parse_double(f[1]), parse_double(f[2]), parse_double(f[3]));
            mesh.vertex_labels.push_back(parse_int(f[4]));
            mesh.vertex_instances.push_back(parse_int(f[5]));
        } else if (f[0] == "f") {
            if (f.size() != 4) throw parse_error("mesh file", lineno, "expected f a b c");
            mesh.triangles.push_back({static_cast<std::int32_t>(parse_int(f[1])),
                                      static_cast<std::int32_t>(parse_int(f[2])),
                                      static_cast<std::int32_t>(parse_int(f[3]))});
        } else {
            throw parse_error("mesh file", lineno, "unknown record type");
        }
    });
    if (!saw_header) throw parse_error("mesh file: missing header");
    mesh.validate();
    return mesh;
}

}  // namespace s2p
