#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "scan2part/common.hpp"
#include "scan2part/taxonomy.hpp"
#include "scan2part/voxel.hpp"

namespace s2p {

struct MeanShiftParams {
    double bandwidth = 0.75;   // flat-kernel radius; 1.5 * delta_v downstream of the pull loss
    int max_iters = 100;
    double shift_eps = 1e-6;
    double merge_radius = 0.375;

    void validate() const {
        if (bandwidth <= 0.0) throw invalid_input("mean shift: bandwidth must be positive");
        if (merge_radius > bandwidth)
            throw invalid_input("mean shift: merge radius must not exceed bandwidth");
        if (max_iters < 1 || shift_eps <= 0.0) throw invalid_input("mean shift: bad parameters");
    }
};

// Flat-kernel mean shift: each point iterates to the mean of the input points
// within `bandwidth` of its current position; converged modes closer than
// merge_radius collapse into one cluster. Cluster ids are dense from 1 and
// canonicalized by the smallest member index, so the result is invariant under
// input permutation up to that relabeling.
inline std::vector<int> mean_shift(const Eigen::MatrixXd& points, const MeanShiftParams& params) {
    params.validate();
    const Eigen::Index n = points.rows();
    if (n == 0) throw invalid_input("mean shift: empty input");

    Eigen::MatrixXd modes(n, points.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd x = points.row(i).transpose();
        for (int iter = 0; iter < params.max_iters; ++iter) {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(points.cols());
            int count = 0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if ((points.row(j).transpose() - x).norm() <= params.bandwidth) {
                    mean += points.row(j).transpose();
                    ++count;
                }
            }
            mean /= static_cast<double>(count);  // count >= 1: x starts at a data point
            double shift = (mean - x).norm();
            x = mean;
            if (shift < params.shift_eps) break;
        }
        modes.row(i) = x.transpose();
    }

    // Greedy merge in index order; deterministic given canonical input order.
    std::vector<int> cluster(n, 0);
    std::vector<Eigen::VectorXd> centers;
    for (Eigen::Index i = 0; i < n; ++i) {
        int assigned = 0;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if ((centers[c] - modes.row(i).transpose()).norm() <= params.merge_radius) {
                assigned = static_cast<int>(c) + 1;
                break;
            }
        }
        if (assigned == 0) {
            centers.push_back(modes.row(i).transpose());
            assigned = static_cast<int>(centers.size());
        }
        cluster[i] = assigned;
    }
    return cluster;
}

struct Instance {
    std::set<VoxelKey> voxels;
    NodeId class_id = 0;
    double confidence = 0.0;
};

struct InstanceSet {
    std::vector<Instance> instances;
};

// Per cluster: class = majority semantic label (ties to smallest id),
// confidence = fraction of the cluster carrying that label. Clusters below
// min_confidence are dropped.
inline InstanceSet extract_instances(const std::vector<int>& clusters,
                                     const std::vector<NodeId>& sem_labels,
                                     const std::vector<VoxelKey>& keys, double min_confidence) {
    if (clusters.size() != sem_labels.size() || clusters.size() != keys.size())
        throw invalid_input("extract_instances: input size mismatch");

    std::map<int, std::map<NodeId, std::int64_t>> histograms;
    std::map<int, std::set<VoxelKey>> membership;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        histograms[clusters[i]][sem_labels[i]] += 1;
        membership[clusters[i]].insert(keys[i]);
    }

    InstanceSet out;
    for (const auto& [cid, hist] : histograms) {
        std::int64_t total = 0, best = 0;
        NodeId winner = 0;
        for (const auto& [label, count] : hist) {
            total += count;
            if (count > best) {  // map order: ties keep smallest label
                best = count;
                winner = label;
            }
        }
        Instance inst;
        inst.class_id = winner;
        inst.confidence = static_cast<double>(best) / static_cast<double>(total);
        inst.voxels = membership.at(cid);
        if (inst.confidence >= min_confidence) out.instances.push_back(std::move(inst));
    }
    return out;
}

}  // namespace s2p
