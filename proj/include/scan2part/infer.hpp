#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "scan2part/common.hpp"
#include "scan2part/taxonomy.hpp"

namespace s2p {

// Score field at one hierarchy level: per-voxel score vector over the level's
// class set, columns ordered by ascending class id.
struct ScoreField {
    std::vector<NodeId> classes;  // ascending
    Eigen::MatrixXd scores;       // N x |classes|

    void validate() const {
        if (static_cast<std::size_t>(scores.cols()) != classes.size())
            throw invalid_input("score field: column/class count mismatch");
        if (!std::is_sorted(classes.begin(), classes.end()))
            throw invalid_input("score field: classes must be ascending");
    }

    Eigen::Index class_column(NodeId id) const {
        auto it = std::lower_bound(classes.begin(), classes.end(), id);
        if (it == classes.end() || *it != id)
            throw invalid_input("score field: unknown class " + std::to_string(id));
        return static_cast<Eigen::Index>(it - classes.begin());
    }
};

// Per-voxel argmax, ties broken by smallest class id (lowest column).
inline std::vector<NodeId> flat_predict(const ScoreField& field) {
    field.validate();
    std::vector<NodeId> out(field.scores.rows());
    for (Eigen::Index i = 0; i < field.scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < field.scores.cols(); ++j)
            if (field.scores(i, j) > field.scores(i, best)) best = j;
        out[i] = field.classes[best];
    }
    return out;
}

// Sums leaf probabilities over the fibers of project_to_level, producing a
// level-k distribution. Inputs must be per-voxel probability simplices.
inline ScoreField bottom_up_project(const ScoreField& leaf_probs, const PartTaxonomy& tax, int k) {
    leaf_probs.validate();
    for (Eigen::Index i = 0; i < leaf_probs.scores.rows(); ++i) {
        double s = leaf_probs.scores.row(i).sum();
        if (leaf_probs.scores.row(i).minCoeff() < 0.0 || std::abs(s - 1.0) > 1e-6)
            throw invalid_input("bottom_up_project: row " + std::to_string(i) +
                                " is not a probability simplex");
    }
    ScoreField out;
    auto classes = tax.level_classes(k);
    out.classes.assign(classes.begin(), classes.end());
    out.scores = Eigen::MatrixXd::Zero(leaf_probs.scores.rows(), out.classes.size());
    for (std::size_t c = 0; c < leaf_probs.classes.size(); ++c) {
        NodeId target = tax.project_to_level(leaf_probs.classes[c], k);
        out.scores.col(out.class_column(target)) += leaf_probs.scores.col(c);
    }
    return out;
}

// Restricts level-k scores per voxel to descendants of the ground-truth parent
// label at level k-1, then argmaxes. Parents with no level-k descendants carry
// themselves down; parent 0 predicts 0.
inline std::vector<NodeId> top_down_predict(const ScoreField& level_scores,
                                            const std::vector<NodeId>& gt_parent,
                                            const PartTaxonomy& tax, int k) {
    if (k < 2) throw invalid_input("top_down_predict: level must be >= 2");
    level_scores.validate();
    if (gt_parent.size() != static_cast<std::size_t>(level_scores.scores.rows()))
        throw invalid_input("top_down_predict: parent/score row mismatch");

    // level-k class -> its level-(k-1) ancestor
    std::map<NodeId, NodeId> parent_of;
    for (NodeId c : level_scores.classes) parent_of[c] = tax.project_to_level(c, k - 1);

    std::vector<NodeId> out(gt_parent.size());
    for (std::size_t i = 0; i < gt_parent.size(); ++i) {
        NodeId parent = gt_parent[i];
        if (parent == kUnlabeled) {
            out[i] = kUnlabeled;
            continue;
        }
        NodeId best = kUnlabeled;
        double best_score = 0.0;
        for (std::size_t j = 0; j < level_scores.classes.size(); ++j) {
            if (parent_of.at(level_scores.classes[j]) != parent) continue;
            double s = level_scores.scores(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(j));
            if (best == kUnlabeled || s > best_score) {
                best = level_scores.classes[j];
                best_score = s;
            }
        }
        out[i] = best == kUnlabeled ? parent : best;  // leaf above level k carries down
    }
    return out;
}

}  // namespace s2p
