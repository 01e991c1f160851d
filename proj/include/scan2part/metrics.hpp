#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scan2part/common.hpp"
#include "scan2part/meanshift.hpp"
#include "scan2part/taxonomy.hpp"

namespace s2p {

enum class AccMode { kRecall, kBalancedBinary };

// Confusion counts over the level's class set plus background 0, both axes
// ordered by ascending class id.
struct ConfusionMatrix {
    std::vector<NodeId> classes;  // ascending, without 0
    std::vector<std::vector<std::int64_t>> counts;  // [gt][pred], axis = {0} + classes

    std::size_t axis_index(NodeId id) const {
        if (id == 0) return 0;
        auto it = std::lower_bound(classes.begin(), classes.end(), id);
        if (it == classes.end() || *it != id)
            throw invalid_input("confusion matrix: class " + std::to_string(id) + " not in set");
        return 1 + static_cast<std::size_t>(it - classes.begin());
    }
};

struct ClassMetrics {
    NodeId class_id = 0;
    std::optional<double> iou;  // missing when the class has no gt voxels
    std::optional<double> acc;
};

struct SemanticReport {
    std::vector<ClassMetrics> per_class;
    double miou = 0.0;  // mean over defined classes
    double macc = 0.0;
    std::size_t defined_classes = 0;
};

template <typename LabelMap>
ConfusionMatrix build_confusion(const LabelMap& pred, const LabelMap& gt,
                                const std::set<NodeId>& classes) {
    if (pred.size() != gt.size())
        throw invalid_input("semantic metrics: prediction/ground-truth key mismatch");
    ConfusionMatrix cm;
    cm.classes.assign(classes.begin(), classes.end());
    cm.counts.assign(classes.size() + 1, std::vector<std::int64_t>(classes.size() + 1, 0));
    auto git = gt.begin();
    for (auto pit = pred.begin(); pit != pred.end(); ++pit, ++git) {
        if (pit->first != git->first)
            throw invalid_input("semantic metrics: prediction/ground-truth key mismatch");
        cm.counts[cm.axis_index(git->second)][cm.axis_index(pit->second)] += 1;
    }
    return cm;
}

inline SemanticReport semantic_metrics(const ConfusionMatrix& cm, AccMode mode = AccMode::kRecall) {
    SemanticReport rep;
    const std::size_t dim = cm.classes.size() + 1;
    std::int64_t total = 0;
    for (const auto& row : cm.counts)
        for (std::int64_t v : row) total += v;

    double iou_sum = 0.0, acc_sum = 0.0;
    for (std::size_t c = 1; c < dim; ++c) {
        std::int64_t tp = cm.counts[c][c], fn = 0, fp = 0;
        for (std::size_t o = 0; o < dim; ++o) {
            if (o == c) continue;
            fn += cm.counts[c][o];
            fp += cm.counts[o][c];
        }
        ClassMetrics m;
        m.class_id = cm.classes[c - 1];
        if (tp + fn > 0) {  // class present in ground truth
            m.iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
            double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
            if (mode == AccMode::kRecall) {
                m.acc = recall;
            } else {
                std::int64_t tn = total - tp - fp - fn;
                double spec = tn + fp > 0
                                  ? static_cast<double>(tn) / static_cast<double>(tn + fp)
                                  : 1.0;
                m.acc = 0.5 * (recall + spec);
            }
            iou_sum += *m.iou;
            acc_sum += *m.acc;
            ++rep.defined_classes;
        }
        rep.per_class.push_back(std::move(m));
    }
    if (rep.defined_classes > 0) {
        rep.miou = iou_sum / static_cast<double>(rep.defined_classes);
        rep.macc = acc_sum / static_cast<double>(rep.defined_classes);
    }
    return rep;
}

template <typename LabelMap>
SemanticReport semantic_metrics(const LabelMap& pred, const LabelMap& gt,
                                const std::set<NodeId>& classes, AccMode mode = AccMode::kRecall) {
    return semantic_metrics(build_confusion(pred, gt, classes), mode);
}

// Arithmetic mean of mIoU over hierarchy levels.
inline double hierarchical_summary(const std::vector<SemanticReport>& per_level) {
    if (per_level.empty()) throw invalid_input("hierarchical summary: no levels");
    double sum = 0.0;
    for (const auto& r : per_level) sum += r.miou;
    return sum / static_cast<double>(per_level.size());
}

struct InstanceClassReport {
    NodeId class_id = 0;
    double ap = 0.0;
    std::int64_t tp = 0, fp = 0, num_gt = 0;
    double matched_mean_iou = 0.0;
};

struct InstanceReport {
    double ap = 0.0;         // mean over classes with gt instances
    double precision = 0.0;  // micro, at the IoU threshold
    double recall = 0.0;
    double matched_mean_iou = 0.0;
    std::size_t num_pred = 0, num_gt = 0;
    std::vector<InstanceClassReport> per_class;
};

namespace detail {

inline double voxel_iou(const std::set<VoxelKey>& a, const std::set<VoxelKey>& b) {
    std::size_t inter = 0;
    for (const auto& k : a) inter += b.count(k);
    std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// All-point interpolated area under the precision-recall curve.
inline double average_precision(const std::vector<bool>& tp_flags, std::int64_t num_gt) {
    if (num_gt == 0) return 0.0;
    std::vector<double> precision, recall;
    std::int64_t tp = 0, fp = 0;
    for (bool flag : tp_flags) {
        flag ? ++tp : ++fp;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
    }
    // interpolate: precision at recall r = max precision at recall >= r
    for (std::size_t i = precision.size(); i-- > 1;)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double ap = 0.0, prev_r = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i) {
        ap += (recall[i] - prev_r) * precision[i];
        prev_r = recall[i];
    }
    return ap;
}

}  // namespace detail

// Detection-style evaluation: per class, predictions sorted by confidence
// descending (ties by instance index), each greedily matched to the unmatched
// gt instance of the same class with the highest voxel IoU >= threshold.
inline InstanceReport instance_metrics(const InstanceSet& pred, const InstanceSet& gt,
                                       double iou_threshold) {
    if (iou_threshold <= 0.0 || iou_threshold > 1.0)
        throw invalid_input("instance metrics: threshold must be in (0, 1]");

    std::set<NodeId> class_ids;
    for (const auto& inst : pred.instances) class_ids.insert(inst.class_id);
    for (const auto& inst : gt.instances) class_ids.insert(inst.class_id);

    InstanceReport rep;
    rep.num_pred = pred.instances.size();
    rep.num_gt = gt.instances.size();
    std::int64_t total_tp = 0, total_fp = 0;
    double iou_accum = 0.0;
    std::int64_t matched = 0;
    double ap_sum = 0.0;
    std::size_t ap_classes = 0;

    for (NodeId cls : class_ids) {
        std::vector<std::size_t> preds_c, gts_c;
        for (std::size_t i = 0; i < pred.instances.size(); ++i)
            if (pred.instances[i].class_id == cls) preds_c.push_back(i);
        for (std::size_t i = 0; i < gt.instances.size(); ++i)
            if (gt.instances[i].class_id == cls) gts_c.push_back(i);

        std::stable_sort(preds_c.begin(), preds_c.end(), [&](std::size_t a, std::size_t b) {
            return pred.instances[a].confidence > pred.instances[b].confidence;
        });

        std::vector<bool> gt_used(gts_c.size(), false);
        std::vector<bool> tp_flags;
        InstanceClassReport crep;
        crep.class_id = cls;
        crep.num_gt = static_cast<std::int64_t>(gts_c.size());
        double cls_iou_accum = 0.0;
        for (std::size_t pi : preds_c) {
            double best_iou = 0.0;
            std::size_t best_g = gts_c.size();
            for (std::size_t g = 0; g < gts_c.size(); ++g) {
                if (gt_used[g]) continue;
                double iou = detail::voxel_iou(pred.instances[pi].voxels,
                                               gt.instances[gts_c[g]].voxels);
                if (iou >= iou_threshold && iou > best_iou) {
                    best_iou = iou;
                    best_g = g;
                }
            }
            if (best_g < gts_c.size()) {
                gt_used[best_g] = true;
                tp_flags.push_back(true);
                ++crep.tp;
                cls_iou_accum += best_iou;
            } else {
                tp_flags.push_back(false);
                ++crep.fp;
            }
        }
        crep.ap = detail::average_precision(tp_flags, crep.num_gt);
        crep.matched_mean_iou = crep.tp > 0 ? cls_iou_accum / static_cast<double>(crep.tp) : 0.0;
        total_tp += crep.tp;
        total_fp += crep.fp;
        iou_accum += cls_iou_accum;
        matched += crep.tp;
        if (crep.num_gt > 0) {
            ap_sum += crep.ap;
            ++ap_classes;
        }
        rep.per_class.push_back(std::move(crep));
    }

    rep.ap = ap_classes > 0 ? ap_sum / static_cast<double>(ap_classes) : 0.0;
    rep.precision = total_tp + total_fp > 0
                        ? static_cast<double>(total_tp) / static_cast<double>(total_tp + total_fp)
                        : 0.0;
    rep.recall = rep.num_gt > 0 ? static_cast<double>(total_tp) / static_cast<double>(rep.num_gt)
                                : 0.0;
    rep.matched_mean_iou = matched > 0 ? iou_accum / static_cast<double>(matched) : 0.0;
    return rep;
}

}  // namespace s2p
