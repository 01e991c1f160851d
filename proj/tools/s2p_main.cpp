// Command-line front end for the scan2part toolkit: synthetic scene
// generation, taxonomy edits, alignment, voxelization, label transfer,
// hierarchical inference, clustering, loss kernels, and evaluation.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scan2part/defaults.hpp"
#include "scan2part/gradsuite.hpp"
#include "scan2part/icp.hpp"
#include "scan2part/infer.hpp"
#include "scan2part/io.hpp"
#include "scan2part/losses.hpp"
#include "scan2part/meanshift.hpp"
#include "scan2part/metrics.hpp"
#include "scan2part/rng.hpp"
#include "scan2part/synthetic.hpp"
#include "scan2part/taxonomy.hpp"
#include "scan2part/transform.hpp"
#include "scan2part/voxel.hpp"

namespace {

using namespace s2p;

constexpr double kDefaultResolution = defaults::kResolutionCoarse;
constexpr double kDefaultIouThreshold = defaults::kApIouThreshold;
constexpr double kDefaultMinConfidence = defaults::kMinConfidence;

LevelWeights parse_alpha(const std::string& spec) {
    const auto& presets = defaults::alpha_presets();
    if (auto it = presets.find(spec); it != presets.end()) return {it->second};
    LevelWeights w;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t comma = spec.find(',', pos);
        if (comma == std::string::npos) comma = spec.size();
        w.alpha.push_back(parse_double(std::string_view(spec).substr(pos, comma - pos)));
        pos = comma + 1;
    }
    w.validate();
    return w;
}

// Prediction labels from either a prediction TSV or a scene file projected to
// the requested level.
std::map<VoxelKey, NodeId> load_labels(const std::string& path, const PartTaxonomy& tax,
                                       int level) {
    if (path.ends_with(".s2p"))
        return project_scene_labels(read_scene(read_file(path)), tax, level);
    return read_predictions(read_file(path)).first;
}

ScoreField load_scores(const std::string& path, const PartTaxonomy& tax, int level) {
    auto tensor = read_tensor(read_file(path));
    ScoreField field;
    auto classes = tax.level_classes(level);
    field.classes.assign(classes.begin(), classes.end());
    if (field.classes.size() != static_cast<std::size_t>(tensor.values.cols()))
        throw invalid_input("score tensor dim " + std::to_string(tensor.values.cols()) +
                            " does not match " + std::to_string(field.classes.size()) +
                            " classes at level " + std::to_string(level));
    field.scores = std::move(tensor.values);
    return field;
}

nlohmann::json report_to_json(const SemanticReport& rep, const PartTaxonomy& tax) {
    nlohmann::json j;
    j["miou"] = rep.miou;
    j["macc"] = rep.macc;
    j["defined_classes"] = rep.defined_classes;
    auto rows = nlohmann::json::array();
    for (const auto& c : rep.per_class) {
        nlohmann::json row;
        row["class_id"] = c.class_id;
        row["name"] = tax.contains(c.class_id) ? tax.node(c.class_id).name : "?";
        if (c.iou) row["iou"] = *c.iou; else row["iou"] = nullptr;
        if (c.acc) row["acc"] = *c.acc; else row["acc"] = nullptr;
        rows.push_back(std::move(row));
    }
    j["per_class"] = std::move(rows);
    return j;
}

int run_gradcheck_suite(int seeds, double tolerance, bool verbose) {
    auto res = gradsuite::run_suite(seeds);
    if (verbose) std::cout << res.configs << " configurations checked\n";
    std::cout << "gradcheck max relative error: " << res.worst << " (tolerance " << tolerance
              << ")\n";
    return res.worst < tolerance ? 0 : 1;
}

}  // namespace

int main(int argc, char* argv[]) {
    CLI::App app{"scan2part: hierarchical part-level 3D scene understanding toolkit"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = all cores); results do not depend on it");

    std::string tax_path, scene_path, out_path, pred_path, gt_path;
    int level = 1;

    // --- gen ---
    auto* gen = app.add_subcommand("gen", "generate a deterministic synthetic scene");
    std::uint64_t seed = 1;
    double resolution = kDefaultResolution, truncation = kDefaultResolution;
    std::string out_dir = ".";
    gen->add_option("--seed", seed, "RNG seed; fully determines the output");
    gen->add_option("--resolution", resolution, "voxel resolution in meters")
        ->default_val(kDefaultResolution);
    gen->add_option("--truncation", truncation, "truncation distance in meters")
        ->default_val(kDefaultResolution);
    gen->add_option("--out-dir", out_dir, "output directory");
    gen->callback([&] {
        std::filesystem::create_directories(out_dir);
        auto scene = synthetic::gen_synthetic(synthetic::default_spec(seed, resolution, truncation));
        write_file(out_dir + "/taxonomy.json", save_taxonomy(scene.taxonomy));
        write_file(out_dir + "/scene.s2p", write_scene(scene.ground_truth));
        for (std::size_t i = 0; i < scene.meshes.size(); ++i)
            write_file(out_dir + "/mesh_" + std::to_string(i + 1) + ".lmesh",
                       write_mesh(scene.meshes[i]));
        std::cout << "wrote " << scene.meshes.size() << " meshes, "
                  << scene.ground_truth.entries.size() << " voxels\n";
    });

    // --- taxonomy ---
    auto* taxonomy = app.add_subcommand("taxonomy", "taxonomy operations");
    taxonomy->require_subcommand(1);
    auto* tax_prune = taxonomy->add_subcommand("prune", "remove classes below an occurrence threshold");
    std::int64_t threshold = 1800;
    std::string prune_relabel = "unlabeled", scene_out;
    tax_prune->add_option("--taxonomy", tax_path)->required();
    tax_prune->add_option("--threshold", threshold, "occurrence cut in voxels");
    tax_prune->add_option("--out", out_path)->required();
    tax_prune->add_option("--scene", scene_path, "recount occurrences from this scene first");
    tax_prune->add_option("--scene-out", scene_out, "rewrite scene labels after pruning");
    tax_prune->add_option("--prune-relabel", prune_relabel,
                          "pruned-class voxels become 'unlabeled' (default) or 'parent'")
        ->check(CLI::IsMember({"unlabeled", "parent"}));
    tax_prune->callback([&] {
        auto tax = load_taxonomy(read_file(tax_path));
        VoxelScene scene;
        bool have_scene = !scene_path.empty();
        if (have_scene) {
            scene = read_scene(read_file(scene_path));
            std::vector<NodeId> labels;
            for (const auto& [key, d] : scene.entries) labels.push_back(d.leaf_label);
            tax = tax.with_occurrences(labels);
        }
        auto pruned = tax.prune_by_occurrence(threshold);
        write_file(out_path, save_taxonomy(pruned));
        if (have_scene && !scene_out.empty()) {
            for (auto& [key, d] : scene.entries) {
                if (d.leaf_label == kUnlabeled || pruned.contains(d.leaf_label)) continue;
                if (prune_relabel == "parent") {
                    NodeId cur = d.leaf_label;
                    while (cur != 0 && !pruned.contains(cur)) cur = tax.node(cur).parent;
                    d.leaf_label = cur;
                    if (cur == 0) d.instance_id = 0;
                } else {
                    d.leaf_label = kUnlabeled;
                    d.instance_id = 0;
                }
            }
            write_file(scene_out, write_scene(scene));
        }
    });
    auto* tax_collapse = taxonomy->add_subcommand("collapse", "splice out single-child internal nodes");
    tax_collapse->add_option("--taxonomy", tax_path)->required();
    tax_collapse->add_option("--out", out_path)->required();
    tax_collapse->callback([&] {
        write_file(out_path, save_taxonomy(load_taxonomy(read_file(tax_path)).collapse_trivial_paths()));
    });
    auto* tax_levels = taxonomy->add_subcommand("levels", "list the class set at a level");
    tax_levels->add_option("--taxonomy", tax_path)->required();
    tax_levels->add_option("--level", level)->required();
    tax_levels->callback([&] {
        auto tax = load_taxonomy(read_file(tax_path));
        for (NodeId id : tax.level_classes(level))
            std::cout << id << "\t" << tax.node(id).name << "\n";
    });

    // --- align ---
    auto* align = app.add_subcommand("align", "point cloud alignment");
    align->require_subcommand(1);
    std::string src_path, dst_path, icp_score = "rmse";
    int max_iters = 50;
    double convergence_eps = 1e-7;
    auto add_icp_opts = [&](CLI::App* cmd) {
        cmd->add_option("--src", src_path)->required();
        cmd->add_option("--dst", dst_path)->required();
        cmd->add_option("--out", out_path, "write the recovered transform JSON");
        cmd->add_option("--max-iters", max_iters);
        cmd->add_option("--eps", convergence_eps, "RMSE improvement convergence threshold");
    };
    auto* align_icp = align->add_subcommand("icp", "single-start point-to-point ICP");
    add_icp_opts(align_icp);
    align_icp->callback([&] {
        auto res = icp_point_to_point(parse_point_cloud(read_file(src_path)),
                                      parse_point_cloud(read_file(dst_path)), Quat::Identity(),
                                      {max_iters, convergence_eps});
        if (!out_path.empty()) write_file(out_path, write_transform(res.transform));
        std::cout << "rmse " << format_double(res.rmse) << "\n";
    });
    auto* align_best = align->add_subcommand("best", "multi-start ICP over 20 dodecahedron inits");
    add_icp_opts(align_best);
    align_best->add_option("--icp-score", icp_score, "selection metric")
        ->check(CLI::IsMember({"rmse", "sum"}));
    align_best->callback([&] {
        auto res = best_alignment(parse_point_cloud(read_file(src_path)),
                                  parse_point_cloud(read_file(dst_path)),
                                  {max_iters, convergence_eps},
                                  icp_score == "sum" ? IcpScore::kSum : IcpScore::kRmse);
        if (!out_path.empty()) write_file(out_path, write_transform(res.transform));
        std::cout << "rmse " << format_double(res.rmse) << " start " << res.best_start << "\n";
    });

    // --- voxelize ---
    auto* voxelize = app.add_subcommand("voxelize", "voxelize labeled meshes into a distance shell");
    std::vector<std::string> mesh_paths;
    voxelize->add_option("--mesh", mesh_paths, "labeled mesh files")->required();
    voxelize->add_option("--resolution", resolution)->default_val(kDefaultResolution);
    voxelize->add_option("--truncation", truncation)->default_val(kDefaultResolution);
    voxelize->add_option("--out", out_path)->required();
    voxelize->callback([&] {
        VoxelScene scene;
        scene.resolution = resolution;
        scene.truncation = truncation;
        for (const auto& p : mesh_paths)
            synthetic::merge_scene(scene, voxelize_mesh(read_mesh(read_file(p)), resolution, truncation));
        write_file(out_path, write_scene(scene));
        std::cout << scene.entries.size() << " voxels\n";
    });

    // --- transfer ---
    auto* transfer = app.add_subcommand("transfer", "majority-vote label transfer from meshes");
    std::vector<std::string> transform_paths;
    bool sample_faces = false, drop_background = false;
    transfer->add_option("--scene", scene_path)->required();
    transfer->add_option("--mesh", mesh_paths, "labeled mesh files")->required();
    transfer->add_option("--transform", transform_paths, "per-mesh transform JSON (default identity)");
    transfer->add_flag("--sample-faces", sample_faces, "sample triangle surfaces for vertex-free voxels");
    transfer->add_flag("--remove-background", drop_background, "drop voxels that received no object");
    transfer->add_option("--out", out_path)->required();
    transfer->callback([&] {
        auto scene = read_scene(read_file(scene_path));
        std::vector<LabeledMesh> meshes;
        for (const auto& p : mesh_paths) meshes.push_back(read_mesh(read_file(p)));
        std::vector<AffineTransform> transforms(meshes.size());
        if (!transform_paths.empty()) {
            if (transform_paths.size() != meshes.size())
                throw invalid_input("need one --transform per --mesh");
            for (std::size_t i = 0; i < meshes.size(); ++i)
                transforms[i] = parse_transform(read_file(transform_paths[i]));
        }
        transfer_labels(scene, meshes, transforms, {sample_faces, 4.0});
        if (drop_background) scene = remove_background(scene);
        write_file(out_path, write_scene(scene));
    });

    // --- infer ---
    auto* infer = app.add_subcommand("infer", "score field to label predictions");
    infer->require_subcommand(1);
    std::string scores_path, parents_path;
    auto* infer_flat = infer->add_subcommand("flat", "per-voxel argmax at one level");
    infer_flat->add_option("--scores", scores_path)->required();
    infer_flat->add_option("--taxonomy", tax_path)->required();
    infer_flat->add_option("--level", level)->required();
    infer_flat->add_option("--out", out_path)->required();
    infer_flat->callback([&] {
        auto tax = load_taxonomy(read_file(tax_path));
        auto tensor = read_tensor(read_file(scores_path));
        auto field = load_scores(scores_path, tax, level);
        auto labels = flat_predict(field);
        std::map<VoxelKey, NodeId> pred;
        for (std::size_t i = 0; i < tensor.keys.size(); ++i) pred[tensor.keys[i]] = labels[i];
        write_file(out_path, write_predictions(pred, level));
    });
    auto* infer_bottomup = infer->add_subcommand("bottomup", "sum leaf probabilities up to a level");
    infer_bottomup->add_option("--scores", scores_path, "leaf-level probability tensor")->required();
    infer_bottomup->add_option("--taxonomy", tax_path)->required();
    infer_bottomup->add_option("--level", level)->required();
    infer_bottomup->add_option("--out", out_path)->required();
    infer_bottomup->callback([&] {
        auto tax = load_taxonomy(read_file(tax_path));
        auto tensor = read_tensor(read_file(scores_path));
        auto leaf_field = load_scores(scores_path, tax, tax.max_depth());
        auto projected = bottom_up_project(leaf_field, tax, level);
        auto labels = flat_predict(projected);
        std::map<VoxelKey, NodeId> pred;
        for (std::size_t i = 0; i < tensor.keys.size(); ++i) pred[tensor.keys[i]] = labels[i];
        write_file(out_path, write_predictions(pred, level));
    });
    auto* infer_topdown = infer->add_subcommand("topdown", "argmax restricted to the parent's children");
    bool predicted_parent = false;
    infer_topdown->add_option("--scores", scores_path, "level-k score tensor")->required();
    infer_topdown->add_option("--parents", parents_path, "level k-1 parent labels")->required();
    infer_topdown->add_option("--taxonomy", tax_path)->required();
    infer_topdown->add_option("--level", level)->required();
    infer_topdown->add_flag("--predicted-parent", predicted_parent,
                            "parents come from a prediction chain rather than ground truth");
    infer_topdown->add_option("--out", out_path)->required();
    infer_topdown->callback([&] {
        auto tax = load_taxonomy(read_file(tax_path));
        auto tensor = read_tensor(read_file(scores_path));
        auto field = load_scores(scores_path, tax, level);
        auto [parents, plevel] = read_predictions(read_file(parents_path));
        std::vector<NodeId> parent_vec;
        for (const auto& key : tensor.keys) {
            auto it = parents.find(key);
            if (it == parents.end()) throw invalid_input("parent labels missing a voxel key");
            parent_vec.push_back(it->second);
        }
        auto labels = top_down_predict(field, parent_vec, tax, level);
        std::map<VoxelKey, NodeId> pred;
        for (std::size_t i = 0; i < tensor.keys.size(); ++i) pred[tensor.keys[i]] = labels[i];
        write_file(out_path, write_predictions(pred, level));
    });

    // --- cluster ---
    auto* cluster = app.add_subcommand("cluster", "mean-shift embeddings into part instances");
    std::string emb_path, labels_path;
    double bandwidth = 0.75, min_confidence = kDefaultMinConfidence;
    cluster->add_option("--embeddings", emb_path, "embedding tensor file")->required();
    cluster->add_option("--labels", labels_path, "semantic label prediction file")->required();
    cluster->add_option("--bandwidth", bandwidth, "flat-kernel radius in embedding space");
    cluster->add_option("--min-confidence", min_confidence)->default_val(kDefaultMinConfidence);
    cluster->add_option("--out", out_path)->required();
    cluster->callback([&] {
        auto tensor = read_tensor(read_file(emb_path));
        auto [labels, lvl] = read_predictions(read_file(labels_path));
        std::vector<NodeId> sem;
        for (const auto& key : tensor.keys) {
            auto it = labels.find(key);
            if (it == labels.end()) throw invalid_input("label file missing a voxel key");
            sem.push_back(it->second);
        }
        MeanShiftParams params;
        params.bandwidth = bandwidth;
        params.merge_radius = bandwidth / 2.0;
        auto clusters = mean_shift(tensor.values, params);
        auto set = extract_instances(clusters, sem, tensor.keys, min_confidence);
        write_file(out_path, write_instances(set));
        std::cout << set.instances.size() << " instances\n";
    });

    // --- loss ---
    auto* loss = app.add_subcommand("loss", "loss kernels");
    loss->require_subcommand(1);
    auto* loss_eval = loss->add_subcommand("eval", "evaluate a loss kernel on tensor files");
    std::string kind = "disc";
    std::vector<std::string> score_files;
    std::vector<std::string> label_files;
    std::string alpha_spec = "base-coarse";
    std::string instances_path;
    double delta_v = 0.5, delta_d = 1.5, sep_delta = 1.0;
    loss_eval->add_option("--kind", kind)->check(CLI::IsMember({"ce", "disc", "sep", "total"}));
    loss_eval->add_option("--scores", score_files, "per-level score tensors (ce)");
    loss_eval->add_option("--labels", label_files, "per-level label prediction files (ce)");
    loss_eval->add_option("--alpha", alpha_spec, "level weights: preset name or a1,a2,...");
    loss_eval->add_option("--embeddings", emb_path, "embedding tensor (disc/sep/total)");
    loss_eval->add_option("--instances", instances_path, "instance file giving ids (disc/total)");
    loss_eval->add_option("--delta-v", delta_v);
    loss_eval->add_option("--delta-d", delta_d);
    loss_eval->add_option("--delta", sep_delta, "separation margin");
    loss_eval->callback([&] {
        nlohmann::json out;
        if (kind == "ce") {
            if (score_files.size() != label_files.size() || score_files.empty())
                throw invalid_input("ce: need matching --scores and --labels lists");
            LevelWeights w = parse_alpha(alpha_spec);
            std::vector<Eigen::MatrixXd> logits;
            std::vector<Eigen::VectorXi> labels;
            for (std::size_t l = 0; l < score_files.size(); ++l) {
                auto tensor = read_tensor(read_file(score_files[l]));
                auto [lab, lvl] = read_predictions(read_file(label_files[l]));
                Eigen::VectorXi y(tensor.keys.size());
                std::map<NodeId, int> index;  // label id -> 1-based column
                std::set<NodeId> ids;
                for (const auto& [key, id] : lab) if (id != 0) ids.insert(id);
                int next = 1;
                for (NodeId id : ids) index[id] = next++;
                for (std::size_t i = 0; i < tensor.keys.size(); ++i) {
                    auto it = lab.find(tensor.keys[i]);
                    y(static_cast<Eigen::Index>(i)) =
                        it == lab.end() || it->second == 0 ? 0 : index.at(it->second);
                }
                logits.push_back(std::move(tensor.values));
                labels.push_back(std::move(y));
            }
            auto res = weighted_cross_entropy(logits, labels, w);
            out["loss"] = res.loss;
            out["per_level"] = res.per_level;
        } else {
            auto tensor = read_tensor(read_file(emb_path));
            if (kind == "disc" || kind == "total") {
                auto inst_set = read_instances(read_file(instances_path));
                EmbeddingField emb;
                emb.embeddings = tensor.values;
                std::map<VoxelKey, std::int64_t> inst_of;
                for (std::size_t i = 0; i < inst_set.instances.size(); ++i)
                    for (const auto& key : inst_set.instances[i].voxels)
                        inst_of[key] = static_cast<std::int64_t>(i) + 1;
                for (const auto& key : tensor.keys) {
                    auto it = inst_of.find(key);
                    emb.instance_ids.push_back(it == inst_of.end() ? 0 : it->second);
                }
                DiscriminativeParams params;
                params.delta_v = delta_v;
                params.delta_d = delta_d;
                if (kind == "disc") {
                    auto res = discriminative_loss(emb, params);
                    out["loss"] = res.loss;
                    out["pull"] = res.pull;
                    out["push"] = res.push;
                    out["reg"] = res.reg;
                } else {
                    // foreground = voxels with an instance, background = the rest
                    std::map<std::int64_t, std::vector<Eigen::Index>> groups;
                    std::vector<Eigen::Index> bg_rows;
                    for (Eigen::Index i = 0; i < tensor.values.rows(); ++i) {
                        if (emb.instance_ids[i] > 0) groups[emb.instance_ids[i]].push_back(i);
                        else bg_rows.push_back(i);
                    }
                    std::vector<Eigen::MatrixXd> fg;
                    for (const auto& [id, rows] : groups) {
                        Eigen::MatrixXd m(rows.size(), tensor.values.cols());
                        for (std::size_t r = 0; r < rows.size(); ++r)
                            m.row(r) = tensor.values.row(rows[r]);
                        fg.push_back(std::move(m));
                    }
                    Eigen::MatrixXd bg(bg_rows.size(), tensor.values.cols());
                    for (std::size_t r = 0; r < bg_rows.size(); ++r)
                        bg.row(r) = tensor.values.row(bg_rows[r]);
                    EmbeddingField fg_only;
                    std::vector<Eigen::Index> fg_rows;
                    for (Eigen::Index i = 0; i < tensor.values.rows(); ++i)
                        if (emb.instance_ids[i] > 0) fg_rows.push_back(i);
                    fg_only.embeddings = Eigen::MatrixXd(fg_rows.size(), tensor.values.cols());
                    for (std::size_t r = 0; r < fg_rows.size(); ++r) {
                        fg_only.embeddings.row(r) = tensor.values.row(fg_rows[r]);
                        fg_only.instance_ids.push_back(emb.instance_ids[fg_rows[r]]);
                    }
                    SepParams sp;
                    sp.delta = sep_delta;
                    auto res = instance_total_loss(fg_only, fg, bg, params, sp);
                    out["loss"] = res.loss;
                    out["intra"] = res.intra;
                    out["inter"] = res.inter;
                    out["reg"] = res.reg;
                    out["sep"] = res.sep;
                }
            } else {  // sep
                throw invalid_input("sep: use --kind total; the separation term is reported there");
            }
        }
        std::cout << out.dump(2) << "\n";
    });
    auto* loss_gradcheck = loss->add_subcommand("gradcheck", "finite-difference validation");
    bool all_kernels = false, verbose = false;
    int gc_seeds = 20;
    double gc_tol = 1e-5;
    loss_gradcheck->add_flag("--all", all_kernels, "check every kernel");
    loss_gradcheck->add_option("--seeds", gc_seeds);
    loss_gradcheck->add_option("--tolerance", gc_tol);
    loss_gradcheck->add_flag("--verbose", verbose);
    loss_gradcheck->callback([&] {
        if (run_gradcheck_suite(gc_seeds, gc_tol, verbose) != 0)
            throw invalid_input("gradient check failed");
    });

    // --- eval ---
    auto* eval = app.add_subcommand("eval", "evaluation protocol");
    eval->require_subcommand(1);
    bool balanced_binary = false;
    auto* eval_semantic = eval->add_subcommand("semantic", "per-class IoU / balanced accuracy at one level");
    eval_semantic->add_option("--pred", pred_path, "prediction file or scene (.s2p)")->required();
    eval_semantic->add_option("--gt", gt_path, "ground-truth file or scene (.s2p)")->required();
    eval_semantic->add_option("--taxonomy", tax_path)->required();
    eval_semantic->add_option("--level", level)->required();
    eval_semantic->add_flag("--balanced-binary", balanced_binary,
                            "per-class (recall+specificity)/2 instead of recall");
    eval_semantic->add_option("--out", out_path, "write the report JSON");
    eval_semantic->callback([&] {
        auto tax = load_taxonomy(read_file(tax_path));
        auto pred = load_labels(pred_path, tax, level);
        auto gt = load_labels(gt_path, tax, level);
        auto rep = semantic_metrics(pred, gt, tax.level_classes(level),
                                    balanced_binary ? AccMode::kBalancedBinary : AccMode::kRecall);
        auto j = report_to_json(rep, tax);
        j["level"] = level;
        if (!out_path.empty()) write_file(out_path, j.dump(2) + "\n");
        std::cout << "level " << level << " mIoU " << format_double(rep.miou) << " mAcc "
                  << format_double(rep.macc) << "\n";
    });
    auto* eval_hier = eval->add_subcommand("hier", "cross-level averaged mIoU");
    std::vector<std::string> pred_paths, gt_paths;
    eval_hier->add_option("--pred", pred_paths, "one prediction file or scene per level")->required();
    eval_hier->add_option("--gt", gt_paths)->required();
    eval_hier->add_option("--taxonomy", tax_path)->required();
    eval_hier->add_flag("--balanced-binary", balanced_binary);
    eval_hier->callback([&] {
        if (pred_paths.size() != gt_paths.size()) throw invalid_input("pred/gt level count mismatch");
        auto tax = load_taxonomy(read_file(tax_path));
        std::vector<SemanticReport> reports;
        for (std::size_t k = 0; k < pred_paths.size(); ++k) {
            int lvl = static_cast<int>(k) + 1;
            reports.push_back(semantic_metrics(
                load_labels(pred_paths[k], tax, lvl), load_labels(gt_paths[k], tax, lvl),
                tax.level_classes(lvl),
                balanced_binary ? AccMode::kBalancedBinary : AccMode::kRecall));
            std::cout << "level " << lvl << " mIoU " << format_double(reports.back().miou) << "\n";
        }
        std::cout << "averaged mIoU " << format_double(hierarchical_summary(reports)) << "\n";
    });
    auto* eval_instance = eval->add_subcommand("instance", "AP / precision / recall at an IoU threshold");
    double iou_threshold = kDefaultIouThreshold;
    std::string gt_scene_path;
    eval_instance->add_option("--pred", pred_path, "predicted instance file or scene (.s2p)")
        ->required();
    eval_instance->add_option("--gt", gt_path, "ground-truth instance file");
    eval_instance->add_option("--gt-scene", gt_scene_path, "derive ground truth from a scene file");
    eval_instance->add_option("--taxonomy", tax_path, "needed with --gt-scene");
    eval_instance->add_option("--level", level)->default_val(1);
    eval_instance->add_option("--iou-threshold", iou_threshold)->default_val(kDefaultIouThreshold);
    eval_instance->callback([&] {
        InstanceSet gt_set;
        if (!gt_scene_path.empty()) {
            if (tax_path.empty()) throw invalid_input("--gt-scene requires --taxonomy");
            gt_set = synthetic::instances_from_scene(read_scene(read_file(gt_scene_path)),
                                                     load_taxonomy(read_file(tax_path)), level);
        } else if (!gt_path.empty()) {
            gt_set = read_instances(read_file(gt_path));
        } else {
            throw invalid_input("need --gt or --gt-scene");
        }
        InstanceSet pred_set;
        if (pred_path.ends_with(".s2p")) {
            if (tax_path.empty()) throw invalid_input("a .s2p --pred requires --taxonomy");
            pred_set = synthetic::instances_from_scene(read_scene(read_file(pred_path)),
                                                       load_taxonomy(read_file(tax_path)), level);
        } else {
            pred_set = read_instances(read_file(pred_path));
        }
        auto rep = instance_metrics(pred_set, gt_set, iou_threshold);
        std::cout << "AP@" << format_double(iou_threshold) << " " << format_double(rep.ap)
                  << " precision " << format_double(rep.precision) << " recall "
                  << format_double(rep.recall) << "\n";
    });

    // --- report ---
    auto* report = app.add_subcommand("report", "render report JSONs as an aligned table");
    std::vector<std::string> report_paths;
    report->add_option("--in", report_paths, "per-configuration report JSON files")->required();
    report->add_option("--out", out_path, "write CSV instead of stdout");
    report->callback([&] {
        std::vector<nlohmann::json> reports;
        for (const auto& p : report_paths) reports.push_back(nlohmann::json::parse(read_file(p)));
        std::map<std::string, std::vector<std::pair<std::string, std::string>>> rows;
        std::vector<std::string> order;
        for (const auto& rep : reports)
            for (const auto& row : rep.at("per_class")) {
                std::string name = row.at("name").get<std::string>();
                if (!rows.count(name)) order.push_back(name);
                auto fmt = [](const nlohmann::json& v) {
                    return v.is_null() ? std::string("---") : format_double(v.get<double>());
                };
                rows[name].emplace_back(fmt(row.at("iou")), fmt(row.at("acc")));
            }
        std::string out = "class";
        for (std::size_t i = 0; i < reports.size(); ++i)
            out += ",IoU_" + std::to_string(i + 1) + ",Acc_" + std::to_string(i + 1);
        out += "\n";
        for (const auto& name : order) {
            out += name;
            for (const auto& [iou, acc] : rows[name]) out += "," + iou + "," + acc;
            out += "\n";
        }
        out += "Mean";
        for (const auto& rep : reports)
            out += "," + format_double(rep.at("miou").get<double>()) + "," +
                   format_double(rep.at("macc").get<double>());
        out += "\n";
        if (out_path.empty()) std::cout << out;
        else write_file(out_path, out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
