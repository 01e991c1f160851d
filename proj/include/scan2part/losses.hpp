#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "scan2part/common.hpp"

namespace s2p {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

// Weights alpha_1..alpha_K over hierarchy levels.
struct LevelWeights {
    std::vector<double> alpha;

    void validate() const {
        bool any = false;
        for (double a : alpha) {
            if (a < 0.0 || !std::isfinite(a)) throw invalid_input("level weights must be finite and >= 0");
            any = any || a > 0.0;
        }
        if (!any) throw invalid_input("at least one level weight must be positive");
    }
};

struct DiscriminativeParams {
    double delta_v = 0.5;   // pull margin
    double delta_d = 1.5;   // push margin; delta_d > 2*delta_v gives the nearest-centroid property
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 0.001;
};

struct SepParams {
    double alpha_intra = 1.0;
    double alpha_inter = 1.0;
    double alpha_reg = 1e-3;
    double alpha_sep = 1e-3;
    double delta = 1.0;  // L1 margin
};

// Per-voxel D-dim embeddings (rows) with a parallel instance-id field.
struct EmbeddingField {
    MatrixXd embeddings;            // N x D
    std::vector<std::int64_t> instance_ids;  // size N, ids > 0

    std::size_t size() const { return static_cast<std::size_t>(embeddings.rows()); }
};

struct CrossEntropyResult {
    double loss = 0.0;
    std::vector<double> per_level;        // alpha_k * level CE
    std::vector<MatrixXd> grad_logits;    // one N x C_k matrix per level
};

// L = sum_k alpha_k * mean over labeled voxels of w_c * (-log softmax).
// Labels are 1-based class indices into the level's logit columns; label 0 is
// ignored. A level where every voxel is unlabeled contributes 0.
inline CrossEntropyResult weighted_cross_entropy(
    const std::vector<MatrixXd>& logits, const std::vector<VectorXi>& labels,
    const LevelWeights& w, const std::vector<VectorXd>& class_weights = {}) {
    w.validate();
    if (logits.size() != labels.size() || logits.size() != w.alpha.size())
        throw invalid_input("cross entropy: level count mismatch");
    if (!class_weights.empty() && class_weights.size() != logits.size())
        throw invalid_input("cross entropy: class weight level count mismatch");

    CrossEntropyResult res;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const MatrixXd& z = logits[k];
        const VectorXi& y = labels[k];
        if (y.size() != z.rows()) throw invalid_input("cross entropy: label/logit row mismatch");
        const Eigen::Index n = z.rows(), c = z.cols();
        MatrixXd grad = MatrixXd::Zero(n, c);
        double level_loss = 0.0;
        Eigen::Index labeled = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int yi = y(i);
            if (yi == 0) continue;
            if (yi < 1 || yi > c) throw invalid_input("cross entropy: label out of range");
            ++labeled;
        }
        if (labeled > 0 && w.alpha[k] > 0.0) {
            for (Eigen::Index i = 0; i < n; ++i) {
                int yi = y(i);
                if (yi == 0) continue;
                double cw = class_weights.empty() ? 1.0 : class_weights[k](yi - 1);
                // log-sum-exp for stability
                double zmax = z.row(i).maxCoeff();
                double lse = zmax + std::log((z.row(i).array() - zmax).exp().sum());
                level_loss += cw * (lse - z(i, yi - 1));
                double scale = w.alpha[k] * cw / static_cast<double>(labeled);
                for (Eigen::Index j = 0; j < c; ++j) {
                    double p = std::exp(z(i, j) - lse);
                    grad(i, j) = scale * (p - (j == yi - 1 ? 1.0 : 0.0));
                }
            }
            level_loss /= static_cast<double>(labeled);
        }
        res.per_level.push_back(w.alpha[k] * level_loss);
        res.loss += w.alpha[k] * level_loss;
        res.grad_logits.push_back(std::move(grad));
    }
    return res;
}

struct DiscriminativeResult {
    double loss = 0.0;
    double pull = 0.0, push = 0.0, reg = 0.0;  // unweighted components
    MatrixXd grad;                             // N x D, d(loss)/d(embedding)
};

// Pull / push / reg terms over instance centroids:
//   pull = (1/K) sum_k (1/N_k) sum_j [||mu_k - e_j|| - delta_v]_+^2
//   push = (1/(K(K-1))) sum_{k != m} [2*delta_d - ||mu_k - mu_m||]_+^2
//   reg  = (1/K) sum_k ||mu_k||
// K = 1 defines push as 0. Hinge subgradient at the kink is taken as 0.
inline DiscriminativeResult discriminative_loss(const EmbeddingField& emb,
                                                const DiscriminativeParams& params) {
    const Eigen::Index n = emb.embeddings.rows(), dim = emb.embeddings.cols();
    if (n == 0) throw invalid_input("discriminative loss: empty embedding field");
    if (emb.instance_ids.size() != static_cast<std::size_t>(n))
        throw invalid_input("discriminative loss: instance id count mismatch");

    std::map<std::int64_t, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (emb.instance_ids[i] <= 0)
            throw invalid_input("discriminative loss: instance ids must be positive");
        groups[emb.instance_ids[i]].push_back(i);
    }
    const auto num_k = static_cast<double>(groups.size());

    std::vector<VectorXd> centroids;
    std::vector<const std::vector<Eigen::Index>*> members;
    for (const auto& [id, idx] : groups) {
        VectorXd mu = VectorXd::Zero(dim);
        for (Eigen::Index i : idx) mu += emb.embeddings.row(i).transpose();
        mu /= static_cast<double>(idx.size());
        centroids.push_back(std::move(mu));
        members.push_back(&idx);
    }

    DiscriminativeResult res;
    res.grad = MatrixXd::Zero(n, dim);
    MatrixXd grad_mu = MatrixXd::Zero(static_cast<Eigen::Index>(centroids.size()), dim);

    // pull
    for (std::size_t k = 0; k < centroids.size(); ++k) {
        const auto& idx = *members[k];
        const double nk = static_cast<double>(idx.size());
        for (Eigen::Index i : idx) {
            VectorXd diff = centroids[k] - emb.embeddings.row(i).transpose();
            double d = diff.norm();
            double h = d - params.delta_v;
            if (h <= 0.0) continue;
            res.pull += h * h / (num_k * nk);
            if (d > 0.0) {
                VectorXd g = (2.0 * h / (num_k * nk)) * (diff / d);  // d(h^2)/d(mu_k)
                grad_mu.row(k) += params.alpha * g.transpose();
                res.grad.row(i) -= params.alpha * g.transpose();
            }
        }
    }

    // push
    if (centroids.size() > 1) {
        const double norm = num_k * (num_k - 1.0);
        for (std::size_t k = 0; k < centroids.size(); ++k)
            for (std::size_t m = 0; m < centroids.size(); ++m) {
                if (m == k) continue;
                VectorXd diff = centroids[k] - centroids[m];
                double d = diff.norm();
                double h = 2.0 * params.delta_d - d;
                if (h <= 0.0) continue;
                res.push += h * h / norm;
                if (d > 0.0) {
                    VectorXd g = (-2.0 * h / norm) * (diff / d);
                    grad_mu.row(k) += params.beta * g.transpose();
                    grad_mu.row(m) -= params.beta * g.transpose();
                }
            }
    }

    // reg
    for (std::size_t k = 0; k < centroids.size(); ++k) {
        double d = centroids[k].norm();
        res.reg += d / num_k;
        if (d > 0.0) grad_mu.row(k) += (params.gamma / (num_k * d)) * centroids[k].transpose();
    }

    // chain centroid gradients back to member embeddings
    for (std::size_t k = 0; k < centroids.size(); ++k) {
        const auto& idx = *members[k];
        const double inv = 1.0 / static_cast<double>(idx.size());
        for (Eigen::Index i : idx) res.grad.row(i) += inv * grad_mu.row(k);
    }

    res.loss = params.alpha * res.pull + params.beta * res.push + params.gamma * res.reg;
    return res;
}

struct SeparationResult {
    double loss = 0.0;
    std::vector<MatrixXd> grad_fg;  // per part
    MatrixXd grad_bg;
};

// Per part: mu = mean fg embedding, R = max_i |x_fg_i - mu|_1, contribution =
// mean over bg voxels of [R - |x_bg_j - mu|_1 + delta]_+; loss = mean over
// parts. The max and the L1 norms are handled with one-sided subgradients.
inline SeparationResult separation_loss(const std::vector<MatrixXd>& fg_parts, const MatrixXd& bg,
                                        double delta) {
    SeparationResult res;
    res.grad_bg = MatrixXd::Zero(bg.rows(), bg.cols());
    for (const auto& fg : fg_parts) {
        if (fg.rows() == 0) throw invalid_input("separation loss: empty foreground part");
        res.grad_fg.push_back(MatrixXd::Zero(fg.rows(), fg.cols()));
    }
    if (fg_parts.empty() || bg.rows() == 0) return res;

    const double part_w = 1.0 / static_cast<double>(fg_parts.size());
    const double bg_w = 1.0 / static_cast<double>(bg.rows());
    for (std::size_t p = 0; p < fg_parts.size(); ++p) {
        const MatrixXd& fg = fg_parts[p];
        const Eigen::Index nf = fg.rows(), dim = fg.cols();
        VectorXd mu = fg.colwise().mean().transpose();

        Eigen::Index arg_r = 0;
        double radius = -1.0;
        for (Eigen::Index i = 0; i < nf; ++i) {
            double l1 = (fg.row(i).transpose() - mu).cwiseAbs().sum();
            if (l1 > radius) {
                radius = l1;
                arg_r = i;
            }
        }
        VectorXd sign_r = (fg.row(arg_r).transpose() - mu).cwiseSign();

        for (Eigen::Index j = 0; j < bg.rows(); ++j) {
            VectorXd diff = bg.row(j).transpose() - mu;
            double h = radius - diff.cwiseAbs().sum() + delta;
            if (h <= 0.0) continue;
            res.loss += part_w * bg_w * h;
            VectorXd sign_b = diff.cwiseSign();
            const double s = part_w * bg_w;
            // dR/dfg: via argmax row and via mu; d(-|x_bg - mu|_1)/d{bg, mu}
            res.grad_fg[p].row(arg_r) += s * sign_r.transpose();
            res.grad_bg.row(j) -= s * sign_b.transpose();
            VectorXd dmu = s * (sign_b - sign_r);
            for (Eigen::Index i = 0; i < nf; ++i)
                res.grad_fg[p].row(i) += (dmu / static_cast<double>(nf)).transpose();
        }
    }
    return res;
}

struct InstanceLossResult {
    double loss = 0.0;
    double intra = 0.0, inter = 0.0, reg = 0.0, sep = 0.0;  // unweighted
    MatrixXd grad_emb;              // weighted pull/push/reg gradient, N x D
    std::vector<MatrixXd> grad_fg;  // weighted separation gradient per part
    MatrixXd grad_bg;
};

// L = a_intra*L_intra + a_inter*L_inter + a_reg*L_reg + a_sep*L_sep where the
// first three are the discriminative pull/push/reg terms.
inline InstanceLossResult instance_total_loss(const EmbeddingField& emb,
                                              const std::vector<MatrixXd>& fg_parts,
                                              const MatrixXd& bg,
                                              const DiscriminativeParams& d_params,
                                              const SepParams& s_params) {
    DiscriminativeParams weighted = d_params;
    weighted.alpha = s_params.alpha_intra;
    weighted.beta = s_params.alpha_inter;
    weighted.gamma = s_params.alpha_reg;
    auto disc = discriminative_loss(emb, weighted);
    auto sep = separation_loss(fg_parts, bg, s_params.delta);
    InstanceLossResult res;
    res.intra = disc.pull;
    res.inter = disc.push;
    res.reg = disc.reg;
    res.sep = sep.loss;
    res.loss = s_params.alpha_intra * res.intra + s_params.alpha_inter * res.inter +
               s_params.alpha_reg * res.reg + s_params.alpha_sep * res.sep;
    res.grad_emb = std::move(disc.grad);
    res.grad_fg = std::move(sep.grad_fg);
    for (auto& g : res.grad_fg) g *= s_params.alpha_sep;
    res.grad_bg = s_params.alpha_sep * sep.grad_bg;
    return res;
}

// Central finite-difference check for any (value, grad) kernel over a flat
// parameter vector. Returns max over coordinates of
// |analytic - numeric| / max(1e-4, |analytic| + |numeric|); the floor keeps
// rounding noise on zero-gradient coordinates from registering as error.
inline double grad_check(const std::function<double(const VectorXd&, VectorXd*)>& f,
                         const VectorXd& x, double eps) {
    if (eps <= 0.0) throw invalid_input("grad_check: eps must be positive");
    VectorXd analytic(x.size());
    double v0 = f(x, &analytic);
    if (!std::isfinite(v0)) throw invalid_input("grad_check: non-finite value");
    double worst = 0.0;
    VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp(i) = x(i) + eps;
        double fp = f(xp, nullptr);
        xp(i) = x(i) - eps;
        double fm = f(xp, nullptr);
        xp(i) = x(i);
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw invalid_input("grad_check: non-finite value");
        double numeric = (fp - fm) / (2.0 * eps);
        double denom = std::max(1e-4, std::abs(analytic(i)) + std::abs(numeric));
        worst = std::max(worst, std::abs(analytic(i) - numeric) / denom);
    }
    return worst;
}

}  // namespace s2p
