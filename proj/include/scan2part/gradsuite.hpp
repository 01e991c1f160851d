#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "scan2part/losses.hpp"
#include "scan2part/rng.hpp"

namespace s2p::gradsuite {

// Finite-difference validation sweep over all four loss kernels. The hinge and
// L1 terms are piecewise linear, so configurations are rejection-sampled until
// every kink (hinge boundary, argmax tie, sign flip, norm at zero) is at least
// `kKinkTol` away; central differences are then exact up to rounding.
inline constexpr double kKinkTol = 1e-3;

namespace detail {

inline bool disc_is_smooth(const EmbeddingField& emb, const DiscriminativeParams& params,
                           double tol) {
    std::map<std::int64_t, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < emb.embeddings.rows(); ++i)
        groups[emb.instance_ids[i]].push_back(i);
    std::vector<VectorXd> mus;
    for (const auto& [id, idx] : groups) {
        VectorXd mu = VectorXd::Zero(emb.embeddings.cols());
        for (Eigen::Index i : idx) mu += emb.embeddings.row(i).transpose();
        mu /= static_cast<double>(idx.size());
        for (Eigen::Index i : idx) {
            double d = (mu - emb.embeddings.row(i).transpose()).norm();
            if (d < tol || std::abs(d - params.delta_v) < tol) return false;
        }
        if (mu.norm() < tol) return false;
        mus.push_back(std::move(mu));
    }
    for (std::size_t k = 0; k < mus.size(); ++k)
        for (std::size_t m = k + 1; m < mus.size(); ++m) {
            double d = (mus[k] - mus[m]).norm();
            if (d < tol || std::abs(2.0 * params.delta_d - d) < tol) return false;
        }
    return true;
}

inline bool sep_is_smooth(const std::vector<MatrixXd>& fg_parts, const MatrixXd& bg, double delta,
                          double tol) {
    for (const auto& fg : fg_parts) {
        VectorXd mu = fg.colwise().mean().transpose();
        std::vector<double> radii;
        for (Eigen::Index i = 0; i < fg.rows(); ++i) {
            VectorXd diff = fg.row(i).transpose() - mu;
            if (diff.cwiseAbs().minCoeff() < tol) return false;
            radii.push_back(diff.cwiseAbs().sum());
        }
        std::sort(radii.begin(), radii.end());
        double r = radii.back();
        if (radii.size() > 1 && r - radii[radii.size() - 2] < tol) return false;
        for (Eigen::Index j = 0; j < bg.rows(); ++j) {
            VectorXd diff = bg.row(j).transpose() - mu;
            if (diff.cwiseAbs().minCoeff() < tol) return false;
            if (std::abs(r - diff.cwiseAbs().sum() + delta) < tol) return false;
        }
    }
    return true;
}

inline MatrixXd random_matrix(SplitMix64& rng, Eigen::Index r, Eigen::Index c, double scale) {
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * rng.gaussian();
    return m;
}

inline VectorXd flatten(const std::vector<MatrixXd>& mats) {
    Eigen::Index total = 0;
    for (const auto& m : mats) total += m.size();
    VectorXd x(total);
    Eigen::Index at = 0;
    for (const auto& m : mats)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) x(at++) = m(i, j);
    return x;
}

inline std::vector<MatrixXd> unflatten(const VectorXd& x, const std::vector<MatrixXd>& shapes) {
    std::vector<MatrixXd> out;
    Eigen::Index at = 0;
    for (const auto& s : shapes) {
        MatrixXd m(s.rows(), s.cols());
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = x(at++);
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace detail

struct SuiteResult {
    double worst = 0.0;  // max relative FD error over every kernel and config
    int configs = 0;
};

inline SuiteResult run_suite(int seeds, double eps = 1e-5) {
    using detail::flatten;
    using detail::unflatten;
    SuiteResult out;
    auto track = [&](double err) {
        out.worst = std::max(out.worst, err);
        ++out.configs;
    };

    for (int seed = 1; seed <= seeds; ++seed) {
        SplitMix64 rng(static_cast<std::uint64_t>(seed));

        // weighted cross entropy, 3 levels of distinct width
        {
            const int widths[] = {4, 6, 9};
            std::vector<MatrixXd> logits;
            std::vector<VectorXi> labels;
            for (int w : widths) {
                logits.push_back(detail::random_matrix(rng, 8, w, 1.0));
                VectorXi y(8);
                for (int i = 0; i < 8; ++i) y(i) = static_cast<int>(rng.below(w + 1));
                if (y.maxCoeff() == 0) y(0) = 1;
                labels.push_back(y);
            }
            LevelWeights w{{0.7, 0.2, 0.1}};
            auto f = [&](const VectorXd& x, VectorXd* grad) {
                auto res = weighted_cross_entropy(unflatten(x, logits), labels, w);
                if (grad) *grad = flatten(res.grad_logits);
                return res.loss;
            };
            track(grad_check(f, flatten(logits), eps));
        }

        for (int d : {2, 8, 32}) {
            for (int k : {1, 2, 5}) {
                DiscriminativeParams dparams;
                SepParams sparams;

                // discriminative
                EmbeddingField emb;
                do {
                    emb.embeddings = detail::random_matrix(rng, 6 * k, d, 1.5);
                    emb.instance_ids.clear();
                    for (int i = 0; i < 6 * k; ++i) emb.instance_ids.push_back(1 + i % k);
                } while (!detail::disc_is_smooth(emb, dparams, kKinkTol));
                auto fd = [&](const VectorXd& x, VectorXd* grad) {
                    EmbeddingField e = emb;
                    e.embeddings = unflatten(x, {emb.embeddings})[0];
                    auto res = discriminative_loss(e, dparams);
                    if (grad) *grad = flatten({res.grad});
                    return res.loss;
                };
                track(grad_check(fd, flatten({emb.embeddings}), eps));

                // separation
                std::vector<MatrixXd> fg(k);
                MatrixXd bg;
                do {
                    for (auto& m : fg) m = detail::random_matrix(rng, 4, d, 1.0);
                    bg = detail::random_matrix(rng, 5, d, 2.0);
                } while (!detail::sep_is_smooth(fg, bg, sparams.delta, kKinkTol));
                std::vector<MatrixXd> shapes = fg;
                shapes.push_back(bg);
                auto fs = [&](const VectorXd& x, VectorXd* grad) {
                    auto parts = unflatten(x, shapes);
                    MatrixXd b = parts.back();
                    parts.pop_back();
                    auto res = separation_loss(parts, b, sparams.delta);
                    if (grad) {
                        auto gs = res.grad_fg;
                        gs.push_back(res.grad_bg);
                        *grad = flatten(gs);
                    }
                    return res.loss;
                };
                track(grad_check(fs, flatten(shapes), eps));

                // total: foreground parts are the embedding rows grouped by instance
                const int per = 4;
                EmbeddingField temb;
                MatrixXd tbg;
                do {
                    temb.embeddings = detail::random_matrix(rng, k * per, d, 1.5);
                    temb.instance_ids.clear();
                    for (int i = 0; i < k * per; ++i) temb.instance_ids.push_back(1 + i / per);
                    tbg = detail::random_matrix(rng, 5, d, 2.0);
                    std::vector<MatrixXd> parts;
                    for (int c = 0; c < k; ++c) parts.push_back(temb.embeddings.middleRows(c * per, per));
                    DiscriminativeParams weighted = dparams;
                    weighted.alpha = sparams.alpha_intra;
                    weighted.beta = sparams.alpha_inter;
                    weighted.gamma = sparams.alpha_reg;
                    if (detail::disc_is_smooth(temb, weighted, kKinkTol) &&
                        detail::sep_is_smooth(parts, tbg, sparams.delta, kKinkTol))
                        break;
                } while (true);
                std::vector<MatrixXd> tshapes = {temb.embeddings, tbg};
                auto ft = [&](const VectorXd& x, VectorXd* grad) {
                    auto parts = unflatten(x, tshapes);
                    EmbeddingField e = temb;
                    e.embeddings = parts[0];
                    std::vector<MatrixXd> fgp;
                    for (int c = 0; c < k; ++c) fgp.push_back(parts[0].middleRows(c * per, per));
                    auto res = instance_total_loss(e, fgp, parts[1], DiscriminativeParams{},
                                                   SepParams{});
                    if (grad) {
                        MatrixXd ge = res.grad_emb;
                        for (int c = 0; c < k; ++c) ge.middleRows(c * per, per) += res.grad_fg[c];
                        *grad = flatten({ge, res.grad_bg});
                    }
                    return res.loss;
                };
                track(grad_check(ft, flatten(tshapes), eps));
            }
        }
    }
    return out;
}

}  // namespace s2p::gradsuite
