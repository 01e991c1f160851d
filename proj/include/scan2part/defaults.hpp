#pragma once

#include <map>
#include <string>
#include <vector>

namespace s2p::defaults {

// Voxel resolutions supported by the pipeline, meters.
inline constexpr double kResolutionCoarse = 0.05;
inline constexpr double kResolutionFine = 0.02;

// Discriminative loss term weights.
inline constexpr double kDiscAlpha = 1.0;
inline constexpr double kDiscBeta = 1.0;
inline constexpr double kDiscGamma = 0.001;

// Instance segmentation loss term weights.
inline constexpr double kAlphaIntra = 1.0;
inline constexpr double kAlphaInter = 1.0;
inline constexpr double kAlphaReg = 1e-3;
inline constexpr double kAlphaSep = 1e-3;

// Instance evaluation protocol.
inline constexpr double kApIouThreshold = 0.5;
inline constexpr double kMinConfidence = 0.25;

// Named level-weight presets for the multi-level cross-entropy objective.
inline const std::map<std::string, std::vector<double>>& alpha_presets() {
    static const std::map<std::string, std::vector<double>> presets = {
        {"base-coarse", {1.0, 0.0, 0.0}},
        {"base-middle", {0.0, 1.0, 0.0}},
        {"base-fine", {0.0, 0.0, 1.0}},
        {"mtt-12", {0.5, 0.5, 0.0}},
        {"mtt-123-coarse", {0.7, 0.2, 0.1}},
        {"mtt-123-fine", {0.1, 0.2, 0.7}},
    };
    return presets;
}

}  // namespace s2p::defaults
