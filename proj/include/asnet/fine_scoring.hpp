#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asnet/field.hpp"

namespace asnet {

/// How patch-level scores are thresholded.
enum class PatchRule {
    fixed,  // patch mean < tau, mirroring the image-level rule
    soft,   // patch mean < mean over all patch means of the image
};

PatchRule parse_patch_rule(const std::string& name);
std::string to_string(PatchRule r);

struct ScoreRules {
    double tau_img = 0.5;                       // image and (fixed rule) patch threshold
    std::optional<double> pixel_hard_threshold;  // unset: soft threshold at the map mean
    PatchRule patch_rule = PatchRule::fixed;
};

/// Significance scores of one source image; every entry is 0 or 1.
/// s_ppx holds each patch's patch-pixel scores at that patch's location.
struct ScoreSet {
    std::uint8_t s_img = 0;
    std::vector<std::uint8_t> s_patch;  // S*S, row-major patch order
    BinaryMap s_pix;
    BinaryMap s_ppx;

    bool operator==(const ScoreSet&) const = default;
};

/// 1 iff the spatial average of the global map is strictly below tau.
std::uint8_t image_score(const DiscriminationMap& o1, double tau = 0.5);

/// Nearest-neighbour resize; source index floor(i * in / out). Only
/// enlarging (or identity) resizes are accepted.
Field2D upsample_nearest(const Field2D& map, int out_h, int out_w);

/// Upsample to (out_h, out_w) and mark positions strictly below the
/// upsampled map's mean (or below a hard threshold when one is given).
BinaryMap pixel_score(const DiscriminationMap& o1, int out_h, int out_w,
                      std::optional<double> hard_threshold = std::nullopt);

std::vector<std::uint8_t> patch_score(const std::vector<DiscriminationMap>& o2, double tau = 0.5,
                                      PatchRule rule = PatchRule::fixed);

/// Per patch: upsample to (patch_h, patch_w) and threshold at that patch's own mean.
std::vector<BinaryMap> patch_pixel_score(const std::vector<DiscriminationMap>& o2, int patch_h,
                                         int patch_w,
                                         std::optional<double> hard_threshold = std::nullopt);

/// Places S*S per-patch maps into one map in row-major patch order.
BinaryMap assemble_patch_maps(const std::vector<BinaryMap>& patches, int s);

/// All four levels for one image whose density map is (h, w).
ScoreSet compute_scores(const DiscriminationMap& o1, const std::vector<DiscriminationMap>& o2, int h,
                        int w, int s, const ScoreRules& rules = {});

}  // namespace asnet
