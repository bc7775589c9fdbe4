#include "asnet/fine_scoring.hpp"

#include <algorithm>
#include <stdexcept>

namespace asnet {

PatchRule parse_patch_rule(const std::string& name) {
    if (name == "fixed") return PatchRule::fixed;
    if (name == "soft") return PatchRule::soft;
    throw std::invalid_argument("unknown patch rule '" + name + "' (expected fixed or soft)");
}

std::string to_string(PatchRule r) { return r == PatchRule::fixed ? "fixed" : "soft"; }

std::uint8_t image_score(const DiscriminationMap& o1, double tau) {
    if (o1.empty()) throw std::invalid_argument("image_score: empty discrimination map");
    return o1.mean() < tau ? 1 : 0;
}

Field2D upsample_nearest(const Field2D& map, int out_h, int out_w) {
    if (map.empty()) throw std::invalid_argument("upsample_nearest: empty map");
    if (out_h < map.height() || out_w < map.width()) {
        throw std::invalid_argument("upsample_nearest: target " + std::to_string(out_h) + "x" +
                                    std::to_string(out_w) + " smaller than map " +
                                    std::to_string(map.height()) + "x" + std::to_string(map.width()));
    }
    Field2D out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        const int sy = static_cast<int>(static_cast<long long>(y) * map.height() / out_h);
        for (int x = 0; x < out_w; ++x) {
            const int sx = static_cast<int>(static_cast<long long>(x) * map.width() / out_w);
            out.at(y, x) = map.at(sy, sx);
        }
    }
    return out;
}

namespace {

BinaryMap threshold_below(const Field2D& p, double threshold) {
    BinaryMap out(p.height(), p.width());
    for (std::size_t i = 0; i < p.size(); ++i) out.values[i] = p.values()[i] < threshold ? 1 : 0;
    return out;
}

// x < mean(p), evaluated as n*x < sum(p) in extended precision so that ties
// (including constant maps) reliably score 0.
BinaryMap below_mean(const Field2D& p) {
    long double sum = 0.0L;
    for (double v : p.values()) sum += v;
    const auto n = static_cast<long double>(p.size());
    BinaryMap out(p.height(), p.width());
    for (std::size_t i = 0; i < p.size(); ++i) out.values[i] = n * p.values()[i] < sum ? 1 : 0;
    return out;
}

}  // namespace

BinaryMap pixel_score(const DiscriminationMap& o1, int out_h, int out_w,
                      std::optional<double> hard_threshold) {
    const Field2D p = upsample_nearest(o1, out_h, out_w);
    return hard_threshold ? threshold_below(p, *hard_threshold) : below_mean(p);
}

std::vector<std::uint8_t> patch_score(const std::vector<DiscriminationMap>& o2, double tau,
                                      PatchRule rule) {
    if (o2.empty()) throw std::invalid_argument("patch_score: no patches");
    std::vector<double> means;
    means.reserve(o2.size());
    for (const auto& p : o2) {
        if (p.empty()) throw std::invalid_argument("patch_score: empty patch map");
        means.push_back(p.mean());
    }
    double threshold = tau;
    if (rule == PatchRule::soft) {
        threshold = 0.0;
        for (double m : means) threshold += m;
        threshold /= static_cast<double>(means.size());
        const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
        threshold = std::clamp(threshold, *lo, *hi);
    }
    std::vector<std::uint8_t> out;
    out.reserve(means.size());
    for (double m : means) out.push_back(m < threshold ? 1 : 0);
    return out;
}

std::vector<BinaryMap> patch_pixel_score(const std::vector<DiscriminationMap>& o2, int patch_h,
                                         int patch_w, std::optional<double> hard_threshold) {
    if (o2.empty()) throw std::invalid_argument("patch_pixel_score: no patches");
    std::vector<BinaryMap> out;
    out.reserve(o2.size());
    for (const auto& p : o2) out.push_back(pixel_score(p, patch_h, patch_w, hard_threshold));
    return out;
}

BinaryMap assemble_patch_maps(const std::vector<BinaryMap>& patches, int s) {
    if (s < 1 || patches.size() != static_cast<std::size_t>(s) * s) {
        throw std::invalid_argument("assemble_patch_maps: expected S*S patches");
    }
    const int ph = patches[0].height;
    const int pw = patches[0].width;
    BinaryMap out(ph * s, pw * s);
    for (int j = 0; j < s * s; ++j) {
        const int oy = (j / s) * ph;
        const int ox = (j % s) * pw;
        for (int y = 0; y < ph; ++y)
            for (int x = 0; x < pw; ++x) out.at(oy + y, ox + x) = patches[j].at(y, x);
    }
    return out;
}

ScoreSet compute_scores(const DiscriminationMap& o1, const std::vector<DiscriminationMap>& o2, int h,
                        int w, int s, const ScoreRules& rules) {
    if (s < 1 || h % s != 0 || w % s != 0) {
        throw std::invalid_argument("compute_scores: density " + std::to_string(h) + "x" +
                                    std::to_string(w) + " not divisible by S=" + std::to_string(s));
    }
    if (o2.size() != static_cast<std::size_t>(s) * s) {
        throw std::invalid_argument("compute_scores: expected S*S local maps");
    }
    ScoreSet r;
    r.s_img = image_score(o1, rules.tau_img);
    r.s_pix = pixel_score(o1, h, w, rules.pixel_hard_threshold);
    r.s_patch = patch_score(o2, rules.tau_img, rules.patch_rule);
    r.s_ppx = assemble_patch_maps(patch_pixel_score(o2, h / s, w / s, rules.pixel_hard_threshold), s);
    return r;
}

}  // namespace asnet
