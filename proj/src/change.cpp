#include "ltgs/change.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ltgs {

OtsuResult otsu_threshold(const std::vector<double>& histogram) {
    if (histogram.size() != 256) throw std::invalid_argument("otsu: expected 256 bins");
    double total = 0;
    for (double v : histogram) {
        if (v < 0) throw std::invalid_argument("otsu: negative bin mass");
        total += v;
    }
    if (total <= 0) throw std::invalid_argument("otsu: empty histogram");

    double mean_total = 0;
    for (int i = 0; i < 256; ++i) mean_total += i * histogram[std::size_t(i)];
    mean_total /= total;

    int nonzero = 0;
    for (double v : histogram) nonzero += v > 0;

    OtsuResult best;
    best.degenerate = nonzero <= 1;
    double best_var = -1;
    double w0 = 0, sum0 = 0;
    for (int t = 0; t < 256; ++t) {
        w0 += histogram[std::size_t(t)];
        sum0 += t * histogram[std::size_t(t)];
        const double w1 = total - w0;
        if (w0 <= 0 || w1 <= 0) {
            if (best.degenerate && histogram[std::size_t(t)] > 0 && best_var < 0) best.bin = t;
            continue;
        }
        const double mu0 = sum0 / w0, mu1 = (mean_total * total - sum0) / w1;
        const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {  // strict: ties keep the lower bin
            best_var = var;
            best.bin = t;
        }
    }
    best.tau = double(best.bin + 1) / 256.0;
    return best;
}

ChangeMaskCoarse coarse_change_mask(const Image& captured, const Image& rendered,
                                    const FeatureMap& feat_captured,
                                    const FeatureMap& feat_rendered, double gamma) {
    if (!captured.same_dims(rendered))
        throw std::invalid_argument("coarse_change_mask: image dim mismatch");
    if (feat_captured.width != captured.width || feat_captured.height != captured.height ||
        feat_rendered.width != captured.width || feat_rendered.height != captured.height)
        throw std::invalid_argument("coarse_change_mask: feature dim mismatch");
    if (gamma < 0 || gamma > 1) throw std::invalid_argument("coarse_change_mask: gamma in [0,1]");

    const auto ssim = ssim_map(captured, rendered);
    const std::size_t n = captured.pixel_count();
    std::vector<double> score(n);
    for (int y = 0; y < captured.height; ++y)
        for (int x = 0; x < captured.width; ++x) {
            const std::size_t i = std::size_t(y) * captured.width + x;
            const double cos = feature_cosine(feat_captured.pixel(x, y), feat_rendered.pixel(x, y),
                                              feat_captured.dim);
            score[i] = std::clamp(gamma * cos + (1.0 - gamma) * ssim[i], 0.0, 1.0);
        }

    std::vector<double> hist(256, 0.0);
    for (double s : score) hist[std::size_t(std::min(255, int(s * 256.0)))] += 1.0;

    ChangeMaskCoarse out;
    const auto otsu = otsu_threshold(hist);
    out.tau = otsu.tau;
    out.degenerate = otsu.degenerate;
    out.mask = Mask(captured.width, captured.height);
    if (!out.degenerate) {
        for (std::size_t i = 0; i < n; ++i)
            out.mask.data[i] = std::min(255, int(score[i] * 256.0)) <= otsu.bin;
    }
    return out;
}

std::vector<float> mask_pool(const Mask& mask, const FeatureMap& features) {
    if (mask.width != features.width || mask.height != features.height)
        throw std::invalid_argument("mask_pool: dim mismatch");
    std::vector<double> acc(std::size_t(features.dim), 0.0);
    std::size_t count = 0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            const float* f = features.pixel(x, y);
            for (int d = 0; d < features.dim; ++d) acc[std::size_t(d)] += f[d];
            ++count;
        }
    if (count == 0) throw std::invalid_argument("mask_pool: empty mask");
    double norm = 0;
    for (double v : acc) norm += v * v;
    norm = std::max(std::sqrt(norm), 1e-12);
    std::vector<float> out(std::size_t(features.dim));
    for (int d = 0; d < features.dim; ++d) out[std::size_t(d)] = float(acc[std::size_t(d)] / norm);
    return out;
}

ObjectMaskSet refine_object_masks(const ChangeMaskCoarse& coarse, const MaskProposalSet& proposals,
                                  const FeatureMap& feat_captured,
                                  const FeatureMap& feat_rendered, const RefineConfig& cfg) {
    if (cfg.tau_iou <= 0 || cfg.tau_iou > 1 || cfg.tau_cos <= 0 || cfg.tau_cos > 1)
        throw std::invalid_argument("refine_object_masks: thresholds in (0,1]");
    ObjectMaskSet out;
    const std::size_t min_area =
        std::size_t(cfg.min_area_fraction * double(coarse.mask.width) * coarse.mask.height);
    for (int pi = 0; pi < int(proposals.masks.size()); ++pi) {
        const Mask& prop = proposals.masks[std::size_t(pi)];
        if (prop.area() < std::max<std::size_t>(min_area, 1)) continue;
        // Overlap measured against the proposal: the coarse mask spans every
        // changed region at once, so a symmetric IoU would punish proposals
        // merely for being one object among several changes.
        std::size_t inter = 0;
        for (std::size_t i = 0; i < prop.data.size(); ++i)
            inter += prop.data[i] && coarse.mask.data[i];
        const double iou = double(inter) / double(prop.area());
        if (iou < cfg.tau_iou) continue;
        auto pooled_cap = mask_pool(prop, feat_captured);
        auto pooled_ren = mask_pool(prop, feat_rendered);
        const double cos = feature_cosine(pooled_cap.data(), pooled_ren.data(), feat_captured.dim);
        if (cos > cfg.tau_cos) continue;
        ObjectMask om;
        om.mask = dilate(prop, cfg.dilation);
        om.proposal_index = pi;
        om.iou = iou;
        om.cosine = cos;
        om.pooled_captured = std::move(pooled_cap);
        om.pooled_rendered = std::move(pooled_ren);
        out.masks.push_back(std::move(om));
    }
    return out;
}

MaskSide classify_mask_side(const Mask& mask, const std::vector<float>& captured_depth,
                            const std::vector<float>& captured_alpha,
                            const std::vector<float>& rendered_depth,
                            const std::vector<float>& rendered_alpha, double rel_tol) {
    std::vector<double> diffs;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            const std::size_t i = std::size_t(y) * mask.width + x;
            const bool has_cap = captured_alpha[i] > 0.5f;
            const bool has_ren = rendered_alpha[i] > 0.5f;
            if (!has_cap && !has_ren) continue;
            if (!has_cap) {
                diffs.push_back(1.0);  // capture sees nothing: geometry left
            } else if (!has_ren) {
                diffs.push_back(-1.0);  // capture filled previously empty space
            } else {
                const double dz = (double(captured_depth[i]) - double(rendered_depth[i])) /
                                  std::max<double>(rendered_depth[i], 1e-6);
                if (std::abs(dz) > rel_tol) diffs.push_back(dz < 0 ? -1.0 : 1.0);
            }
        }
    if (diffs.empty()) return MaskSide::ambiguous;
    double sum = std::accumulate(diffs.begin(), diffs.end(), 0.0);
    const double frac = sum / double(diffs.size());
    if (frac < -0.2) return MaskSide::capture;
    if (frac > 0.2) return MaskSide::render;
    return MaskSide::ambiguous;
}

}  // namespace ltgs
