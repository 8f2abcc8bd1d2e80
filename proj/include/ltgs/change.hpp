#pragma once

#include "ltgs/providers.hpp"
#include "ltgs/ssim.hpp"

namespace ltgs {

struct OtsuResult {
    int bin = 0;          // threshold bin index; scores in bins <= bin are "low"
    double tau = 0;       // threshold value, upper edge of `bin` on [0, 1]
    bool degenerate = false;
};

// Maximizes inter-class variance over a 256-bin histogram; ties break toward
// the lower bin.
OtsuResult otsu_threshold(const std::vector<double>& histogram);

struct ChangeMaskCoarse {
    Mask mask;
    double tau = 0;
    bool degenerate = false;  // single-valued score field, nothing detectable
};

// Fused semantic/photometric change score per Eq. of the coarse stage:
// score = gamma * cos(featI, featR) + (1 - gamma) * SSIM(I, R); pixels with
// score <= Otsu threshold are flagged as changed.
ChangeMaskCoarse coarse_change_mask(const Image& captured, const Image& rendered,
                                    const FeatureMap& feat_captured,
                                    const FeatureMap& feat_rendered, double gamma = 0.7);

// Mask-averaged, renormalized feature vector.
std::vector<float> mask_pool(const Mask& mask, const FeatureMap& features);

struct ObjectMask {
    Mask mask;            // dilated
    int proposal_index;
    double iou;           // fraction of the proposal inside the coarse mask, pre-dilation
    double cosine;        // pooled captured-vs-rendered similarity
    std::vector<float> pooled_captured;
    std::vector<float> pooled_rendered;
};

struct ObjectMaskSet {
    std::vector<ObjectMask> masks;
};

struct RefineConfig {
    double tau_iou = 0.5;
    double tau_cos = 0.9;
    double min_area_fraction = 0.0005;
    int dilation = 3;
};

// Keeps proposals that overlap the coarse mask and are semantically different
// between the captured and rendered images; survivors are dilated.
ObjectMaskSet refine_object_masks(const ChangeMaskCoarse& coarse, const MaskProposalSet& proposals,
                                  const FeatureMap& feat_captured,
                                  const FeatureMap& feat_rendered, const RefineConfig& cfg = {});

// Classifies which side of the change a refined mask belongs to. A mask where
// the capture shows geometry in front of the initial reconstruction's render
// covers an object at its new location (`capture`); a mask where the capture
// looks past the initial geometry covers a moved-out footprint (`render`).
enum class MaskSide { capture, render, ambiguous };

MaskSide classify_mask_side(const Mask& mask, const std::vector<float>& captured_depth,
                            const std::vector<float>& captured_alpha,
                            const std::vector<float>& rendered_depth,
                            const std::vector<float>& rendered_alpha, double rel_tol = 0.02);

}  // namespace ltgs
