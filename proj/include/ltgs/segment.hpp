#pragma once

#include "ltgs/providers.hpp"
#include "ltgs/raster.hpp"

namespace ltgs {

struct VoteDiagnostics {
    int invisible_splats = 0;  // never rendered in any view, labeled background
};

// Per-splat instance labels by accumulated compositing weight inside the
// multi-view instance masks. For every splat, A_m sums its weights at pixels
// labeled m, A_0 sums weights at pixels of other objects or background, and
// the label is the argmax over {0, strongest m}; ties go to background.
std::vector<int> majority_vote_labels(const SplatSet& set, const std::vector<Camera>& cams,
                                      const std::vector<LabelImage>& instance_masks,
                                      const RasterConfig& rcfg = {},
                                      VoteDiagnostics* diag = nullptr);

// Demotes a splat labeled m to background when its projected center lies
// outside m's mask in every view where m appears. Pixel containment counts
// the boundary as inside.
std::vector<int> projection_filter(const SplatSet& set, const std::vector<int>& labels,
                                   const std::vector<Camera>& cams,
                                   const std::vector<LabelImage>& instance_masks,
                                   double z_near = 0.01);

struct InitConfig {
    double min_confidence = 1.5;
    int downsample_factor = 4;
    double initial_alpha = 0.1;
    int scale_neighbors = 3;
    uint64_t seed = 7;
};

struct InitView {
    const PointMap* points;
    const Mask* mask;
    const Image* colors;  // captured image supplying splat colors
};

// Builds a splat fragment from masked, confident point-map pixels: positions
// and colors from the point map, degree-0 SH only, alpha 0.1, identity
// rotation, isotropic scale from the mean 3-NN distance.
SplatSet init_from_pointmaps(const std::vector<InitView>& views, int label,
                             const InitConfig& cfg = {});

inline SplatSet init_new_object(const std::vector<InitView>& views, int label,
                                const InitConfig& cfg = {}) {
    return init_from_pointmaps(views, label, cfg);
}

inline SplatSet init_background_fill(const std::vector<InitView>& views,
                                     const InitConfig& cfg = {}) {
    return init_from_pointmaps(views, 0, cfg);
}

}  // namespace ltgs
