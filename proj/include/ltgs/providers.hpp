#pragma once

#include "ltgs/image.hpp"
#include "ltgs/types.hpp"

namespace ltgs {

// Dense per-pixel unit-norm features (stand-in for a frozen image encoder).
struct FeatureMap {
    int width = 0, height = 0, dim = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int w, int h, int d)
        : width(w), height(h), dim(d), data(std::size_t(w) * h * d, 0.f) {}
    float* pixel(int x, int y) { return &data[(std::size_t(y) * width + x) * dim]; }
    const float* pixel(int x, int y) const { return &data[(std::size_t(y) * width + x) * dim]; }
};

double feature_cosine(const float* a, const float* b, int dim);

struct MaskProposalSet {
    std::vector<Mask> masks;
};

struct Correspondence {
    Vec2 a, b;          // pixel coordinates in image A / image B
    double confidence;  // in (0, 1]
};

struct CorrespondenceSet {
    std::vector<Correspondence> items;
};

// Per-pixel 3D point with confidence (stand-in for a dense pointmap model).
struct PointMap {
    int width = 0, height = 0;
    std::vector<Vec3> points;
    std::vector<float> confidence;

    PointMap() = default;
    PointMap(int w, int h)
        : width(w), height(h), points(std::size_t(w) * h, Vec3::Zero()),
          confidence(std::size_t(w) * h, 0.f) {}
    std::size_t idx(int x, int y) const { return std::size_t(y) * width + x; }
};

struct ProviderConfig {
    int feature_dim = 16;
    uint64_t seed = 1234;
    double codebook_max_cos = 0.5;  // pairwise codebook similarity bound
    int codebook_size = 64;
    double point_feature_bandwidth = 0.25;  // RFF length scale, scene units
};

// Fixed seeded embedding codebook; same config => same vectors. Ids of 100 or
// more denote appearance variants: the embedding of id % 100 blended toward a
// second entry (cosine 0.8 with the base), standing in for a similar but
// distinct object of the same category.
class Codebook {
public:
    explicit Codebook(const ProviderConfig& cfg);
    std::vector<float> vec(int appearance_id) const;
    int dim() const { return dim_; }

private:
    int dim_;
    std::vector<std::vector<float>> entries_;
};

// Per-pixel feature = normalize(embed(label) + sigma * gaussian noise).
FeatureMap synth_feature_map(const LabelImage& gt_labels, double noise_sigma,
                             const ProviderConfig& cfg, uint64_t salt = 0);

// One proposal per instance present in the label image, plus a few distractor
// rectangles.
MaskProposalSet synth_masks(const LabelImage& gt_labels, const ProviderConfig& cfg,
                            uint64_t salt = 0, int distractors = 2);

// Exact reprojection matches between two views with known depth, thinned by
// dropout and perturbed by pixel jitter.
CorrespondenceSet synth_correspondences(const Camera& cam_a, const std::vector<float>& depth_a,
                                        const Camera& cam_b, const std::vector<float>& depth_b,
                                        double dropout, double pixel_noise,
                                        const ProviderConfig& cfg, uint64_t salt = 0,
                                        double depth_tol = 0.05);

// Ground-truth unprojection of a rendered depth map; confidence = 2 * alpha.
PointMap synth_point_map(const Camera& cam, const std::vector<float>& depth_map,
                         const std::vector<float>& alpha_map);

// Per-point unit features encoding object-local geometry via seeded random
// Fourier features; corresponding points across timesteps of the same
// appearance id receive matching features.
std::vector<std::vector<float>> synth_point_features(const std::vector<Vec3>& points,
                                                     const RigidTransform& world_to_local,
                                                     int appearance_id, double noise_sigma,
                                                     const ProviderConfig& cfg,
                                                     uint64_t salt = 0);

}  // namespace ltgs
