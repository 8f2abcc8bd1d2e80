#pragma once

#include "ltgs/kdtree.hpp"
#include "ltgs/types.hpp"

namespace ltgs {

struct RegistrationResult {
    bool success = false;
    RigidTransform transform;  // maps source points onto target points
    int inliers = 0;
    double rms_residual = 0;
    double chamfer_after = 0;
};

struct CandidatePair {
    int source = 0, target = 0;
    double feature_distance = 0;
};

// Mutual nearest neighbors in feature space with a 0.9 ratio test. Throws on
// empty clouds; fewer than 3 survivors means registration is impossible and
// yields an empty list.
std::vector<CandidatePair> feature_correspondences(
    const std::vector<std::vector<float>>& feats_source,
    const std::vector<std::vector<float>>& feats_target, double ratio = 0.9);

struct RansacConfig {
    int max_iterations = 1000;
    double inlier_fraction_early_exit = 0.8;
    double inlier_threshold_rel = 0.02;  // fraction of source bbox diagonal
    uint64_t seed = 7;
};

// Kabsch closed form on an exact correspondence set.
RigidTransform kabsch(const std::vector<Vec3>& source, const std::vector<Vec3>& target);

// RANSAC over 3-point minimal samples solved by Kabsch, final refit on the
// inlier set. Fails (success = false) when no model reaches 3 inliers.
RegistrationResult robust_rigid_fit(const std::vector<Vec3>& source,
                                    const std::vector<Vec3>& target,
                                    const std::vector<CandidatePair>& candidates,
                                    const RansacConfig& cfg = {});

// Closest-point polish of an initial alignment: alternates nearest-neighbor
// pairing (pairs further than max_pair_dist are dropped) with a Kabsch refit
// until the pose stops moving. Returns init unchanged when pairing collapses
// below 3 points.
RigidTransform icp_refine(const std::vector<Vec3>& source, const std::vector<Vec3>& target,
                          const RigidTransform& init, double max_pair_dist,
                          int max_iterations = 20);

// Symmetric mean closest-point distance, kd-tree accelerated.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

double bbox_diagonal(const std::vector<Vec3>& pts);

// Registers source onto target via point features and verifies the result
// with the Chamfer distance against tau_rel * source bbox diagonal.
RegistrationResult register_and_verify(const std::vector<Vec3>& source,
                                       const std::vector<std::vector<float>>& feats_source,
                                       const std::vector<Vec3>& target,
                                       const std::vector<std::vector<float>>& feats_target,
                                       double tau_cd_rel = 0.05, const RansacConfig& cfg = {});

}  // namespace ltgs
