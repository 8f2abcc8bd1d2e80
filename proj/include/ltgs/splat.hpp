#pragma once

#include "ltgs/sh.hpp"
#include "ltgs/types.hpp"

namespace ltgs {

// Structure-of-arrays Gaussian splat container. Scales are stored as logs and
// opacities as logits so optimizer updates keep the constrained values in
// range by construction.
struct SplatSet {
    std::vector<Vec3> positions;                      // world coordinates
    std::vector<Quat> rotations;                      // unit quaternions
    std::vector<Vec3> log_scales;                     // exp() on use
    std::vector<double> logit_opacities;              // sigmoid() on use
    std::vector<std::array<double, 48>> sh_coeffs;    // 16 x 3 row-major per splat
    std::vector<int> labels;                          // 0 = background, k >= 1 = instance

    std::size_t size() const { return positions.size(); }

    void resize(std::size_t n) {
        positions.resize(n, Vec3::Zero());
        rotations.resize(n, Quat::Identity());
        log_scales.resize(n, Vec3::Zero());
        logit_opacities.resize(n, 0.0);
        sh_coeffs.resize(n, {});
        labels.resize(n, 0);
    }

    Vec3 scale(std::size_t i) const { return log_scales[i].array().exp(); }
    double opacity(std::size_t i) const { return 1.0 / (1.0 + std::exp(-logit_opacities[i])); }

    void push_back(const Vec3& mu, const Quat& q, const Vec3& log_s, double logit_a,
                   const std::array<double, 48>& c, int label) {
        positions.push_back(mu);
        rotations.push_back(q.normalized());
        log_scales.push_back(log_s);
        logit_opacities.push_back(logit_a);
        sh_coeffs.push_back(c);
        labels.push_back(label);
    }

    void append(const SplatSet& other) {
        positions.insert(positions.end(), other.positions.begin(), other.positions.end());
        rotations.insert(rotations.end(), other.rotations.begin(), other.rotations.end());
        log_scales.insert(log_scales.end(), other.log_scales.begin(), other.log_scales.end());
        logit_opacities.insert(logit_opacities.end(), other.logit_opacities.begin(),
                               other.logit_opacities.end());
        sh_coeffs.insert(sh_coeffs.end(), other.sh_coeffs.begin(), other.sh_coeffs.end());
        labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    }

    SplatSet subset(const std::vector<std::size_t>& indices) const {
        SplatSet out;
        out.resize(indices.size());
        for (std::size_t j = 0; j < indices.size(); ++j) {
            std::size_t i = indices[j];
            out.positions[j] = positions[i];
            out.rotations[j] = rotations[i];
            out.log_scales[j] = log_scales[i];
            out.logit_opacities[j] = logit_opacities[i];
            out.sh_coeffs[j] = sh_coeffs[i];
            out.labels[j] = labels[i];
        }
        return out;
    }

    std::vector<std::size_t> indices_with_label(int label) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < size(); ++i)
            if (labels[i] == label) idx.push_back(i);
        return idx;
    }
};

// Rigidly moves the selected splats: mu' = R mu + T, q' = quat(R) * q, and SH
// coefficients rotated so view-dependent color follows the body. Scales,
// opacities, and labels are untouched.
SplatSet transform_splats(const SplatSet& set, const std::vector<std::size_t>& indices,
                          const RigidTransform& P);

// Convenience: transform every splat.
SplatSet transform_splats(const SplatSet& set, const RigidTransform& P);

// Helpers shared by the synth and segment modules.
inline double logit(double p) { return std::log(p / (1.0 - p)); }

std::array<double, 48> dc_only_coeffs(const Vec3& rgb);

}  // namespace ltgs
