#include "ltgs/providers.hpp"

#include "ltgs/kernels.hpp"

#include <cmath>
#include <map>
#include <random>
#include <set>

namespace ltgs {

double feature_cosine(const float* a, const float* b, int dim) {
    const double num = kernels::dot(a, b, std::size_t(dim));
    const double na = std::sqrt(kernels::dot(a, a, std::size_t(dim)));
    const double nb = std::sqrt(kernels::dot(b, b, std::size_t(dim)));
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return num / (na * nb);
}

Codebook::Codebook(const ProviderConfig& cfg) : dim_(cfg.feature_dim) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss;
    while (int(entries_.size()) < cfg.codebook_size) {
        std::vector<double> v(dim_);
        double norm = 0;
        for (auto& x : v) {
            x = gauss(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
        std::vector<float> f(dim_);
        for (int i = 0; i < dim_; ++i) f[i] = float(v[i] / norm);
        bool ok = true;
        for (const auto& e : entries_)
            if (feature_cosine(f.data(), e.data(), dim_) > cfg.codebook_max_cos) {
                ok = false;
                break;
            }
        if (ok) entries_.push_back(std::move(f));
    }
}

std::vector<float> Codebook::vec(int appearance_id) const {
    const int base_id = appearance_id % 100;
    const int generation = appearance_id / 100;
    const auto& base = entries_[std::size_t(base_id) % entries_.size()];
    if (generation == 0) return base;

    // Variant: blend a second entry, orthogonalized against the base, at a
    // fixed mixing angle so cos(variant, base) = 0.8.
    const auto& other = entries_[std::size_t(base_id + 7 * generation) % entries_.size()];
    double dot = 0, on = 0;
    std::vector<double> orth(static_cast<std::size_t>(dim_));
    for (int d = 0; d < dim_; ++d) dot += double(base[std::size_t(d)]) * other[std::size_t(d)];
    for (int d = 0; d < dim_; ++d) {
        orth[std::size_t(d)] = double(other[std::size_t(d)]) - dot * base[std::size_t(d)];
        on += orth[std::size_t(d)] * orth[std::size_t(d)];
    }
    on = std::max(std::sqrt(on), 1e-12);
    std::vector<float> out(static_cast<std::size_t>(dim_));
    for (int d = 0; d < dim_; ++d)
        out[std::size_t(d)] = float(0.8 * base[std::size_t(d)] + 0.6 * orth[std::size_t(d)] / on);
    return out;
}

FeatureMap synth_feature_map(const LabelImage& gt_labels, double noise_sigma,
                             const ProviderConfig& cfg, uint64_t salt) {
    Codebook codebook(cfg);
    FeatureMap out(gt_labels.width, gt_labels.height, cfg.feature_dim);
    std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ull * (salt + 1)));
    std::normal_distribution<double> gauss;
    std::map<int, std::vector<float>> cache;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            auto [it, fresh] = cache.try_emplace(gt_labels.at(x, y));
            if (fresh) it->second = codebook.vec(gt_labels.at(x, y));
            const auto& base = it->second;
            float* f = out.pixel(x, y);
            double norm = 0;
            for (int d = 0; d < out.dim; ++d) {
                double v = base[d] + (noise_sigma > 0 ? noise_sigma * gauss(rng) : 0.0);
                f[d] = float(v);
                norm += v * v;
            }
            norm = std::sqrt(norm);
            for (int d = 0; d < out.dim; ++d) f[d] = float(f[d] / norm);
        }
    return out;
}

MaskProposalSet synth_masks(const LabelImage& gt_labels, const ProviderConfig& cfg, uint64_t salt,
                            int distractors) {
    MaskProposalSet out;
    std::set<int> labels;
    for (auto v : gt_labels.data)
        if (v != 0) labels.insert(v);
    for (int label : labels) {
        Mask m(gt_labels.width, gt_labels.height);
        for (std::size_t i = 0; i < gt_labels.data.size(); ++i) m.data[i] = gt_labels.data[i] == label;
        out.masks.push_back(std::move(m));
    }
    std::mt19937_64 rng(cfg.seed ^ (0xa076'1d64'78bd'642full * (salt + 1)));
    for (int k = 0; k < distractors; ++k) {
        std::uniform_int_distribution<int> dx(0, gt_labels.width - 2), dy(0, gt_labels.height - 2);
        int x0 = dx(rng), y0 = dy(rng);
        std::uniform_int_distribution<int> dw(1, std::max(1, gt_labels.width / 4));
        std::uniform_int_distribution<int> dh(1, std::max(1, gt_labels.height / 4));
        int x1 = std::min(gt_labels.width, x0 + dw(rng));
        int y1 = std::min(gt_labels.height, y0 + dh(rng));
        Mask m(gt_labels.width, gt_labels.height);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) m.at(x, y) = 1;
        if (!m.empty()) out.masks.push_back(std::move(m));
    }
    return out;
}

CorrespondenceSet synth_correspondences(const Camera& cam_a, const std::vector<float>& depth_a,
                                        const Camera& cam_b, const std::vector<float>& depth_b,
                                        double dropout, double pixel_noise,
                                        const ProviderConfig& cfg, uint64_t salt,
                                        double depth_tol) {
    CorrespondenceSet out;
    std::mt19937_64 rng(cfg.seed ^ (0xc2b2'ae3d'27d4'eb4full * (salt + 1)));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss;
    for (int y = 0; y < cam_a.height; ++y)
        for (int x = 0; x < cam_a.width; ++x) {
            const float za = depth_a[std::size_t(y) * cam_a.width + x];
            // Draw the randomness unconditionally so dropout patterns do not
            // depend on scene content ordering.
            const double u_drop = uni(rng);
            const double jx = gauss(rng), jy = gauss(rng);
            if (za <= 0) continue;
            const Vec3 pw = cam_a.unproject(x + 0.5, y + 0.5, za);
            const Vec3 pc = cam_b.to_camera(pw);
            if (pc.z() <= 0.01) continue;
            const Vec2 uv = cam_b.project_cam(pc);
            const int bx = int(std::floor(uv.x())), by = int(std::floor(uv.y()));
            if (bx < 0 || bx >= cam_b.width || by < 0 || by >= cam_b.height) continue;
            const float zb = depth_b[std::size_t(by) * cam_b.width + bx];
            if (zb <= 0 || std::abs(zb - pc.z()) > depth_tol * pc.z()) continue;  // occluded
            if (u_drop < dropout) continue;
            Vec2 pa(x + 0.5, y + 0.5), pb = uv;
            if (pixel_noise > 0) {
                pb.x() += pixel_noise * jx;
                pb.y() += pixel_noise * jy;
                pb.x() = std::clamp(pb.x(), 0.0, cam_b.width - 1e-3);
                pb.y() = std::clamp(pb.y(), 0.0, cam_b.height - 1e-3);
            }
            out.items.push_back({pa, pb, 1.0});
        }
    return out;
}

PointMap synth_point_map(const Camera& cam, const std::vector<float>& depth_map,
                         const std::vector<float>& alpha_map) {
    PointMap out(cam.width, cam.height);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            const std::size_t i = out.idx(x, y);
            const float z = depth_map[i];
            out.confidence[i] = 2.f * alpha_map[i];
            if (z > 0) out.points[i] = cam.unproject(x + 0.5, y + 0.5, z);
        }
    return out;
}

std::vector<std::vector<float>> synth_point_features(const std::vector<Vec3>& points,
                                                     const RigidTransform& world_to_local,
                                                     int appearance_id, double noise_sigma,
                                                     const ProviderConfig& cfg, uint64_t salt) {
    const int D = cfg.feature_dim;
    // The projection is keyed on the appearance id only, so points of the
    // same object embedded at different timesteps land in the same space.
    std::mt19937_64 proj_rng(cfg.seed ^ (0x2545'f491'4f6c'dd1dull * (appearance_id + 1)));
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
    std::vector<Vec3> omega(D);
    std::vector<double> phase(D);
    for (int d = 0; d < D; ++d) {
        omega[d] = Vec3(gauss(proj_rng), gauss(proj_rng), gauss(proj_rng)) /
                   cfg.point_feature_bandwidth;
        phase[d] = uni(proj_rng);
    }
    std::mt19937_64 noise_rng(cfg.seed ^ (0xff51'afd7'ed55'8ccdull * (salt + 1)));
    std::vector<std::vector<float>> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3 local = world_to_local.apply(points[i]);
        std::vector<float> f(D);
        double norm = 0;
        for (int d = 0; d < D; ++d) {
            double v = std::cos(omega[d].dot(local) + phase[d]);
            if (noise_sigma > 0) v += noise_sigma * gauss(noise_rng);
            f[d] = float(v);
            norm += v * v;
        }
        norm = std::max(std::sqrt(norm), 1e-9);
        for (int d = 0; d < D; ++d) f[d] = float(f[d] / norm);
        out[i] = std::move(f);
    }
    return out;
}

}  // namespace ltgs
