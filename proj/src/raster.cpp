#include "ltgs/raster.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <thread>

namespace ltgs {

namespace {

struct ProjectedSplat {
    int32_t id;
    double z;
    double u, v;                 // projected center, continuous pixel coords
    double conic_a, conic_b, conic_c;
    double alpha;
    int x0, x1, y0, y1;          // clipped pixel bounds, inclusive-exclusive
    Eigen::Vector3f rgb;
};

struct SplatShading {
    Vec3 rgb;          // after the +0.5 offset and clamp
    std::array<bool, 3> clamped;
    std::array<double, kShCoeffs> basis;
};

SplatShading shade(const SplatSet& set, std::size_t i, const Vec3& cam_center) {
    SplatShading s;
    Vec3 dir = set.positions[i] - cam_center;
    double n = dir.norm();
    dir = n > 1e-12 ? Vec3(dir / n) : Vec3(0, 0, 1);
    s.basis = sh_basis(dir);
    for (int ch = 0; ch < 3; ++ch) {
        double v = 0.5;
        for (int j = 0; j < kShCoeffs; ++j) v += set.sh_coeffs[i][3 * j + ch] * s.basis[j];
        s.clamped[ch] = v < 0.0;
        s.rgb[ch] = std::max(v, 0.0);
    }
    return s;
}

// Projects every visible splat, returning them depth-sorted (stable on index).
std::vector<ProjectedSplat> project_all(const SplatSet& set, const Camera& cam,
                                        const Visibility& vis, const RasterConfig& cfg,
                                        int* skipped) {
    cam.validate();
    const Mat3& W = cam.pose.R;
    const Vec3 cam_center = cam.center();
    std::vector<ProjectedSplat> out;
    out.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (!vis.visible(set.labels[i])) continue;
        const Vec3 pc = cam.to_camera(set.positions[i]);
        if (pc.z() <= cfg.z_near) continue;
        double alpha = set.opacity(i);
        if (alpha < cfg.alpha_min) continue;

        const double z = pc.z();
        Eigen::Matrix<double, 2, 3> J;
        J << cam.fx / z, 0, -cam.fx * pc.x() / (z * z), 0, cam.fy / z, -cam.fy * pc.y() / (z * z);
        const Vec3 s = set.scale(i);
        const Mat3 Rq = set.rotations[i].normalized().toRotationMatrix();
        const Mat3 sigma3 = Rq * s.cwiseProduct(s).asDiagonal() * Rq.transpose();
        Eigen::Matrix2d cov = J * W * sigma3 * W.transpose() * J.transpose();
        cov(0, 0) += cfg.low_pass;
        cov(1, 1) += cfg.low_pass;
        const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
        if (!(det > 0) || !std::isfinite(det)) {
            ++*skipped;
            continue;
        }
        ProjectedSplat p;
        p.id = int32_t(i);
        p.z = z;
        Vec2 uv = cam.project_cam(pc);
        p.u = uv.x();
        p.v = uv.y();
        p.conic_a = cov(1, 1) / det;
        p.conic_b = -cov(0, 1) / det;
        p.conic_c = cov(0, 0) / det;
        p.alpha = alpha;

        const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
        const double lam_max = mid + std::sqrt(std::max(0.1, mid * mid - det));
        const double radius = std::ceil(3.0 * std::sqrt(lam_max));
        p.x0 = std::max(0, int(std::floor(p.u - radius)));
        p.x1 = std::min(cam.width, int(std::ceil(p.u + radius)) + 1);
        p.y0 = std::max(0, int(std::floor(p.v - radius)));
        p.y1 = std::min(cam.height, int(std::ceil(p.v + radius)) + 1);
        if (p.x0 >= p.x1 || p.y0 >= p.y1) continue;

        SplatShading sh = shade(set, i, cam_center);
        p.rgb = sh.rgb.cast<float>();
        out.push_back(p);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ProjectedSplat& a, const ProjectedSplat& b) { return a.z < b.z; });
    return out;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads == 0) threads = int(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

std::pair<RenderOutput, ContributionRecord> raster_impl(const SplatSet& set, const Camera& cam,
                                                        const Visibility& vis,
                                                        const RasterConfig& cfg, bool record) {
    RenderOutput out;
    out.image = Image(cam.width, cam.height, 3);
    out.alpha_map.assign(std::size_t(cam.width) * cam.height, 0.f);
    out.depth_map.assign(std::size_t(cam.width) * cam.height, 0.f);
    ContributionRecord rec;
    rec.width = cam.width;
    rec.height = cam.height;
    if (record) rec.pixels.resize(std::size_t(cam.width) * cam.height);

    int skipped = 0;
    auto splats = project_all(set, cam, vis, cfg, &skipped);
    out.skipped_splats = skipped;

    const int ts = cfg.tile_size;
    const int tiles_x = (cam.width + ts - 1) / ts;
    const int tiles_y = (cam.height + ts - 1) / ts;
    const int n_tiles = tiles_x * tiles_y;

    // Bin depth-sorted splats per tile; order within a tile stays front-to-back.
    std::vector<std::vector<int>> tile_bins(n_tiles);
    for (int si = 0; si < int(splats.size()); ++si) {
        const auto& p = splats[si];
        for (int ty = p.y0 / ts; ty <= (p.y1 - 1) / ts; ++ty)
            for (int tx = p.x0 / ts; tx <= (p.x1 - 1) / ts; ++tx)
                tile_bins[ty * tiles_x + tx].push_back(si);
    }

    parallel_for(n_tiles, cfg.threads, [&](int tile) {
        const int tx = tile % tiles_x, ty = tile / tiles_x;
        const int px0 = tx * ts, px1 = std::min(cam.width, px0 + ts);
        const int py0 = ty * ts, py1 = std::min(cam.height, py0 + ts);
        const auto& bin = tile_bins[tile];
        for (int y = py0; y < py1; ++y)
            for (int x = px0; x < px1; ++x) {
                const double sx = x + 0.5, sy = y + 0.5;
                double T = 1.0;
                double r = 0, g = 0, b = 0, depth = 0, wsum = 0;
                auto* plist = record ? &rec.pixels[std::size_t(y) * cam.width + x] : nullptr;
                for (int si : bin) {
                    const auto& p = splats[si];
                    if (x < p.x0 || x >= p.x1 || y < p.y0 || y >= p.y1) continue;
                    const double dx = p.u - sx, dy = p.v - sy;
                    const double power =
                        -0.5 * (p.conic_a * dx * dx + p.conic_c * dy * dy) - p.conic_b * dx * dy;
                    if (power > 0.0) continue;
                    const double alpha_pix = std::min(0.99, p.alpha * std::exp(power));
                    if (alpha_pix < cfg.alpha_min) continue;
                    const double w = alpha_pix * T;
                    r += w * p.rgb[0];
                    g += w * p.rgb[1];
                    b += w * p.rgb[2];
                    depth += w * p.z;
                    wsum += w;
                    if (plist && w > cfg.record_min_weight)
                        plist->push_back({p.id, float(alpha_pix), float(T)});
                    T *= 1.0 - alpha_pix;
                    if (T < cfg.transmittance_eps) break;
                }
                out.image.at(x, y, 0) = float(r);
                out.image.at(x, y, 1) = float(g);
                out.image.at(x, y, 2) = float(b);
                out.alpha_map[std::size_t(y) * cam.width + x] = float(1.0 - T);
                out.depth_map[std::size_t(y) * cam.width + x] =
                    wsum > 1e-9 ? float(depth / wsum) : 0.f;
            }
    });
    return {std::move(out), std::move(rec)};
}

}  // namespace

RenderOutput render(const SplatSet& set, const Camera& cam, const Visibility& vis,
                    const RasterConfig& cfg) {
    return raster_impl(set, cam, vis, cfg, false).first;
}

std::pair<RenderOutput, ContributionRecord> render_with_contributions(const SplatSet& set,
                                                                      const Camera& cam,
                                                                      const Visibility& vis,
                                                                      const RasterConfig& cfg) {
    return raster_impl(set, cam, vis, cfg, true);
}

RenderGrads backward(const SplatSet& set, const Camera& cam, const Visibility& vis,
                     const std::vector<double>& loss_grad, const ContributionRecord& record,
                     const RasterConfig& cfg) {
    if (record.pixels.empty())
        throw std::invalid_argument("backward: forward contribution record required");
    if (loss_grad.size() != std::size_t(cam.width) * cam.height * 3)
        throw std::invalid_argument("backward: loss_grad size mismatch");
    (void)cfg;

    RenderGrads grads;
    grads.sh.assign(set.size(), {});
    grads.logit_opacity.assign(set.size(), 0.0);

    // Shading terms are cheap to recompute and keep the record compact.
    const Vec3 cam_center = cam.center();
    std::vector<SplatShading> shading(set.size());
    std::vector<bool> shaded(set.size(), false);
    std::vector<double> suffix;

    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            const auto& list = record.at(x, y);
            if (list.empty()) continue;
            const double* g = &loss_grad[(std::size_t(y) * cam.width + x) * 3];

            suffix.assign(list.size() + 1, 0.0);
            std::vector<double> cdotg(list.size());
            for (int k = int(list.size()) - 1; k >= 0; --k) {
                const auto& e = list[std::size_t(k)];
                if (!shaded[e.splat]) {
                    shading[e.splat] = shade(set, e.splat, cam_center);
                    shaded[e.splat] = true;
                }
                const auto& s = shading[e.splat];
                cdotg[std::size_t(k)] =
                    s.rgb[0] * g[0] + s.rgb[1] * g[1] + s.rgb[2] * g[2];
                const double w = double(e.alpha_pix) * double(e.t_before);
                suffix[std::size_t(k)] = suffix[std::size_t(k) + 1] + w * cdotg[std::size_t(k)];
            }

            for (std::size_t k = 0; k < list.size(); ++k) {
                const auto& e = list[k];
                const auto& s = shading[e.splat];
                const double w = double(e.alpha_pix) * double(e.t_before);

                // Color path: clamped channels pass no gradient.
                for (int ch = 0; ch < 3; ++ch) {
                    if (s.clamped[ch]) continue;
                    const double gc = w * g[ch];
                    for (int j = 0; j < kShCoeffs; ++j)
                        grads.sh[e.splat][3 * j + ch] += gc * s.basis[j];
                }

                // Opacity path, through this splat's weight and downstream
                // transmittances.
                const double dL_dapix =
                    double(e.t_before) * cdotg[k] - suffix[k + 1] / (1.0 - double(e.alpha_pix));
                const double alpha = set.opacity(e.splat);
                const bool sat = double(e.alpha_pix) >= 0.99;  // clamp in forward
                if (!sat) {
                    const double falloff = double(e.alpha_pix) / alpha;
                    grads.logit_opacity[e.splat] += dL_dapix * falloff * alpha * (1.0 - alpha);
                }
            }
        }
    return grads;
}

std::vector<float> dominant_depth(const SplatSet& set, const Camera& cam, const Visibility& vis,
                                  const RasterConfig& cfg) {
    auto [out, rec] = render_with_contributions(set, cam, vis, cfg);
    std::vector<float> depth(std::size_t(cam.width) * cam.height, 0.f);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            // Dominant instance by accumulated weight, then the weighted mean
            // depth over that instance's contributions alone: crisp across
            // surface boundaries, smooth within a surface.
            std::map<int, double> by_label;
            for (const auto& e : rec.at(x, y)) {
                const double w = double(e.alpha_pix) * double(e.t_before);
                by_label[set.labels[std::size_t(e.splat)]] += w;
            }
            int dom = 0;
            double dom_w = 0;
            for (const auto& [label, w] : by_label)
                if (w > dom_w) {
                    dom = label;
                    dom_w = w;
                }
            if (dom_w <= 0) continue;
            double zsum = 0;
            for (const auto& e : rec.at(x, y)) {
                if (set.labels[std::size_t(e.splat)] != dom) continue;
                const double w = double(e.alpha_pix) * double(e.t_before);
                zsum += w * cam.to_camera(set.positions[std::size_t(e.splat)]).z();
            }
            depth[std::size_t(y) * cam.width + x] = float(zsum / dom_w);
        }
    return depth;
}

}  // namespace ltgs
