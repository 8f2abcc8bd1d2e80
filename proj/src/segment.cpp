#include "ltgs/segment.hpp"

#include "ltgs/kdtree.hpp"

#include <cmath>
#include <map>
#include <random>

namespace ltgs {

std::vector<int> majority_vote_labels(const SplatSet& set, const std::vector<Camera>& cams,
                                      const std::vector<LabelImage>& instance_masks,
                                      const RasterConfig& rcfg, VoteDiagnostics* diag) {
    if (cams.size() != instance_masks.size())
        throw std::invalid_argument("majority_vote_labels: cams/masks mismatch");

    std::vector<std::map<int, double>> weights(set.size());  // label -> accumulated weight
    std::vector<bool> seen(set.size(), false);
    for (std::size_t v = 0; v < cams.size(); ++v) {
        auto [out, record] = render_with_contributions(set, cams[v], Visibility::all(), rcfg);
        const auto& li = instance_masks[v];
        if (li.width != cams[v].width || li.height != cams[v].height)
            throw std::invalid_argument("majority_vote_labels: mask dims mismatch");
        for (int y = 0; y < li.height; ++y)
            for (int x = 0; x < li.width; ++x) {
                const int m = li.at(x, y);
                for (const auto& e : record.at(x, y)) {
                    const double w = double(e.alpha_pix) * double(e.t_before);
                    weights[std::size_t(e.splat)][m] += w;
                    seen[std::size_t(e.splat)] = true;
                }
            }
    }

    std::vector<int> labels(set.size(), 0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (!seen[i]) {
            if (diag) ++diag->invisible_splats;
            continue;
        }
        int best_m = 0;
        double best_w = 0;
        double total = 0;
        for (const auto& [m, w] : weights[i]) {
            total += w;
            if (m != 0 && w > best_w) {
                best_w = w;
                best_m = m;
            }
        }
        // A_0 collects everything that is not the strongest object.
        const double a0 = total - best_w;
        labels[i] = (best_m != 0 && best_w > a0) ? best_m : 0;
    }
    return labels;
}

std::vector<int> projection_filter(const SplatSet& set, const std::vector<int>& labels,
                                   const std::vector<Camera>& cams,
                                   const std::vector<LabelImage>& instance_masks,
                                   double z_near) {
    if (labels.size() != set.size())
        throw std::invalid_argument("projection_filter: label count mismatch");
    std::vector<int> out = labels;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const int m = labels[i];
        if (m == 0) continue;
        bool any_view = false, inside = false;
        for (std::size_t v = 0; v < cams.size(); ++v) {
            const auto& li = instance_masks[v];
            bool label_present = false;
            for (auto val : li.data)
                if (val == m) {
                    label_present = true;
                    break;
                }
            if (!label_present) continue;
            any_view = true;
            const Vec3 pc = cams[v].to_camera(set.positions[i]);
            if (pc.z() <= z_near) continue;
            const Vec2 uv = cams[v].project_cam(pc);
            const int x = int(std::floor(uv.x())), y = int(std::floor(uv.y()));
            if (x >= 0 && x < li.width && y >= 0 && y < li.height && li.at(x, y) == m) {
                inside = true;
                break;
            }
        }
        if (any_view && !inside) out[i] = 0;
    }
    return out;
}

SplatSet init_from_pointmaps(const std::vector<InitView>& views, int label,
                             const InitConfig& cfg) {
    if (views.empty()) throw std::invalid_argument("init_from_pointmaps: no views");

    std::vector<Vec3> pts;
    std::vector<Vec3> colors;
    for (const auto& v : views) {
        if (!v.points || !v.mask) throw std::invalid_argument("init_from_pointmaps: null view");
        for (int y = 0; y < v.mask->height; ++y)
            for (int x = 0; x < v.mask->width; ++x) {
                if (!v.mask->at(x, y)) continue;
                const std::size_t i = v.points->idx(x, y);
                if (v.points->confidence[i] <= cfg.min_confidence) continue;
                pts.push_back(v.points->points[i]);
                colors.push_back(v.colors ? Vec3(v.colors->at(x, y, 0), v.colors->at(x, y, 1),
                                                 v.colors->at(x, y, 2))
                                          : Vec3(0.5, 0.5, 0.5));
            }
    }

    SplatSet frag;
    if (pts.empty()) return frag;  // caller treats empty as a diagnostic

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> keep(0, cfg.downsample_factor - 1);
    std::vector<Vec3> kept_pts, kept_colors;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (keep(rng) != 0) continue;
        kept_pts.push_back(pts[i]);
        kept_colors.push_back(colors[i]);
    }
    if (kept_pts.empty()) {  // tiny fragments keep everything
        kept_pts = pts;
        kept_colors = colors;
    }

    std::vector<double> scales(kept_pts.size(), 0.02);
    if (kept_pts.size() > std::size_t(cfg.scale_neighbors)) {
        KdTree3 tree(kept_pts);
        for (std::size_t i = 0; i < kept_pts.size(); ++i) {
            auto hits = tree.knn(kept_pts[i], cfg.scale_neighbors + 1);  // self included
            double sum = 0;
            int n = 0;
            for (const auto& h : hits) {
                if (h.index == i) continue;
                sum += h.distance;
                ++n;
            }
            if (n > 0) scales[i] = std::max(sum / double(n), 1e-4);
        }
    }

    const double logit_a = logit(cfg.initial_alpha);
    for (std::size_t i = 0; i < kept_pts.size(); ++i) {
        frag.push_back(kept_pts[i], Quat::Identity(), Vec3::Constant(std::log(scales[i])), logit_a,
                       dc_only_coeffs(kept_colors[i]), label);
    }
    return frag;
}

}  // namespace ltgs
