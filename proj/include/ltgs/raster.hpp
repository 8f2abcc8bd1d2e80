#pragma once

#include "ltgs/image.hpp"
#include "ltgs/splat.hpp"

#include <unordered_map>

namespace ltgs {

// Per-object binary visibility (the temporal opacity filter). An object whose
// label maps to 0 contributes nothing to the render.
struct Visibility {
    bool everything = false;
    std::unordered_map<int, uint8_t> by_label;

    static Visibility all() { return {true, {}}; }
    bool visible(int label) const {
        if (everything) return true;
        auto it = by_label.find(label);
        if (it == by_label.end())
            throw std::invalid_argument("visibility: label " + std::to_string(label) +
                                        " has no entry");
        return it->second != 0;
    }
};

struct RenderOutput {
    Image image;                    // H x W x 3
    std::vector<float> alpha_map;   // H x W accumulated opacity
    std::vector<float> depth_map;   // H x W expected depth (0 where alpha ~ 0)
    int skipped_splats = 0;         // degenerate 2D covariance diagnostics
};

struct PixelContribution {
    int32_t splat;
    float alpha_pix;  // opacity after the 2D Gaussian falloff
    float t_before;   // transmittance before this splat; weight = alpha_pix * t_before
};

// Front-to-back ordered per-pixel contribution lists.
struct ContributionRecord {
    int width = 0, height = 0;
    std::vector<std::vector<PixelContribution>> pixels;

    const std::vector<PixelContribution>& at(int x, int y) const {
        return pixels[std::size_t(y) * width + x];
    }
};

struct RasterConfig {
    int tile_size = 16;
    double z_near = 0.01;
    double low_pass = 0.3;            // added to the 2D covariance diagonal
    double transmittance_eps = 1e-4;  // early-out threshold
    double alpha_min = 1.0 / 255.0;
    double record_min_weight = 1e-5;
    int threads = 0;  // 0 = hardware concurrency
};

RenderOutput render(const SplatSet& set, const Camera& cam, const Visibility& vis,
                    const RasterConfig& cfg = {});

std::pair<RenderOutput, ContributionRecord> render_with_contributions(
    const SplatSet& set, const Camera& cam, const Visibility& vis, const RasterConfig& cfg = {});

// Camera depth of each pixel's strongest contributor, 0 where nothing renders.
// Unlike the alpha-blended depth_map this is crisp at silhouettes and through
// semi-transparent media, matching how instance labels are assigned.
std::vector<float> dominant_depth(const SplatSet& set, const Camera& cam, const Visibility& vis,
                                  const RasterConfig& cfg = {});

struct RenderGrads {
    std::vector<std::array<double, 48>> sh;   // d loss / d sh_coeffs
    std::vector<double> logit_opacity;        // d loss / d logit opacity
};

// Analytic gradients for the learnable set {alpha, c}; loss_grad is the
// per-pixel H*W*3 gradient of the scalar loss with respect to the rendered
// image. Requires the ContributionRecord of a matching forward pass.
RenderGrads backward(const SplatSet& set, const Camera& cam, const Visibility& vis,
                     const std::vector<double>& loss_grad, const ContributionRecord& record,
                     const RasterConfig& cfg = {});

}  // namespace ltgs
