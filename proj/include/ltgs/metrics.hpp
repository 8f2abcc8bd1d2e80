#pragma once

#include "ltgs/raster.hpp"
#include "ltgs/ssim.hpp"

namespace ltgs {

// Peak signal-to-noise ratio in dB against a peak of 1.0, capped at 99 for
// (near-)identical images.
double psnr(const Image& a, const Image& b);

// Indices of every `every`-th element (every-1, 2*every-1, ...), used to hold
// out evaluation views from a dense capture set. Fewer than `every` elements
// yields an empty holdout.
std::vector<int> holdout_indices(int n, int every = 8);

struct EvalResult {
    std::vector<double> per_view_psnr;
    double mean_psnr = 0;
    double mean_ssim = 0;
};

EvalResult evaluate_views(const SplatSet& scene, const std::vector<Camera>& cams,
                          const std::vector<Image>& targets, const RasterConfig& rcfg = {});

}  // namespace ltgs
