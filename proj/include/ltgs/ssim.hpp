#pragma once

#include "ltgs/image.hpp"

namespace ltgs {

// Standard SSIM configuration: 11x11 Gaussian window, sigma 1.5,
// C1 = 0.01^2, C2 = 0.03^2, computed on luminance.
inline constexpr int kSsimRadius = 5;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Per-pixel SSIM scores in [-1, 1]. Throws on dimension mismatch.
std::vector<double> ssim_map(const Image& a, const Image& b);

double mean_ssim(const Image& a, const Image& b);

struct LossResult {
    double value = 0;
    std::vector<double> grad;  // d loss / d rendered pixel, H*W*C row-major
};

// L = (1 - lambda) * L1 + lambda * (1 - SSIM) / 2, with analytic gradient
// with respect to the rendered image.
LossResult photometric_loss(const Image& rendered, const Image& target, double lambda = 0.2);

}  // namespace ltgs
