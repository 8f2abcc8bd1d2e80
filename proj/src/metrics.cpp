#include "ltgs/metrics.hpp"

#include <cmath>

namespace ltgs {

double psnr(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("psnr: dimension mismatch");
    if (a.data.empty()) throw std::invalid_argument("psnr: empty image");
    double mse = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        mse += d * d;
    }
    mse /= double(a.data.size());
    if (mse <= 0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

std::vector<int> holdout_indices(int n, int every) {
    if (every <= 1) throw std::invalid_argument("holdout_indices: every must exceed 1");
    std::vector<int> idx;
    for (int i = every - 1; i < n; i += every) idx.push_back(i);
    return idx;
}

EvalResult evaluate_views(const SplatSet& scene, const std::vector<Camera>& cams,
                          const std::vector<Image>& targets, const RasterConfig& rcfg) {
    if (cams.size() != targets.size() || cams.empty())
        throw std::invalid_argument("evaluate_views: cams/targets mismatch");
    EvalResult res;
    for (std::size_t v = 0; v < cams.size(); ++v) {
        const auto out = render(scene, cams[v], Visibility::all(), rcfg);
        res.per_view_psnr.push_back(psnr(out.image, targets[v]));
        res.mean_psnr += res.per_view_psnr.back();
        res.mean_ssim += mean_ssim(out.image, targets[v]);
    }
    res.mean_psnr /= double(cams.size());
    res.mean_ssim /= double(cams.size());
    return res;
}

}  // namespace ltgs
