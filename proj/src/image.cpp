#include "ltgs/image.hpp"

#include <algorithm>
#include <cmath>

namespace ltgs {

std::vector<double> luminance(const Image& img) {
    std::vector<double> out(img.pixel_count());
    if (img.channels == 1) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.data[i];
    } else if (img.channels == 3) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] +
                     0.114 * img.data[3 * i + 2];
        }
    } else {
        throw std::invalid_argument("luminance: expected 1 or 3 channels");
    }
    return out;
}

static int reflect(int i, int n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
    return std::clamp(i, 0, n - 1);
}

std::vector<double> gaussian_blur(const std::vector<double>& plane, int w, int h, double sigma,
                                  int radius) {
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
        sum += kernel[k + radius];
    }
    for (auto& v : kernel) v /= sum;

    std::vector<double> tmp(plane.size()), out(plane.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * plane[std::size_t(y) * w + reflect(x + k, w)];
            tmp[std::size_t(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * tmp[std::size_t(reflect(y + k, h)) * w + x];
            out[std::size_t(y) * w + x] = acc;
        }
    return out;
}

double mask_iou(const Mask& a, const Mask& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("mask_iou: dim mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        bool va = a.data[i], vb = b.data[i];
        inter += (va && vb);
        uni += (va || vb);
    }
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

Mask dilate(const Mask& m, int pixels) {
    Mask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            for (int dy = -pixels; dy <= pixels; ++dy)
                for (int dx = -pixels; dx <= pixels; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    if (nx >= 0 && nx < m.width && ny >= 0 && ny < m.height) out.at(nx, ny) = 1;
                }
        }
    return out;
}

Mask erode(const Mask& m, int pixels) {
    Mask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            bool keep = m.at(x, y);
            for (int dy = -pixels; keep && dy <= pixels; ++dy)
                for (int dx = -pixels; keep && dx <= pixels; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    // Pixels touching the border erode away.
                    keep = nx >= 0 && nx < m.width && ny >= 0 && ny < m.height && m.at(nx, ny);
                }
            out.at(x, y) = keep;
        }
    return out;
}

}  // namespace ltgs
