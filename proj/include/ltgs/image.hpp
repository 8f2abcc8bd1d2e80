#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ltgs {

// Dense row-major float image, values nominally in [0, 1].
struct Image {
    int width = 0, height = 0, channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c, float fill = 0.f)
        : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {}

    float& at(int x, int y, int c) { return data[(std::size_t(y) * width + x) * channels + c]; }
    float at(int x, int y, int c) const {
        return data[(std::size_t(y) * width + x) * channels + c];
    }
    std::size_t pixel_count() const { return std::size_t(width) * height; }
    bool same_dims(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

// Binary mask over an image grid.
struct Mask {
    int width = 0, height = 0;
    std::vector<uint8_t> data;

    Mask() = default;
    Mask(int w, int h, uint8_t fill = 0) : width(w), height(h), data(std::size_t(w) * h, fill) {}

    uint8_t& at(int x, int y) { return data[std::size_t(y) * width + x]; }
    uint8_t at(int x, int y) const { return data[std::size_t(y) * width + x]; }
    std::size_t area() const {
        std::size_t n = 0;
        for (auto v : data) n += (v != 0);
        return n;
    }
    bool empty() const { return area() == 0; }
};

// Per-pixel integer labels (instance ids), 0 = background.
struct LabelImage {
    int width = 0, height = 0;
    std::vector<int32_t> data;

    LabelImage() = default;
    LabelImage(int w, int h) : width(w), height(h), data(std::size_t(w) * h, 0) {}
    int32_t& at(int x, int y) { return data[std::size_t(y) * width + x]; }
    int32_t at(int x, int y) const { return data[std::size_t(y) * width + x]; }
};

// Rec.601 luminance; identity for single-channel images.
std::vector<double> luminance(const Image& img);

// Separable Gaussian blur with reflect padding on a double-precision plane.
std::vector<double> gaussian_blur(const std::vector<double>& plane, int w, int h, double sigma,
                                  int radius);

double mask_iou(const Mask& a, const Mask& b);
Mask dilate(const Mask& m, int pixels);  // square structuring element
Mask erode(const Mask& m, int pixels);

}  // namespace ltgs
