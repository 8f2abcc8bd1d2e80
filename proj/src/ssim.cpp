#include "ltgs/ssim.hpp"

#include <cmath>

namespace ltgs {

namespace {

struct SsimFields {
    int w, h;
    std::vector<double> x, y, mu_x, mu_y, sigma_x2, sigma_y2, sigma_xy, S;
    std::vector<double> A1, A2, B1, B2;
};

SsimFields compute_fields(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("ssim: dimension mismatch");
    SsimFields f;
    f.w = a.width;
    f.h = a.height;
    f.x = luminance(a);
    f.y = luminance(b);
    const std::size_t n = f.x.size();

    auto blur = [&](const std::vector<double>& p) {
        return gaussian_blur(p, f.w, f.h, kSsimSigma, kSsimRadius);
    };
    f.mu_x = blur(f.x);
    f.mu_y = blur(f.y);
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = f.x[i] * f.x[i];
        yy[i] = f.y[i] * f.y[i];
        xy[i] = f.x[i] * f.y[i];
    }
    f.sigma_x2 = blur(xx);
    f.sigma_y2 = blur(yy);
    f.sigma_xy = blur(xy);
    f.S.resize(n);
    f.A1.resize(n);
    f.A2.resize(n);
    f.B1.resize(n);
    f.B2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.sigma_x2[i] -= f.mu_x[i] * f.mu_x[i];
        f.sigma_y2[i] -= f.mu_y[i] * f.mu_y[i];
        f.sigma_xy[i] -= f.mu_x[i] * f.mu_y[i];
        f.A1[i] = 2 * f.mu_x[i] * f.mu_y[i] + kSsimC1;
        f.A2[i] = 2 * f.sigma_xy[i] + kSsimC2;
        f.B1[i] = f.mu_x[i] * f.mu_x[i] + f.mu_y[i] * f.mu_y[i] + kSsimC1;
        f.B2[i] = f.sigma_x2[i] + f.sigma_y2[i] + kSsimC2;
        f.S[i] = (f.A1[i] * f.A2[i]) / (f.B1[i] * f.B2[i]);
    }
    return f;
}

}  // namespace

std::vector<double> ssim_map(const Image& a, const Image& b) {
    return compute_fields(a, b).S;
}

double mean_ssim(const Image& a, const Image& b) {
    auto S = ssim_map(a, b);
    double sum = 0;
    for (double v : S) sum += v;
    return sum / double(S.size());
}

LossResult photometric_loss(const Image& rendered, const Image& target, double lambda) {
    if (!rendered.same_dims(target)) throw std::invalid_argument("photometric_loss: dim mismatch");
    const std::size_t ne = rendered.data.size();
    LossResult out;
    out.grad.assign(ne, 0.0);

    // L1 over all elements.
    double l1 = 0;
    for (std::size_t i = 0; i < ne; ++i) {
        double d = double(rendered.data[i]) - double(target.data[i]);
        l1 += std::abs(d);
        double s = (d > 0) - (d < 0);
        out.grad[i] = (1.0 - lambda) * s / double(ne);
    }
    l1 /= double(ne);

    // D-SSIM term with its adjoint through the Gaussian windows.
    auto f = compute_fields(rendered, target);
    const std::size_t n = f.S.size();
    double ssim_sum = 0;
    std::vector<double> g_mu(n), g_sx(n), g_sxy(n);
    const double u = -lambda / (2.0 * double(n));  // dL/dS per pixel
    for (std::size_t i = 0; i < n; ++i) {
        ssim_sum += f.S[i];
        double B1B2 = f.B1[i] * f.B2[i];
        double dS_dmu = 2.0 * (f.mu_y[i] * f.A2[i] * f.B1[i] - f.mu_x[i] * f.A1[i] * f.A2[i]) /
                        (f.B1[i] * B1B2);
        double dS_dsx2 = -f.S[i] / f.B2[i];
        double dS_dsxy = 2.0 * f.A1[i] / B1B2;
        g_mu[i] = u * (dS_dmu - 2.0 * f.mu_x[i] * dS_dsx2 - f.mu_y[i] * dS_dsxy);
        g_sx[i] = u * dS_dsx2;
        g_sxy[i] = u * dS_dsxy;
    }
    auto blur = [&](const std::vector<double>& p) {
        return gaussian_blur(p, f.w, f.h, kSsimSigma, kSsimRadius);
    };
    auto b_mu = blur(g_mu);
    auto b_sx = blur(g_sx);
    auto b_sxy = blur(g_sxy);

    const int C = rendered.channels;
    const double lum_w1[3] = {0.299, 0.587, 0.114};
    for (std::size_t i = 0; i < n; ++i) {
        double dlum = b_mu[i] + 2.0 * f.x[i] * b_sx[i] + f.y[i] * b_sxy[i];
        if (C == 1) {
            out.grad[i] += dlum;
        } else {
            for (int c = 0; c < 3; ++c) out.grad[i * 3 + c] += lum_w1[c] * dlum;
        }
    }

    out.value = (1.0 - lambda) * l1 + lambda * (1.0 - ssim_sum / double(n)) / 2.0;
    return out;
}

}  // namespace ltgs
