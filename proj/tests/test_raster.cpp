#include "ltgs/raster.hpp"
#include "ltgs/splat.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace ltgs;

namespace {

Camera test_camera(int w = 48, int h = 32) {
    Camera cam;
    cam.width = w;
    cam.height = h;
    cam.fx = cam.fy = 40;
    cam.cx = w / 2.0;
    cam.cy = h / 2.0;
    return cam;  // at origin, looking along +z
}

SplatSet test_scene(int n, uint64_t seed, double z0 = 4.0, double spread = 1.5) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::normal_distribution<double> g;
    SplatSet s;
    for (int i = 0; i < n; ++i) {
        Quat q(g(rng), g(rng), g(rng), g(rng));
        q.normalize();
        std::array<double, 48> c{};
        for (int j = 0; j < 48; ++j) c[std::size_t(j)] = 0.15 * uni(rng);
        const Vec3 mu(spread * uni(rng), spread * uni(rng), z0 + uni(rng));
        const Vec3 ls(-1.8 + 0.3 * uni(rng), -1.8 + 0.3 * uni(rng), -1.8 + 0.3 * uni(rng));
        s.push_back(mu, q, ls, 0.5 * uni(rng), c, i % 4);
    }
    return s;
}

// Oracle: single-threaded, untiled compositing over the full image. Shares the
// projection formulas but none of the binning, ordering, or threading machinery
// the production path adds.
Image naive_render(const SplatSet& set, const Camera& cam, const Visibility& vis,
                   const RasterConfig& cfg = {}) {
    struct P {
        double z, u, v, ca, cb, cc, alpha;
        int x0, x1, y0, y1;
        Vec3 rgb;
    };
    std::vector<P> ps;
    const Vec3 cc = cam.center();
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (!vis.visible(set.labels[i])) continue;
        const Vec3 pc = cam.to_camera(set.positions[i]);
        if (pc.z() <= cfg.z_near) continue;
        const double alpha = set.opacity(i);
        if (alpha < cfg.alpha_min) continue;
        const double z = pc.z();
        Eigen::Matrix<double, 2, 3> J;
        J << cam.fx / z, 0, -cam.fx * pc.x() / (z * z), 0, cam.fy / z, -cam.fy * pc.y() / (z * z);
        const Vec3 s = set.scale(i);
        const Mat3 Rq = set.rotations[i].normalized().toRotationMatrix();
        Eigen::Matrix2d cov = J * cam.pose.R * (Rq * s.cwiseProduct(s).asDiagonal() * Rq.transpose()) *
                              cam.pose.R.transpose() * J.transpose();
        cov(0, 0) += cfg.low_pass;
        cov(1, 1) += cfg.low_pass;
        const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
        if (!(det > 0) || !std::isfinite(det)) continue;
        P p;
        p.z = z;
        const Vec2 uv = cam.project_cam(pc);
        p.u = uv.x();
        p.v = uv.y();
        p.ca = cov(1, 1) / det;
        p.cb = -cov(0, 1) / det;
        p.cc = cov(0, 0) / det;
        p.alpha = alpha;
        const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
        const double radius = std::ceil(3.0 * std::sqrt(mid + std::sqrt(std::max(0.1, mid * mid - det))));
        p.x0 = std::max(0, int(std::floor(p.u - radius)));
        p.x1 = std::min(cam.width, int(std::ceil(p.u + radius)) + 1);
        p.y0 = std::max(0, int(std::floor(p.v - radius)));
        p.y1 = std::min(cam.height, int(std::ceil(p.v + radius)) + 1);
        if (p.x0 >= p.x1 || p.y0 >= p.y1) continue;
        Vec3 dir = set.positions[i] - cc;
        p.rgb = evaluate_sh(set.sh_coeffs[i].data(), dir.norm() > 1e-12 ? dir : Vec3(0, 0, 1));
        ps.push_back(p);
    }
    std::stable_sort(ps.begin(), ps.end(), [](const P& a, const P& b) { return a.z < b.z; });

    Image img(cam.width, cam.height, 3);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            double T = 1.0, r = 0, g = 0, b = 0;
            for (const auto& p : ps) {
                if (x < p.x0 || x >= p.x1 || y < p.y0 || y >= p.y1) continue;
                const double dx = p.u - (x + 0.5), dy = p.v - (y + 0.5);
                const double power = -0.5 * (p.ca * dx * dx + p.cc * dy * dy) - p.cb * dx * dy;
                if (power > 0.0) continue;
                const double apix = std::min(0.99, p.alpha * std::exp(power));
                if (apix < cfg.alpha_min) continue;
                // Shading casts to float in the fast path; mirror that here.
                r += apix * T * double(float(p.rgb[0]));
                g += apix * T * double(float(p.rgb[1]));
                b += apix * T * double(float(p.rgb[2]));
                T *= 1.0 - apix;
                if (T < cfg.transmittance_eps) break;
            }
            img.at(x, y, 0) = float(r);
            img.at(x, y, 1) = float(g);
            img.at(x, y, 2) = float(b);
        }
    return img;
}

}  // namespace

TEST_CASE("render matches untiled single-threaded compositing oracle") {
    const auto cam = test_camera();
    const auto scene = test_scene(120, 9);
    const auto fast = render(scene, cam, Visibility::all());
    const auto slow = naive_render(scene, cam, Visibility::all());
    double worst = 0;
    for (std::size_t i = 0; i < fast.image.data.size(); ++i)
        worst = std::max(worst, std::abs(double(fast.image.data[i]) - slow.data[i]));
    CHECK(worst < 1e-5);
}

TEST_CASE("render determinism across repeated calls") {
    const auto cam = test_camera();
    const auto scene = test_scene(150, 13);
    const auto a = render(scene, cam, Visibility::all());
    const auto b = render(scene, cam, Visibility::all());
    CHECK(a.image.data == b.image.data);
    CHECK(a.alpha_map == b.alpha_map);
    CHECK(a.depth_map == b.depth_map);
}

TEST_CASE("single splat: alpha and depth") {
    SplatSet s;
    s.push_back(Vec3(0, 0, 5), Quat::Identity(), Vec3::Constant(std::log(0.2)), logit(0.8),
                dc_only_coeffs(Vec3(1, 0.25, 0.5)), 1);
    const auto cam = test_camera();
    const auto out = render(s, cam, Visibility::all());

    const int px = int(cam.cx), py = int(cam.cy);
    const float a_center = out.alpha_map[std::size_t(py) * cam.width + px];
    CHECK(a_center > 0.5f);
    CHECK(a_center <= 0.99f);
    CHECK(out.depth_map[std::size_t(py) * cam.width + px] == doctest::Approx(5.0).epsilon(1e-6));
    // Alpha decays away from the center.
    CHECK(out.alpha_map[std::size_t(py) * cam.width + px + 6] < a_center);
    // Center color approaches the DC color scaled by accumulated alpha.
    CHECK(out.image.at(px, py, 0) == doctest::Approx(double(a_center) * 1.0).epsilon(1e-5));
    CHECK(out.image.at(px, py, 1) == doctest::Approx(double(a_center) * 0.25).epsilon(1e-4));
}

TEST_CASE("visibility filter") {
    const auto cam = test_camera();
    auto scene = test_scene(60, 17);
    Visibility only13;
    only13.by_label = {{0, 1}, {1, 0}, {2, 0}, {3, 1}};
    const auto masked = render(scene, cam, only13);

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (scene.labels[i] == 0 || scene.labels[i] == 3) keep.push_back(i);
    const auto manual = render(scene.subset(keep), cam, Visibility::all());
    CHECK(masked.image.data == manual.image.data);

    Visibility incomplete;
    incomplete.by_label = {{0, 1}};
    CHECK_THROWS(render(scene, cam, incomplete));
}

TEST_CASE("occlusion ordering: front splat dominates") {
    SplatSet s;
    s.push_back(Vec3(0, 0, 6), Quat::Identity(), Vec3::Constant(std::log(0.5)), logit(0.95),
                dc_only_coeffs(Vec3(0, 1, 0)), 0);
    s.push_back(Vec3(0, 0, 3), Quat::Identity(), Vec3::Constant(std::log(0.25)), logit(0.95),
                dc_only_coeffs(Vec3(1, 0, 0)), 0);
    const auto cam = test_camera();
    const auto out = render(s, cam, Visibility::all());
    const int px = int(cam.cx), py = int(cam.cy);
    CHECK(out.image.at(px, py, 0) > 3.f * out.image.at(px, py, 1));
    CHECK(out.depth_map[std::size_t(py) * cam.width + px] < 4.0);
}

TEST_CASE("backward: opacity gradients match finite differences") {
    const auto cam = test_camera(32, 24);
    auto scene = test_scene(40, 23);
    auto [out, rec] = render_with_contributions(scene, cam, Visibility::all());

    // Fixed linear loss L = sum(g * image): exact per-pixel gradient is g.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::vector<double> g(out.image.data.size());
    for (auto& v : g) v = uni(rng);
    auto loss = [&](const Image& img) {
        double acc = 0;
        for (std::size_t i = 0; i < img.data.size(); ++i) acc += g[i] * img.data[i];
        return acc;
    };

    const auto grads = backward(scene, cam, Visibility::all(), g, rec);

    std::mt19937_64 pickr(29);
    std::uniform_int_distribution<std::size_t> pick(0, scene.size() - 1);
    const double eps = 1e-3;
    int checked = 0;
    for (int trial = 0; trial < 30 && checked < 12; ++trial) {
        const std::size_t i = pick(pickr);
        auto sp = scene, sm = scene;
        sp.logit_opacities[i] += eps;
        sm.logit_opacities[i] -= eps;
        const double fd = (loss(render(sp, cam, Visibility::all()).image) -
                           loss(render(sm, cam, Visibility::all()).image)) /
                          (2 * eps);
        if (std::abs(fd) < 1e-4) continue;  // invisible or negligible splat
        CHECK(grads.logit_opacity[i] == doctest::Approx(fd).epsilon(1e-3));
        ++checked;
    }
    CHECK(checked >= 5);
}

TEST_CASE("backward: sh gradients match finite differences") {
    const auto cam = test_camera(32, 24);
    auto scene = test_scene(30, 37);
    auto [out, rec] = render_with_contributions(scene, cam, Visibility::all());

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::vector<double> g(out.image.data.size());
    for (auto& v : g) v = uni(rng);
    auto loss = [&](const Image& img) {
        double acc = 0;
        for (std::size_t i = 0; i < img.data.size(); ++i) acc += g[i] * img.data[i];
        return acc;
    };
    const auto grads = backward(scene, cam, Visibility::all(), g, rec);

    std::mt19937_64 pickr(31);
    std::uniform_int_distribution<std::size_t> ps(0, scene.size() - 1);
    std::uniform_int_distribution<int> pc(0, 47);
    const double eps = 1e-3;
    int checked = 0;
    for (int trial = 0; trial < 60 && checked < 15; ++trial) {
        const std::size_t i = ps(pickr);
        const int j = pc(pickr);
        auto sp = scene, sm = scene;
        sp.sh_coeffs[i][std::size_t(j)] += eps;
        sm.sh_coeffs[i][std::size_t(j)] -= eps;
        const double fd = (loss(render(sp, cam, Visibility::all()).image) -
                           loss(render(sm, cam, Visibility::all()).image)) /
                          (2 * eps);
        if (std::abs(fd) < 1e-4) continue;
        CHECK(grads.sh[i][std::size_t(j)] == doctest::Approx(fd).epsilon(1e-3));
        ++checked;
    }
    CHECK(checked >= 8);

    CHECK_THROWS(backward(scene, cam, Visibility::all(), g, ContributionRecord{}));
}

TEST_CASE("render invariance under joint scene and camera rotation") {
    auto cam = test_camera();
    cam.pose = {Eigen::AngleAxisd(0.2, Vec3(0.3, 1, 0.1).normalized()).toRotationMatrix(),
                Vec3(0.1, -0.2, 0.3)};
    const auto scene = test_scene(80, 43);

    std::mt19937_64 rng(47);
    std::normal_distribution<double> g;
    Quat q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    const RigidTransform P{q.toRotationMatrix(), Vec3(0.4, -1.0, 0.6)};

    const auto moved = transform_splats(scene, P);
    Camera cam2 = cam;
    cam2.pose = cam.pose.compose(P.inverse());  // world-to-cam after undoing the motion

    const auto ref = render(scene, cam, Visibility::all());
    const auto inv = render(moved, cam2, Visibility::all());
    double worst = 0;
    for (std::size_t i = 0; i < ref.image.data.size(); ++i)
        worst = std::max(worst, std::abs(double(ref.image.data[i]) - inv.image.data[i]));
    CHECK(worst < 1e-4);
}
