#include "ltgs/providers.hpp"
#include "ltgs/raster.hpp"
#include "ltgs/splat.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ltgs;

TEST_CASE("codebook: deterministic, unit-norm, well separated") {
    ProviderConfig cfg;
    Codebook a(cfg), b(cfg);
    for (int i = 0; i < cfg.codebook_size; ++i) {
        CHECK(a.vec(i) == b.vec(i));
        double norm = 0;
        for (float v : a.vec(i)) norm += double(v) * v;
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
    }
    for (int i = 0; i < cfg.codebook_size; ++i)
        for (int j = i + 1; j < cfg.codebook_size; ++j)
            CHECK(feature_cosine(a.vec(i).data(), a.vec(j).data(), a.dim()) <=
                  cfg.codebook_max_cos + 1e-9);
    // Ids wrap around the table.
    CHECK(a.vec(cfg.codebook_size) == a.vec(0));
}

TEST_CASE("synth_feature_map: label structure and noise behavior") {
    ProviderConfig cfg;
    LabelImage li(8, 6);
    for (int x = 4; x < 8; ++x)
        for (int y = 0; y < 6; ++y) li.at(x, y) = 3;

    const auto clean = synth_feature_map(li, 0.0, cfg);
    Codebook cb(cfg);
    CHECK(feature_cosine(clean.pixel(0, 0), cb.vec(0).data(), cfg.feature_dim) ==
          doctest::Approx(1.0).epsilon(1e-6));
    CHECK(feature_cosine(clean.pixel(5, 0), cb.vec(3).data(), cfg.feature_dim) ==
          doctest::Approx(1.0).epsilon(1e-6));
    CHECK(feature_cosine(clean.pixel(0, 0), clean.pixel(5, 0), cfg.feature_dim) <
          cfg.codebook_max_cos + 1e-9);

    const auto noisy = synth_feature_map(li, 0.1, cfg);
    const auto noisy2 = synth_feature_map(li, 0.1, cfg);
    CHECK(noisy.data == noisy2.data);  // same salt => identical
    const auto salted = synth_feature_map(li, 0.1, cfg, 1);
    CHECK(noisy.data != salted.data);
    // Noisy features still point roughly at their codebook entry.
    CHECK(feature_cosine(noisy.pixel(0, 0), cb.vec(0).data(), cfg.feature_dim) > 0.8);
}

TEST_CASE("synth_masks: one proposal per instance plus distractors") {
    ProviderConfig cfg;
    LabelImage li(12, 10);
    for (int x = 1; x < 4; ++x) li.at(x, 2) = 1;
    for (int x = 6; x < 9; ++x) li.at(x, 7) = 4;

    const auto props = synth_masks(li, cfg, 0, 2);
    REQUIRE(props.masks.size() >= 2);
    CHECK(props.masks[0].area() == 3);
    CHECK(props.masks[0].at(1, 2) == 1);
    CHECK(props.masks[1].at(6, 7) == 1);
    CHECK(props.masks.size() <= 4);
}

namespace {
Camera pv_camera(const RigidTransform& pose = {}) {
    Camera cam;
    cam.width = 32;
    cam.height = 24;
    cam.fx = cam.fy = 30;
    cam.cx = 16;
    cam.cy = 12;
    cam.pose = pose;
    return cam;
}
}  // namespace

TEST_CASE("synth_correspondences: reprojection consistency") {
    // A flat wall at z = 4 seen from two camera positions.
    const auto cam_a = pv_camera();
    const auto cam_b = pv_camera({Mat3::Identity(), Vec3(-0.5, 0, 0)});
    std::vector<float> depth_a(32 * 24, 4.f), depth_b(32 * 24, 4.f);

    ProviderConfig cfg;
    const auto cs = synth_correspondences(cam_a, depth_a, cam_b, depth_b, 0.0, 0.0, cfg);
    CHECK(cs.items.size() > 300);
    for (const auto& c : cs.items) {
        const Vec3 pw = cam_a.unproject(c.a.x(), c.a.y(), 4.0);
        const Vec2 uv = cam_b.project_cam(cam_b.to_camera(pw));
        CHECK((uv - c.b).norm() < 1e-9);
    }

    // Dropout thins the set; jitter moves target points but keeps them in frame.
    const auto thin = synth_correspondences(cam_a, depth_a, cam_b, depth_b, 0.5, 0.0, cfg);
    CHECK(thin.items.size() < cs.items.size() * 6 / 10);
    CHECK(thin.items.size() > cs.items.size() * 4 / 10);
    const auto jit = synth_correspondences(cam_a, depth_a, cam_b, depth_b, 0.0, 1.0, cfg);
    CHECK(jit.items.size() == cs.items.size());
    for (const auto& c : jit.items) {
        CHECK(c.b.x() >= 0.0);
        CHECK(c.b.x() < 32.0);
    }

    // Dropout decisions survive jitter being toggled (unconditional draws).
    const auto thin_jit = synth_correspondences(cam_a, depth_a, cam_b, depth_b, 0.5, 1.0, cfg);
    REQUIRE(thin_jit.items.size() == thin.items.size());
    for (std::size_t i = 0; i < thin.items.size(); ++i)
        CHECK(thin_jit.items[i].a == thin.items[i].a);
}

TEST_CASE("synth_correspondences: occlusion rejected by depth check") {
    const auto cam_a = pv_camera();
    const auto cam_b = pv_camera({Mat3::Identity(), Vec3(-0.5, 0, 0)});
    std::vector<float> depth_a(32 * 24, 4.f), depth_b(32 * 24, 4.f);
    // In view B an occluder hides the left half of the wall.
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 16; ++x) depth_b[std::size_t(y) * 32 + x] = 1.5f;

    ProviderConfig cfg;
    const auto cs = synth_correspondences(cam_a, depth_a, cam_b, depth_b, 0.0, 0.0, cfg);
    for (const auto& c : cs.items) CHECK(c.b.x() >= 16.0);
    CHECK(!cs.items.empty());
}

TEST_CASE("synth_point_map: unprojection and confidence") {
    const auto cam = pv_camera();
    std::vector<float> depth(32 * 24, 0.f), alpha(32 * 24, 0.f);
    depth[std::size_t(12) * 32 + 16] = 3.f;
    alpha[std::size_t(12) * 32 + 16] = 0.9f;

    const auto pm = synth_point_map(cam, depth, alpha);
    CHECK(pm.confidence[pm.idx(16, 12)] == doctest::Approx(1.8f));
    CHECK(pm.confidence[pm.idx(0, 0)] == 0.f);
    CHECK((pm.points[pm.idx(16, 12)] - cam.unproject(16.5, 12.5, 3.0)).norm() < 1e-9);
    CHECK(pm.points[pm.idx(0, 0)] == Vec3::Zero());
}

TEST_CASE("synth_point_features: consistent across timesteps of one object") {
    ProviderConfig cfg;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<Vec3> local_pts;
    for (int i = 0; i < 40; ++i) local_pts.push_back(0.3 * Vec3(g(rng), g(rng), g(rng)));

    // The same body observed at two world poses; world_to_local undoes each.
    Quat q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    const RigidTransform pose1{Mat3::Identity(), Vec3(1, 0, 0)};
    const RigidTransform pose2{q.toRotationMatrix(), Vec3(-2, 1, 3)};
    std::vector<Vec3> w1, w2;
    for (const auto& p : local_pts) {
        w1.push_back(pose1.apply(p));
        w2.push_back(pose2.apply(p));
    }

    const auto f1 = synth_point_features(w1, pose1.inverse(), 7, 0.0, cfg);
    const auto f2 = synth_point_features(w2, pose2.inverse(), 7, 0.0, cfg, 99);
    for (std::size_t i = 0; i < w1.size(); ++i)
        CHECK(feature_cosine(f1[i].data(), f2[i].data(), cfg.feature_dim) ==
              doctest::Approx(1.0).epsilon(1e-9));

    // A different appearance id embeds differently.
    const auto f3 = synth_point_features(w1, pose1.inverse(), 8, 0.0, cfg);
    double mean_cos = 0;
    for (std::size_t i = 0; i < w1.size(); ++i)
        mean_cos += feature_cosine(f1[i].data(), f3[i].data(), cfg.feature_dim);
    CHECK(std::abs(mean_cos / double(w1.size())) < 0.6);

    // Features distinguish separated points within the object.
    double off_diag = 0;
    for (std::size_t i = 1; i < 10; ++i)
        off_diag += feature_cosine(f1[0].data(), f1[i].data(), cfg.feature_dim);
    CHECK(std::abs(off_diag / 9.0) < 0.9);
}
