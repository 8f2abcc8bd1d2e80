#include "ltgs/registration.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace ltgs;

namespace {

std::vector<Vec3> random_cloud(int n, uint64_t seed, double extent = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-extent, extent);
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) pts.push_back(Vec3(uni(rng), uni(rng), uni(rng)));
    return pts;
}

RigidTransform random_pose(uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Quat q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    return {q.toRotationMatrix(), Vec3(g(rng), g(rng), g(rng))};
}

std::vector<std::vector<float>> id_features(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g;
    std::vector<std::vector<float>> f;
    for (int i = 0; i < n; ++i) {
        std::vector<float> v(12);
        float norm = 0;
        for (auto& x : v) {
            x = g(rng);
            norm += x * x;
        }
        for (auto& x : v) x /= std::sqrt(norm);
        f.push_back(v);
    }
    return f;
}

double rot_angle_deg(const Mat3& a, const Mat3& b) {
    const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c) * 180.0 / M_PI;
}

// Oracle: quadratic-time symmetric chamfer.
double naive_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    auto one_way = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        double acc = 0;
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to) best = std::min(best, (p - q).norm());
            acc += best;
        }
        return acc / double(from.size());
    };
    return 0.5 * (one_way(a, b) + one_way(b, a));
}

}  // namespace

TEST_CASE("kabsch recovers an exact rigid motion") {
    const auto src = random_cloud(30, 3);
    const auto P = random_pose(5);
    std::vector<Vec3> dst;
    for (const auto& p : src) dst.push_back(P.apply(p));
    const auto est = kabsch(src, dst);
    CHECK(rot_angle_deg(est.R, P.R) < 1e-9);
    CHECK((est.T - P.T).norm() < 1e-9);

    // Reflection-prone case: nearly planar cloud still yields det(R) = +1.
    auto flat = random_cloud(20, 7);
    for (auto& p : flat) p.z() *= 1e-4;
    std::vector<Vec3> flat_dst;
    for (const auto& p : flat) flat_dst.push_back(P.apply(p));
    const auto est2 = kabsch(flat, flat_dst);
    CHECK(est2.is_valid(1e-6));
    CHECK(rot_angle_deg(est2.R, P.R) < 1e-6);
}

TEST_CASE("chamfer matches quadratic oracle") {
    const auto a = random_cloud(60, 11);
    const auto b = random_cloud(45, 13);
    CHECK(chamfer_distance(a, b) == doctest::Approx(naive_chamfer(a, b)).epsilon(1e-10));
    CHECK(chamfer_distance(a, a) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("bbox_diagonal") {
    std::vector<Vec3> pts{{0, 0, 0}, {1, 2, 2}, {0.5, 1, 1}};
    CHECK(bbox_diagonal(pts) == doctest::Approx(3.0));
}

TEST_CASE("feature correspondences: mutual NN with ratio test") {
    const int n = 25;
    auto fs = id_features(n, 17);
    // Target = permuted copy with slight noise.
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(19);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::normal_distribution<float> g(0.f, 0.01f);
    std::vector<std::vector<float>> ft(n);
    for (int i = 0; i < n; ++i) {
        ft[std::size_t(perm[std::size_t(i)])] = fs[std::size_t(i)];
        for (auto& v : ft[std::size_t(perm[std::size_t(i)])]) v += g(rng);
    }
    const auto pairs = feature_correspondences(fs, ft);
    CHECK(int(pairs.size()) >= n - 3);
    for (const auto& p : pairs) CHECK(perm[std::size_t(p.source)] == p.target);

    CHECK_THROWS(feature_correspondences({}, ft));
}

TEST_CASE("robust fit survives outlier correspondences") {
    const auto src = random_cloud(50, 23);
    const auto P = random_pose(29);
    std::vector<Vec3> dst;
    for (const auto& p : src) dst.push_back(P.apply(p));

    std::vector<CandidatePair> cands;
    for (int i = 0; i < 50; ++i) cands.push_back({i, i, 0.0});
    // 30% gross outliers.
    std::mt19937_64 rng(31);
    for (int k = 0; k < 15; ++k)
        cands[std::size_t(rng() % 50)].target = int(rng() % 50);

    const auto res = robust_rigid_fit(src, dst, cands);
    REQUIRE(res.success);
    CHECK(rot_angle_deg(res.transform.R, P.R) < 1e-5);
    CHECK((res.transform.T - P.T).norm() < 1e-6);
    CHECK(res.inliers >= 35);
    CHECK(res.rms_residual < 1e-9);
}

TEST_CASE("robust fit determinism") {
    const auto src = random_cloud(40, 37);
    const auto P = random_pose(41);
    std::vector<Vec3> dst;
    for (const auto& p : src) dst.push_back(P.apply(p));
    std::vector<CandidatePair> cands;
    for (int i = 0; i < 40; ++i) cands.push_back({i, i, 0.0});
    const auto r1 = robust_rigid_fit(src, dst, cands);
    const auto r2 = robust_rigid_fit(src, dst, cands);
    CHECK(r1.transform.R == r2.transform.R);
    CHECK(r1.transform.T == r2.transform.T);
    CHECK(r1.inliers == r2.inliers);
}

TEST_CASE("register_and_verify accepts matching geometry") {
    const auto src = random_cloud(80, 43);
    const auto fs = id_features(80, 47);
    const auto P = random_pose(53);
    std::vector<Vec3> dst;
    for (const auto& p : src) dst.push_back(P.apply(p));

    const auto res = register_and_verify(src, fs, dst, fs);
    REQUIRE(res.success);
    CHECK(rot_angle_deg(res.transform.R, P.R) < 0.01);
    CHECK((res.transform.T - P.T).norm() < 1e-4);
    CHECK(res.chamfer_after < 0.05 * bbox_diagonal(src));
}

TEST_CASE("register_and_verify rejects different geometry") {
    // Same appearance features, but the target shape is genuinely different:
    // a replacement, not a moved object.
    const auto src = random_cloud(60, 59);
    const auto fs = id_features(60, 61);
    auto dst = random_cloud(60, 67, 2.5);
    const auto res = register_and_verify(src, fs, dst, fs);
    CHECK_FALSE(res.success);
}
