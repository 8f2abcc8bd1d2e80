#include "ltgs/registration.hpp"

#include "ltgs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ltgs {

std::vector<CandidatePair> feature_correspondences(
    const std::vector<std::vector<float>>& feats_source,
    const std::vector<std::vector<float>>& feats_target, double ratio) {
    if (feats_source.empty() || feats_target.empty())
        throw std::invalid_argument("feature_correspondences: empty cloud");
    const int dim = int(feats_source[0].size());

    auto two_nearest = [&](const std::vector<float>& q,
                           const std::vector<std::vector<float>>& pool) {
        int best = -1;
        double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
        for (int i = 0; i < int(pool.size()); ++i) {
            const double dot = kernels::dot(q.data(), pool[std::size_t(i)].data(), std::size_t(dim));
            const double d = 2.0 - 2.0 * dot;  // squared distance of unit vectors
            if (d < d1) {
                d2 = d1;
                d1 = d;
                best = i;
            } else if (d < d2) {
                d2 = d;
            }
        }
        return std::tuple<int, double, double>(best, d1, d2);
    };

    std::vector<int> fwd(feats_source.size(), -1);
    std::vector<double> fwd_d1(feats_source.size()), fwd_d2(feats_source.size());
    for (std::size_t i = 0; i < feats_source.size(); ++i)
        std::tie(fwd[i], fwd_d1[i], fwd_d2[i]) = two_nearest(feats_source[i], feats_target);
    std::vector<int> bwd(feats_target.size(), -1);
    for (std::size_t j = 0; j < feats_target.size(); ++j)
        bwd[j] = std::get<0>(two_nearest(feats_target[j], feats_source));

    std::vector<CandidatePair> out;
    for (std::size_t i = 0; i < feats_source.size(); ++i) {
        const int j = fwd[i];
        if (j < 0 || bwd[std::size_t(j)] != int(i)) continue;
        const double d1 = std::sqrt(std::max(fwd_d1[i], 0.0));
        const double d2 = std::sqrt(std::max(fwd_d2[i], 0.0));
        if (d2 > 1e-12 && d1 > ratio * d2) continue;  // ambiguous
        out.push_back({int(i), j, d1});
    }
    return out;
}

RigidTransform kabsch(const std::vector<Vec3>& source, const std::vector<Vec3>& target) {
    if (source.size() != target.size() || source.size() < 3)
        throw std::invalid_argument("kabsch: need >= 3 paired points");
    Vec3 cs = Vec3::Zero(), ct = Vec3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        cs += source[i];
        ct += target[i];
    }
    cs /= double(source.size());
    ct /= double(target.size());
    Mat3 H = Mat3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i)
        H += (source[i] - cs) * (target[i] - ct).transpose();
    Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 D = Mat3::Identity();
    D(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
    RigidTransform out;
    out.R = svd.matrixV() * D * svd.matrixU().transpose();
    out.T = ct - out.R * cs;
    return out;
}

double bbox_diagonal(const std::vector<Vec3>& pts) {
    if (pts.empty()) return 0.0;
    Vec3 lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

RegistrationResult robust_rigid_fit(const std::vector<Vec3>& source,
                                    const std::vector<Vec3>& target,
                                    const std::vector<CandidatePair>& candidates,
                                    const RansacConfig& cfg) {
    RegistrationResult out;
    if (candidates.size() < 3) return out;

    const double thresh = std::max(cfg.inlier_threshold_rel * bbox_diagonal(source), 1e-9);
    const double thresh2 = thresh * thresh;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);

    auto count_inliers = [&](const RigidTransform& P, std::vector<std::size_t>* keep) {
        int n = 0;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            const auto& c = candidates[k];
            const double d2 =
                (P.apply(source[std::size_t(c.source)]) - target[std::size_t(c.target)])
                    .squaredNorm();
            if (d2 <= thresh2) {
                ++n;
                if (keep) keep->push_back(k);
            }
        }
        return n;
    };

    int best_inliers = 0;
    RigidTransform best;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
        if (a == b || b == c || a == c) continue;
        std::vector<Vec3> ps{source[std::size_t(candidates[a].source)],
                             source[std::size_t(candidates[b].source)],
                             source[std::size_t(candidates[c].source)]};
        std::vector<Vec3> pt{target[std::size_t(candidates[a].target)],
                             target[std::size_t(candidates[b].target)],
                             target[std::size_t(candidates[c].target)]};
        // Degenerate (near collinear) samples are resampled.
        if ((ps[1] - ps[0]).cross(ps[2] - ps[0]).norm() < 1e-9) continue;
        RigidTransform P = kabsch(ps, pt);
        const int n = count_inliers(P, nullptr);
        if (n > best_inliers) {
            best_inliers = n;
            best = P;
            if (double(n) >= cfg.inlier_fraction_early_exit * double(candidates.size())) break;
        }
    }
    if (best_inliers < 3) return out;

    // Refit on the inlier set.
    std::vector<std::size_t> keep;
    count_inliers(best, &keep);
    std::vector<Vec3> ps, pt;
    ps.reserve(keep.size());
    pt.reserve(keep.size());
    for (auto k : keep) {
        ps.push_back(source[std::size_t(candidates[k].source)]);
        pt.push_back(target[std::size_t(candidates[k].target)]);
    }
    out.transform = kabsch(ps, pt);
    keep.clear();
    out.inliers = count_inliers(out.transform, &keep);
    double ss = 0;
    for (auto k : keep) {
        const auto& c = candidates[k];
        ss += (out.transform.apply(source[std::size_t(c.source)]) -
               target[std::size_t(c.target)])
                  .squaredNorm();
    }
    out.rms_residual = keep.empty() ? 0.0 : std::sqrt(ss / double(keep.size()));
    out.success = out.inliers >= 3;
    return out;
}

RigidTransform icp_refine(const std::vector<Vec3>& source, const std::vector<Vec3>& target,
                          const RigidTransform& init, double max_pair_dist,
                          int max_iterations) {
    if (source.size() < 3 || target.size() < 3) return init;
    KdTree3 tree(target);
    RigidTransform cur = init;
    for (int it = 0; it < max_iterations; ++it) {
        std::vector<Vec3> ps, pt;
        for (const auto& s : source) {
            const auto hit = tree.nearest(cur.apply(s));
            if (hit.distance > max_pair_dist) continue;
            ps.push_back(s);
            pt.push_back(target[hit.index]);
        }
        if (ps.size() < 3) break;
        const RigidTransform next = kabsch(ps, pt);
        const double dr = (next.R - cur.R).norm(), dt = (next.T - cur.T).norm();
        cur = next;
        if (dr < 1e-10 && dt < 1e-10) break;
    }
    return cur;
}

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer_distance: empty cloud");
    KdTree3 ta(a), tb(b);
    double sum_ab = 0, sum_ba = 0;
    for (const auto& p : a) sum_ab += tb.nearest(p).distance;
    for (const auto& p : b) sum_ba += ta.nearest(p).distance;
    return 0.5 * (sum_ab / double(a.size()) + sum_ba / double(b.size()));
}

RegistrationResult register_and_verify(const std::vector<Vec3>& source,
                                       const std::vector<std::vector<float>>& feats_source,
                                       const std::vector<Vec3>& target,
                                       const std::vector<std::vector<float>>& feats_target,
                                       double tau_cd_rel, const RansacConfig& cfg) {
    auto candidates = feature_correspondences(feats_source, feats_target);
    auto result = robust_rigid_fit(source, target, candidates, cfg);
    if (!result.success) return result;
    std::vector<Vec3> moved(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) moved[i] = result.transform.apply(source[i]);
    result.chamfer_after = chamfer_distance(moved, target);
    result.success = result.chamfer_after <= tau_cd_rel * bbox_diagonal(source);
    return result;
}

}  // namespace ltgs
