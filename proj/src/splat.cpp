#include "ltgs/splat.hpp"

namespace ltgs {

SplatSet transform_splats(const SplatSet& set, const std::vector<std::size_t>& indices,
                          const RigidTransform& P) {
    if (!P.is_valid(1e-8)) throw std::invalid_argument("transform_splats: invalid transform");
    for (auto i : indices)
        if (i >= set.size()) throw std::invalid_argument("transform_splats: index out of range");

    SplatSet out = set;
    const bool pure_translation = (P.R == Mat3::Identity());
    const Quat qP = quat_from_matrix(P.R);
    // The splat's color in direction d after rotation must equal the original
    // color in direction R^T d; that is the inverse of the forward SH operator.
    const ShRotation sh_rot =
        pure_translation ? ShRotation{decltype(ShRotation::M)::Identity()}
                         : sh_rotation_from_rotation(P.R).inverse();
    for (auto i : indices) {
        out.positions[i] = P.apply(set.positions[i]);
        if (pure_translation) continue;
        out.rotations[i] = (qP * set.rotations[i]).normalized();
        for (int ch = 0; ch < 3; ++ch) {
            Eigen::Matrix<double, kShCoeffs, 1> v;
            for (int j = 0; j < kShCoeffs; ++j) v[j] = set.sh_coeffs[i][3 * j + ch];
            v = sh_rot.apply(v);
            for (int j = 0; j < kShCoeffs; ++j) out.sh_coeffs[i][3 * j + ch] = v[j];
        }
    }
    return out;
}

SplatSet transform_splats(const SplatSet& set, const RigidTransform& P) {
    std::vector<std::size_t> all(set.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return transform_splats(set, all, P);
}

std::array<double, 48> dc_only_coeffs(const Vec3& rgb) {
    std::array<double, 48> c{};
    constexpr double kC0 = 0.28209479177387814;
    for (int ch = 0; ch < 3; ++ch) c[ch] = (rgb[ch] - 0.5) / kC0;
    return c;
}

}  // namespace ltgs
