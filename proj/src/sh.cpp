#include "ltgs/sh.hpp"

namespace ltgs {

namespace {
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                           0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};
}  // namespace

std::array<double, kShCoeffs> sh_basis(const Vec3& d) {
    const double x = d.x(), y = d.y(), z = d.z();
    const double xx = x * x, yy = y * y, zz = z * z;
    const double xy = x * y, yz = y * z, xz = x * z;
    return {
        kC0,
        -kC1 * y,
        kC1 * z,
        -kC1 * x,
        kC2[0] * xy,
        kC2[1] * yz,
        kC2[2] * (2.0 * zz - xx - yy),
        kC2[3] * xz,
        kC2[4] * (xx - yy),
        kC3[0] * y * (3.0 * xx - yy),
        kC3[1] * xy * z,
        kC3[2] * y * (4.0 * zz - xx - yy),
        kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
        kC3[4] * x * (4.0 * zz - xx - yy),
        kC3[5] * z * (xx - yy),
        kC3[6] * x * (xx - 3.0 * yy),
    };
}

Vec3 evaluate_sh(const double* coeffs, const Vec3& direction) {
    double n = direction.norm();
    if (n < 1e-12) throw std::invalid_argument("evaluate_sh: zero direction");
    auto Y = sh_basis(direction / n);
    Vec3 rgb = Vec3::Constant(0.5);
    for (int i = 0; i < kShCoeffs; ++i) {
        rgb.x() += coeffs[3 * i + 0] * Y[i];
        rgb.y() += coeffs[3 * i + 1] * Y[i];
        rgb.z() += coeffs[3 * i + 2] * Y[i];
    }
    return rgb.cwiseMax(0.0);
}

ShRotation sh_rotation_from_rotation(const Mat3& R) {
    if (!RigidTransform{R, Vec3::Zero()}.is_valid(1e-8))
        throw std::invalid_argument("sh_rotation_from_rotation: R is not orthonormal");

    // Fixed, well-spread canonical directions (deterministic Fibonacci
    // sphere; 64 points keep every degree block comfortably conditioned).
    std::vector<Vec3> dirs;
    constexpr int kDirs = 64;
    constexpr double kGolden = 2.399963229728653;  // pi * (3 - sqrt(5))
    for (int i = 0; i < kDirs; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / kDirs;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = kGolden * i;
        dirs.push_back(Vec3(r * std::cos(phi), r * std::sin(phi), z));
    }

    const int K = int(dirs.size());
    ShRotation out;
    out.M.setZero();
    int offset = 0;
    for (int l = 0; l <= 3; ++l) {
        const int w = 2 * l + 1;
        Eigen::MatrixXd A(K, w), B(K, w);
        for (int i = 0; i < K; ++i) {
            auto Yd = sh_basis(dirs[i]);
            auto Yr = sh_basis(R * dirs[i]);
            for (int j = 0; j < w; ++j) {
                A(i, j) = Yd[offset + j];
                B(i, j) = Yr[offset + j];
            }
        }
        // Want M_l with Y_l(R d) = M_l Y_l(d); the spec operator uses its
        // transpose so that coefficients transported by M keep evaluations
        // equal: sum_i v_i Y_i(R d) = (M_l^T v)^T Y(d).
        Eigen::MatrixXd Ml_T = A.colPivHouseholderQr().solve(B);  // A * Ml_T = B
        out.M.block(offset, offset, w, w) = Ml_T;
        offset += w;
    }
    return out;
}

}  // namespace ltgs
