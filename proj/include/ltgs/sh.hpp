#pragma once

#include "ltgs/types.hpp"

#include <array>

namespace ltgs {

inline constexpr int kShCoeffs = 16;  // degree 3: 1 + 3 + 5 + 7

// Real spherical harmonics basis up to degree 3, l-major with m from -l to +l.
// Signs follow the common splatting convention; see docs/formats.md for the
// exact polynomial of every entry.
std::array<double, kShCoeffs> sh_basis(const Vec3& unit_dir);

// RGB = sum_i c[i] * Y_i(d) + 0.5, clamped to [0, inf).
// coeffs is row-major 16x3.
Vec3 evaluate_sh(const double* coeffs, const Vec3& direction);

// Block-diagonal rotation operator on the 16 real SH coefficients
// (1x1, 3x3, 5x5, 7x7 orthogonal blocks).
struct ShRotation {
    Eigen::Matrix<double, kShCoeffs, kShCoeffs> M;

    // v' such that evaluate_sh(v', d) == evaluate_sh(v, R d).
    Eigen::Matrix<double, kShCoeffs, 1> apply(const Eigen::Matrix<double, kShCoeffs, 1>& v) const {
        return M * v;
    }
    ShRotation inverse() const { return {M.transpose()}; }
};

// Builds the operator M with evaluate_sh(M v, d) == evaluate_sh(v, R d) for
// every direction d. Each degree block is fit by least squares from basis
// evaluations at fixed canonical directions. Throws if R is not a rotation.
ShRotation sh_rotation_from_rotation(const Mat3& R);

}  // namespace ltgs
