#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltgs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Rigid body motion, applied as p' = R p + T.
struct RigidTransform {
    Mat3 R = Mat3::Identity();
    Vec3 T = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return R * p + T; }

    RigidTransform inverse() const { return {R.transpose(), -(R.transpose() * T)}; }

    // this ∘ other: apply `other` first, then this.
    RigidTransform compose(const RigidTransform& other) const {
        return {R * other.R, R * other.T + T};
    }

    bool is_valid(double tol = 1e-9) const {
        return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
               std::abs(R.determinant() - 1.0) < tol;
    }
};

inline RigidTransform axis_angle_transform(const Vec3& axis_angle, const Vec3& t) {
    double theta = axis_angle.norm();
    Mat3 R = Mat3::Identity();
    if (theta > 0) R = Eigen::AngleAxisd(theta, axis_angle / theta).toRotationMatrix();
    return {R, t};
}

// Pinhole camera. `pose` is world-to-camera: x_cam = R x_world + T.
struct Camera {
    int width = 0, height = 0;
    double fx = 0, fy = 0, cx = 0, cy = 0;
    RigidTransform pose;

    void validate() const {
        if (fx <= 0 || fy <= 0) throw std::invalid_argument("camera: focal lengths must be positive");
        if (cx < 0 || cx >= width || cy < 0 || cy >= height)
            throw std::invalid_argument("camera: principal point out of bounds");
    }

    Vec3 to_camera(const Vec3& p_world) const { return pose.apply(p_world); }

    // Camera center in world coordinates.
    Vec3 center() const { return -(pose.R.transpose() * pose.T); }

    // Projects a camera-space point to pixel coordinates.
    Vec2 project_cam(const Vec3& pc) const {
        return {fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy};
    }

    // Back-projects pixel (u, v) at camera-space depth z to world coordinates.
    Vec3 unproject(double u, double v, double z) const {
        Vec3 pc((u - cx) * z / fx, (v - cy) * z / fy, z);
        return pose.R.transpose() * (pc - pose.T);
    }
};

inline Quat quat_from_matrix(const Mat3& R) {
    Quat q(R);
    q.normalize();
    if (q.w() < 0) q.coeffs() *= -1.0;
    return q;
}

}  // namespace ltgs
