// SPDX-License-Identifier: Apache-2.0
#include "splatflow/camera.hpp"

#include <Eigen/LU>

#include <cmath>

namespace splatflow {

void CameraIntrinsics::validate() const {
    if (!(f_x > 0.0) || !(f_y > 0.0)) {
        throw ConfigInvalid("focal lengths must be positive");
    }
    if (width < 1 || height < 1) {
        throw ConfigInvalid("image dimensions must be at least 1x1");
    }
    if (!(z_near > 0.0) || !(z_far > z_near)) {
        throw ConfigInvalid("depth range must satisfy 0 < z_near < z_far");
    }
}

void CameraExtrinsics::validate() const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
        throw ConfigInvalid("rotation is not orthonormal within 1e-9");
    }
    if (rotation.determinant() < 0.0) {
        throw ConfigInvalid("rotation has determinant -1 (reflection)");
    }
}

Eigen::Vector3d world_to_camera(const Eigen::Vector3d& world, const CameraExtrinsics& extrinsics) {
    return extrinsics.rotation * world + extrinsics.translation;
}

double fov_from_focal(double focal, double extent) {
    return 2.0 * std::atan(extent / (2.0 * focal));
}

FrustumExtents frustum_extents(const CameraIntrinsics& intrinsics) {
    const double half_x = std::tan(0.5 * fov_from_focal(intrinsics.f_x, intrinsics.width));
    const double half_y = std::tan(0.5 * fov_from_focal(intrinsics.f_y, intrinsics.height));
    FrustumExtents e;
    e.right = intrinsics.z_near * half_x;
    e.left = -e.right;
    e.top = intrinsics.z_near * half_y;
    e.bottom = -e.top;
    return e;
}

Eigen::Matrix4d projection_matrix(const CameraIntrinsics& intrinsics) {
    const FrustumExtents e = frustum_extents(intrinsics);
    const double n = intrinsics.z_near;
    const double f = intrinsics.z_far;
    Eigen::Matrix4d p = Eigen::Matrix4d::Zero();
    p(0, 0) = 2.0 * n / (e.right - e.left);
    p(0, 2) = (e.right + e.left) / (e.right - e.left);
    p(1, 1) = 2.0 * n / (e.top - e.bottom);
    p(1, 2) = (e.top + e.bottom) / (e.top - e.bottom);
    p(2, 2) = f / (f - n);
    p(2, 3) = -n * f / (f - n);
    p(3, 2) = 1.0;
    return p;
}

Eigen::Vector2d ndc_to_pixel(const HomogeneousPoint& clip, const CameraIntrinsics& intrinsics) {
    const double w = clip.w();
    if (std::abs(w) < 1e-12) {
        throw DegenerateProjection("homogeneous w below 1e-12");
    }
    const double u = (clip.x() / w + 1.0) * (intrinsics.width - 1) / 2.0;
    const double v = (clip.y() / w + 1.0) * (intrinsics.height - 1) / 2.0;
    return Eigen::Vector2d(u, v);
}

Eigen::Vector2d pixel_to_ndc(const Eigen::Vector2d& pixel, const CameraIntrinsics& intrinsics) {
    const double x = pixel.x() * 2.0 / (intrinsics.width - 1) - 1.0;
    const double y = pixel.y() * 2.0 / (intrinsics.height - 1) - 1.0;
    return Eigen::Vector2d(x, y);
}

ProjectedPoint project_point(const Eigen::Vector3d& world, const CameraRig& rig) {
    const Eigen::Vector3d cam = world_to_camera(world, rig.extrinsics);
    const HomogeneousPoint clip = projection_matrix(rig.intrinsics) * to_homogeneous(cam);
    ProjectedPoint out;
    out.pixel = ndc_to_pixel(clip, rig.intrinsics);
    out.depth = cam.z();
    out.ndc_depth = clip.z() / clip.w();
    out.clipped = !(cam.z() > rig.intrinsics.z_near && cam.z() < rig.intrinsics.z_far);
    return out;
}

double effective_focal_x(const CameraIntrinsics& intrinsics) {
    return intrinsics.f_x * (intrinsics.width - 1) / intrinsics.width;
}

double effective_focal_y(const CameraIntrinsics& intrinsics) {
    return intrinsics.f_y * (intrinsics.height - 1) / intrinsics.height;
}

} // namespace splatflow
