// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include "splatflow/errors.hpp"

namespace splatflow {

using HomogeneousPoint = Eigen::Vector4d;

inline HomogeneousPoint to_homogeneous(const Eigen::Vector3d& p) {
    return HomogeneousPoint(p.x(), p.y(), p.z(), 1.0);
}

// Pinhole intrinsics. Focal lengths are in pixel units; the principal point
// is implied at the image center ((width-1)/2, (height-1)/2). The camera
// looks down +Z and (z_near, z_far) bounds the visible depth range.
struct CameraIntrinsics {
    double f_x = 1.0;
    double f_y = 1.0;
    int width = 1;
    int height = 1;
    double z_near = 0.1;
    double z_far = 100.0;

    // Throws ConfigInvalid unless f_x, f_y > 0, width, height >= 1 and
    // 0 < z_near < z_far.
    void validate() const;
};

// World-to-camera rigid transform: X_cam = rotation * X_world + translation.
struct CameraExtrinsics {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    // Throws ConfigInvalid unless rotation is orthonormal within 1e-9 and has
    // determinant +1 (right-handed, no reflection).
    void validate() const;
};

struct CameraRig {
    CameraIntrinsics intrinsics;
    CameraExtrinsics extrinsics;

    void validate() const {
        intrinsics.validate();
        extrinsics.validate();
    }
};

struct FrustumExtents {
    double left = 0.0;
    double right = 0.0;
    double bottom = 0.0;
    double top = 0.0;
};

struct ProjectedPoint {
    Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
    double depth = 0.0;     // camera-space Z
    double ndc_depth = 0.0; // 0 at z_near, 1 at z_far
    bool clipped = false;   // depth outside (z_near, z_far)
};

Eigen::Vector3d world_to_camera(const Eigen::Vector3d& world, const CameraExtrinsics& extrinsics);

// Full field of view (radians) of an image extent seen through a focal
// length, both in the same units: 2 * atan(extent / (2 * focal)).
double fov_from_focal(double focal, double extent);

// Symmetric frustum evaluated on the near plane.
FrustumExtents frustum_extents(const CameraIntrinsics& intrinsics);

// Perspective projection onto clip space. Maps camera-space depth z_near to
// ndc depth 0 and z_far to 1; the last row copies camera Z into w.
Eigen::Matrix4d projection_matrix(const CameraIntrinsics& intrinsics);

// Perspective divide plus viewport mapping: ndc -1 lands on pixel 0 and
// ndc +1 on pixel width-1 (resp. height-1). Throws DegenerateProjection when
// |w| < 1e-12.
Eigen::Vector2d ndc_to_pixel(const HomogeneousPoint& clip, const CameraIntrinsics& intrinsics);

// Inverse of the viewport mapping of ndc_to_pixel.
Eigen::Vector2d pixel_to_ndc(const Eigen::Vector2d& pixel, const CameraIntrinsics& intrinsics);

// World point -> pixel through the whole chain. Sets clipped when the
// camera-space depth falls outside (z_near, z_far); pixel and depths are
// still filled whenever the divide is well defined.
ProjectedPoint project_point(const Eigen::Vector3d& world, const CameraRig& rig);

// Horizontal/vertical focal lengths rescaled by (extent-1)/extent. The
// viewport maps the frustum onto width-1 (height-1) pixel steps, so these,
// not f_x/f_y, are the straight-line pixel-per-tangent factors of the chain:
// u = kx * x/z + (width-1)/2.
double effective_focal_x(const CameraIntrinsics& intrinsics);
double effective_focal_y(const CameraIntrinsics& intrinsics);

inline double principal_x(const CameraIntrinsics& intrinsics) {
    return (intrinsics.width - 1) / 2.0;
}
inline double principal_y(const CameraIntrinsics& intrinsics) {
    return (intrinsics.height - 1) / 2.0;
}

} // namespace splatflow
