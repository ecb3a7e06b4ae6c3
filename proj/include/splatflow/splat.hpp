// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <span>
#include <vector>

#include "splatflow/camera.hpp"
#include "splatflow/errors.hpp"

namespace splatflow {

// One anisotropic 3D Gaussian primitive.
struct Gaussian3D {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d scale = Eigen::Vector3d::Ones(); // per-axis stddev, > 0
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    double opacity = 1.0; // in [0, 1]
    Eigen::Vector3d color = Eigen::Vector3d::Zero(); // RGB in [0, 1]

    // Throws ConfigInvalid on non-positive scale, non-unit rotation (within
    // 1e-9), or opacity outside [0, 1].
    void validate() const;
};

// Screen-space footprint of a projected Gaussian, plus the per-splat payloads
// the rasterizer composites. cov2d already carries the pixel-space floor, so
// it is strictly positive definite.
struct ProjectedSplat {
    Eigen::Vector2d pixel_center = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();
    double depth = 0.0;
    double opacity = 1.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    Eigen::Vector2d displacement = Eigen::Vector2d::Zero(); // screen flow payload
};

// World-space covariance R * diag(scale^2) * R^T.
Eigen::Matrix3d covariance_from_scale_rotation(const Eigen::Vector3d& scale,
                                               const Eigen::Quaterniond& rotation);

// Pixel-space Jacobian of the projection chain at a camera-space point:
// rows are d(u,v)/d(x,y,z) with the effective focal lengths. Throws
// BehindCamera when z <= 0.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& camera_point,
                                                const CameraIntrinsics& intrinsics);

// First-order (EWA) screen-space covariance J * W * cov * W^T * J^T for a
// world covariance seen from a rig, evaluated at camera-space center. Throws
// BehindCamera when the center has z <= 0. No floor is applied here.
Eigen::Matrix2d project_covariance(const Eigen::Matrix3d& cov_world,
                                   const Eigen::Vector3d& camera_point,
                                   const CameraRig& rig);

// Inverse-covariance coefficients: the falloff exponent at offset (dx, dy)
// from the center is a*dx^2 - 2*b*dx*dy + c*dy^2. Every weight evaluation in
// the project goes through this one expression so different traversal orders
// cannot disagree bitwise.
struct Conic {
    double a = 1.0;
    double b = 0.0;
    double c = 1.0;
};

Conic conic_from_cov(const Eigen::Matrix2d& cov2d);
double conic_quadratic(const Conic& conic, double dx, double dy);

// min(opacity * exp(-q/2), 0.99), never negative.
double weight_from_quadratic(double opacity, double q);

// Largest eigenvalue of a symmetric 2x2 matrix, closed form.
double max_eigenvalue_2x2(const Eigen::Matrix2d& m);

// Opacity-scaled Gaussian falloff at a pixel, clamped to [0, 0.99].
double splat_weight(const ProjectedSplat& splat, const Eigen::Vector2d& pixel);

// Indices of splats ordered by ascending depth; equal depths keep their
// original relative order.
std::vector<std::size_t> depth_sort(std::span<const ProjectedSplat> splats);

// Serialization order of one Gaussian as 14 scalars: center xyz, scale xyz,
// rotation wxyz, opacity, color rgb.
std::array<double, 14> gaussian_to_scalars(const Gaussian3D& g);
Gaussian3D gaussian_from_scalars(const std::array<double, 14>& s);

} // namespace splatflow
