// SPDX-License-Identifier: Apache-2.0
#include "splatflow/splat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace splatflow {

void Gaussian3D::validate() const {
    if (!(scale.x() > 0.0 && scale.y() > 0.0 && scale.z() > 0.0)) {
        throw ConfigInvalid("gaussian scale must be positive on every axis");
    }
    if (std::abs(rotation.norm() - 1.0) > 1e-9) {
        throw ConfigInvalid("gaussian rotation quaternion is not unit length");
    }
    if (!(opacity >= 0.0 && opacity <= 1.0)) {
        throw ConfigInvalid("gaussian opacity outside [0, 1]");
    }
}

Eigen::Matrix3d covariance_from_scale_rotation(const Eigen::Vector3d& scale,
                                               const Eigen::Quaterniond& rotation) {
    const Eigen::Matrix3d r = rotation.toRotationMatrix();
    return r * scale.cwiseProduct(scale).asDiagonal() * r.transpose();
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& camera_point,
                                                const CameraIntrinsics& intrinsics) {
    const double z = camera_point.z();
    if (!(z > 0.0)) {
        throw BehindCamera("covariance projection needs camera-space z > 0");
    }
    const double kx = effective_focal_x(intrinsics);
    const double ky = effective_focal_y(intrinsics);
    Eigen::Matrix<double, 2, 3> j;
    j << kx / z, 0.0, -kx * camera_point.x() / (z * z),
         0.0, ky / z, -ky * camera_point.y() / (z * z);
    return j;
}

Eigen::Matrix2d project_covariance(const Eigen::Matrix3d& cov_world,
                                   const Eigen::Vector3d& camera_point,
                                   const CameraRig& rig) {
    const Eigen::Matrix<double, 2, 3> j = projection_jacobian(camera_point, rig.intrinsics);
    const Eigen::Matrix<double, 2, 3> jw = j * rig.extrinsics.rotation;
    return jw * cov_world * jw.transpose();
}

Conic conic_from_cov(const Eigen::Matrix2d& cov2d) {
    const double a = cov2d(0, 0);
    const double b = cov2d(0, 1);
    const double c = cov2d(1, 1);
    const double det = a * c - b * b;
    return Conic{c / det, b / det, a / det};
}

double conic_quadratic(const Conic& conic, double dx, double dy) {
    return conic.a * dx * dx - 2.0 * conic.b * dx * dy + conic.c * dy * dy;
}

double weight_from_quadratic(double opacity, double q) {
    const double w = opacity * std::exp(-0.5 * q);
    return std::clamp(w, 0.0, 0.99);
}

double max_eigenvalue_2x2(const Eigen::Matrix2d& m) {
    const double mean = 0.5 * (m(0, 0) + m(1, 1));
    const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
    return mean + std::sqrt(half_diff * half_diff + m(0, 1) * m(1, 0));
}

double splat_weight(const ProjectedSplat& splat, const Eigen::Vector2d& pixel) {
    const Conic conic = conic_from_cov(splat.cov2d);
    const double dx = pixel.x() - splat.pixel_center.x();
    const double dy = pixel.y() - splat.pixel_center.y();
    return weight_from_quadratic(splat.opacity, conic_quadratic(conic, dx, dy));
}

std::vector<std::size_t> depth_sort(std::span<const ProjectedSplat> splats) {
    std::vector<std::size_t> order(splats.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
        return splats[lhs].depth < splats[rhs].depth;
    });
    return order;
}

std::array<double, 14> gaussian_to_scalars(const Gaussian3D& g) {
    return {g.center.x(), g.center.y(), g.center.z(),
            g.scale.x(), g.scale.y(), g.scale.z(),
            g.rotation.w(), g.rotation.x(), g.rotation.y(), g.rotation.z(),
            g.opacity,
            g.color.x(), g.color.y(), g.color.z()};
}

Gaussian3D gaussian_from_scalars(const std::array<double, 14>& s) {
    Gaussian3D g;
    g.center = Eigen::Vector3d(s[0], s[1], s[2]);
    g.scale = Eigen::Vector3d(s[3], s[4], s[5]);
    g.rotation = Eigen::Quaterniond(s[6], s[7], s[8], s[9]);
    g.opacity = s[10];
    g.color = Eigen::Vector3d(s[11], s[12], s[13]);
    return g;
}

} // namespace splatflow
