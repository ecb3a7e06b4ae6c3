// SPDX-License-Identifier: Apache-2.0
#include "splatflow/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>

#include "splatflow/parallel.hpp"

namespace splatflow {

namespace {

// Squared contribution radius shared by the tiled and per-pixel paths; the
// cutoff predicate everywhere is (dx^2 + dy^2 > r2 -> contributes nothing).
double cutoff_radius_squared(const Eigen::Matrix2d& cov2d, double sigma_cutoff) {
    const double lmax = max_eigenvalue_2x2(cov2d);
    const double r = sigma_cutoff * std::sqrt(std::max(lmax, 0.0));
    return r * r;
}

std::optional<ProjectedSplat> project_one(const FramePairScene& scene, std::size_t i,
                                          const RasterizerConfig& config) {
    const Eigen::Vector3d pos_t = scene.position_at_t(i);
    const Eigen::Vector3d pos_t1 = scene.position_at_t1(i);
    ProjectedPoint at_t;
    ProjectedPoint at_t1;
    try {
        at_t = project_point(pos_t, scene.camera_t);
        at_t1 = project_point(pos_t1, scene.camera_t1);
    } catch (const DegenerateProjection&) {
        return std::nullopt;
    }
    if (at_t.clipped || at_t1.clipped) {
        return std::nullopt;
    }

    const Gaussian3D& g = scene.splats[i];
    const Eigen::Vector3d cam_t = world_to_camera(pos_t, scene.camera_t.extrinsics);
    const Eigen::Matrix3d cov_world = covariance_from_scale_rotation(g.scale, g.rotation);
    Eigen::Matrix2d cov2d = project_covariance(cov_world, cam_t, scene.camera_t);
    cov2d(0, 0) += config.covariance_floor;
    cov2d(1, 1) += config.covariance_floor;

    ProjectedSplat out;
    out.pixel_center = at_t.pixel;
    out.cov2d = cov2d;
    out.depth = at_t.depth;
    out.opacity = g.opacity;
    out.color = g.color;
    out.displacement = at_t1.pixel - at_t.pixel;
    return out;
}

// Per-splat state laid out once in composition order.
struct FlatSplat {
    double cx = 0.0;
    double cy = 0.0;
    Conic conic;
    double r2 = 0.0;
    double radius = 0.0;
    double opacity = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    Eigen::Vector2d disp = Eigen::Vector2d::Zero();
};

} // namespace

void RasterizerConfig::validate() const {
    if (tile_size < 1) {
        throw ConfigInvalid("tile_size must be at least 1");
    }
    if (!(early_termination >= 0.0 && early_termination < 1.0)) {
        throw ConfigInvalid("early_termination must lie in [0, 1)");
    }
    if (!(covariance_floor >= 0.0)) {
        throw ConfigInvalid("covariance_floor must be non-negative");
    }
    if (!(sigma_cutoff > 0.0)) {
        throw ConfigInvalid("sigma_cutoff must be positive");
    }
    if (!(mask_threshold >= 0.0 && mask_threshold <= 1.0)) {
        throw ConfigInvalid("mask_threshold must lie in [0, 1]");
    }
    if (threads < 0) {
        throw ConfigInvalid("threads must be non-negative");
    }
}

void FramePairScene::validate() const {
    camera_t.validate();
    camera_t1.validate();
    if (!positions_t.empty() && positions_t.size() != splats.size()) {
        throw ConfigInvalid("positions_t length does not match splat count");
    }
    if (!positions_t1.empty() && positions_t1.size() != splats.size()) {
        throw ConfigInvalid("positions_t1 length does not match splat count");
    }
    for (const Gaussian3D& g : splats) {
        g.validate();
    }
}

Eigen::Vector2d per_splat_displacement(const FramePairScene& scene, std::size_t index) {
    const ProjectedPoint at_t = project_point(scene.position_at_t(index), scene.camera_t);
    const ProjectedPoint at_t1 = project_point(scene.position_at_t1(index), scene.camera_t1);
    if (at_t.clipped || at_t1.clipped) {
        throw Clipped("splat center outside a camera depth range");
    }
    return at_t1.pixel - at_t.pixel;
}

std::vector<ProjectedSplat> project_scene(const FramePairScene& scene,
                                          const RasterizerConfig& config) {
    std::vector<ProjectedSplat> out;
    out.reserve(scene.splats.size());
    for (std::size_t i = 0; i < scene.splats.size(); ++i) {
        if (auto p = project_one(scene, i, config)) {
            out.push_back(*p);
        }
    }
    return out;
}

Eigen::Vector3d composite_color(std::span<const ProjectedSplat> sorted,
                                const Eigen::Vector2d& pixel,
                                const RasterizerConfig& config) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    double transmittance = 1.0;
    for (const ProjectedSplat& s : sorted) {
        const double dx = pixel.x() - s.pixel_center.x();
        const double dy = pixel.y() - s.pixel_center.y();
        if (dx * dx + dy * dy > cutoff_radius_squared(s.cov2d, config.sigma_cutoff)) {
            continue;
        }
        const double q = conic_quadratic(conic_from_cov(s.cov2d), dx, dy);
        const double w = weight_from_quadratic(s.opacity, q);
        acc += (transmittance * w) * s.color;
        transmittance *= 1.0 - w;
        if (config.early_termination > 0.0 && transmittance < config.early_termination) {
            break;
        }
    }
    return acc;
}

Eigen::Vector2d composite_flow(std::span<const ProjectedSplat> sorted,
                               const Eigen::Vector2d& pixel,
                               const RasterizerConfig& config) {
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    double transmittance = 1.0;
    for (const ProjectedSplat& s : sorted) {
        const double dx = pixel.x() - s.pixel_center.x();
        const double dy = pixel.y() - s.pixel_center.y();
        if (dx * dx + dy * dy > cutoff_radius_squared(s.cov2d, config.sigma_cutoff)) {
            continue;
        }
        const double q = conic_quadratic(conic_from_cov(s.cov2d), dx, dy);
        const double w = weight_from_quadratic(s.opacity, q);
        acc += (transmittance * w) * s.displacement;
        transmittance *= 1.0 - w;
        if (config.early_termination > 0.0 && transmittance < config.early_termination) {
            break;
        }
    }
    return acc;
}

RenderOutput rasterize_splats(std::span<const ProjectedSplat> splats,
                              const CameraIntrinsics& intrinsics,
                              const RasterizerConfig& config) {
    config.validate();
    intrinsics.validate();
    const int w = intrinsics.width;
    const int h = intrinsics.height;

    RenderOutput out;
    out.color = Grid<Eigen::Vector3d>(w, h, Eigen::Vector3d::Zero());
    out.flow = FlowField(w, h);
    out.alpha = Grid<double>(w, h, 0.0);
    out.mask = ValidMask(w, h, 0);

    // Composition order: ascending depth, ties by input order. Splats with a
    // non-finite or non-positive-definite footprint contribute nothing and
    // are dropped up front, which also keeps the sort comparator total.
    std::vector<std::size_t> order;
    order.reserve(splats.size());
    for (std::size_t i = 0; i < splats.size(); ++i) {
        const ProjectedSplat& s = splats[i];
        const double det = s.cov2d(0, 0) * s.cov2d(1, 1) - s.cov2d(0, 1) * s.cov2d(1, 0);
        const bool finite = std::isfinite(s.depth) && std::isfinite(s.pixel_center.x()) &&
                            std::isfinite(s.pixel_center.y()) && std::isfinite(det);
        if (finite && det > 0.0) {
            order.push_back(i);
        }
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
        return splats[lhs].depth < splats[rhs].depth;
    });

    std::vector<FlatSplat> flats;
    flats.reserve(order.size());
    for (std::size_t idx : order) {
        const ProjectedSplat& s = splats[idx];
        FlatSplat f;
        f.cx = s.pixel_center.x();
        f.cy = s.pixel_center.y();
        f.conic = conic_from_cov(s.cov2d);
        f.r2 = cutoff_radius_squared(s.cov2d, config.sigma_cutoff);
        f.radius = std::sqrt(f.r2);
        f.opacity = s.opacity;
        f.color = s.color;
        f.disp = s.displacement;
        flats.push_back(f);
    }

    const int ts = config.tile_size;
    const int tiles_x = (w + ts - 1) / ts;
    const int tiles_y = (h + ts - 1) / ts;
    std::vector<std::vector<std::int32_t>> bins(
        static_cast<std::size_t>(tiles_x) * static_cast<std::size_t>(tiles_y));

    // Bin by a bounding box one pixel wider than the cutoff disc, so the box
    // provably covers every pixel the disc predicate can accept.
    for (std::size_t fi = 0; fi < flats.size(); ++fi) {
        const FlatSplat& f = flats[fi];
        const int x0 = std::max(0, static_cast<int>(std::ceil(f.cx - f.radius)) - 1);
        const int x1 = std::min(w - 1, static_cast<int>(std::floor(f.cx + f.radius)) + 1);
        const int y0 = std::max(0, static_cast<int>(std::ceil(f.cy - f.radius)) - 1);
        const int y1 = std::min(h - 1, static_cast<int>(std::floor(f.cy + f.radius)) + 1);
        if (x0 > x1 || y0 > y1) {
            continue;
        }
        for (int ty = y0 / ts; ty <= y1 / ts; ++ty) {
            for (int tx = x0 / ts; tx <= x1 / ts; ++tx) {
                bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(
                    static_cast<std::int32_t>(fi));
            }
        }
    }

    const double early = config.early_termination;
    // Tiles own disjoint pixel ranges, so parallel execution cannot race and
    // the result is identical for every thread count.
    parallel_for(static_cast<std::int64_t>(bins.size()), config.threads, [&](std::int64_t t) {
        const int tx = static_cast<int>(t % tiles_x);
        const int ty = static_cast<int>(t / tiles_x);
        const int x_end = std::min(w, (tx + 1) * ts);
        const int y_end = std::min(h, (ty + 1) * ts);
        const std::vector<std::int32_t>& bin = bins[static_cast<std::size_t>(t)];
        for (int y = ty * ts; y < y_end; ++y) {
            for (int x = tx * ts; x < x_end; ++x) {
                double transmittance = 1.0;
                Eigen::Vector3d color = Eigen::Vector3d::Zero();
                Eigen::Vector2d flow = Eigen::Vector2d::Zero();
                for (std::int32_t fi : bin) {
                    const FlatSplat& f = flats[static_cast<std::size_t>(fi)];
                    const double dx = x - f.cx;
                    const double dy = y - f.cy;
                    if (dx * dx + dy * dy > f.r2) {
                        continue;
                    }
                    const double q = conic_quadratic(f.conic, dx, dy);
                    const double weight = weight_from_quadratic(f.opacity, q);
                    color += (transmittance * weight) * f.color;
                    flow += (transmittance * weight) * f.disp;
                    transmittance *= 1.0 - weight;
                    if (early > 0.0 && transmittance < early) {
                        break;
                    }
                }
                out.color(x, y) = color;
                out.flow.at(x, y) = flow;
                const double alpha = 1.0 - transmittance;
                out.alpha(x, y) = alpha;
                out.mask(x, y) = alpha >= config.mask_threshold ? 1 : 0;
            }
        }
    });

    return out;
}

RenderOutput rasterize_pair(const FramePairScene& scene, const RasterizerConfig& config) {
    scene.validate();
    const std::vector<ProjectedSplat> projected = project_scene(scene, config);
    return rasterize_splats(projected, scene.camera_t.intrinsics, config);
}

} // namespace splatflow
