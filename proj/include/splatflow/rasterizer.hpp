// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "splatflow/camera.hpp"
#include "splatflow/flow_field.hpp"
#include "splatflow/grid.hpp"
#include "splatflow/splat.hpp"

namespace splatflow {

struct RasterizerConfig {
    int tile_size = 16;
    // Transmittance cutoff: a pixel stops accumulating once the running
    // transmittance drops below this. 0 disables the cutoff entirely.
    double early_termination = 1e-4;
    // Added to both diagonal entries of every projected covariance (pixel^2)
    // so footprints never collapse below roughly half a pixel.
    double covariance_floor = 0.3;
    // Contribution radius in standard deviations of the major axis; outside
    // it a splat contributes exactly zero.
    double sigma_cutoff = 3.0;
    double mask_threshold = 0.5;
    int threads = 0; // 0 = hardware concurrency, 1 = serial

    void validate() const;
};

// Everything one rasterization pass produces, all at image resolution.
// alpha(x, y) is 1 minus the final transmittance; mask is alpha thresholded.
struct RenderOutput {
    Grid<Eigen::Vector3d> color;
    FlowField flow;
    Grid<double> alpha;
    ValidMask mask;
};

// A pair of frames sharing one set of splats. positions_t / positions_t1
// give each splat center at frame t and t+1; either may be empty, which
// means "use the rest-pose centers". Flow is anchored at frame t: it is
// rendered from camera_t with per-splat screen displacements toward t+1.
struct FramePairScene {
    std::vector<Gaussian3D> splats;
    std::vector<Eigen::Vector3d> positions_t;
    std::vector<Eigen::Vector3d> positions_t1;
    CameraRig camera_t;
    CameraRig camera_t1;

    Eigen::Vector3d position_at_t(std::size_t i) const {
        return positions_t.empty() ? splats[i].center : positions_t[i];
    }
    Eigen::Vector3d position_at_t1(std::size_t i) const {
        return positions_t1.empty() ? splats[i].center : positions_t1[i];
    }

    // Throws ConfigInvalid on bad rigs, bad splats, or position arrays whose
    // length is neither zero nor the splat count.
    void validate() const;
};

// Screen displacement of one splat center between the two frames, i.e. its
// frame-t1 pixel minus its frame-t pixel. Throws Clipped when the center
// falls outside either camera's depth range.
Eigen::Vector2d per_splat_displacement(const FramePairScene& scene, std::size_t index);

// Projects every splat into frame t, attaching color and flow payloads.
// Splats clipped at either frame are dropped: they have no defined
// correspondence, so they contribute to neither image. Output order matches
// input order (it is not depth sorted).
std::vector<ProjectedSplat> project_scene(const FramePairScene& scene,
                                          const RasterizerConfig& config = {});

// Front-to-back composites over splats already sorted by ascending depth.
// These are the reference per-pixel semantics; the tiled path reproduces
// them exactly.
Eigen::Vector3d composite_color(std::span<const ProjectedSplat> sorted,
                                const Eigen::Vector2d& pixel,
                                const RasterizerConfig& config = {});
Eigen::Vector2d composite_flow(std::span<const ProjectedSplat> sorted,
                               const Eigen::Vector2d& pixel,
                               const RasterizerConfig& config = {});

// Tiled rasterization of pre-projected splats (any order; sorted internally).
// Deterministic for every thread count.
RenderOutput rasterize_splats(std::span<const ProjectedSplat> splats,
                              const CameraIntrinsics& intrinsics,
                              const RasterizerConfig& config = {});

// validate + project_scene + rasterize_splats.
RenderOutput rasterize_pair(const FramePairScene& scene, const RasterizerConfig& config = {});

} // namespace splatflow
