// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "splatflow/camera.hpp"
#include "splatflow/rasterizer.hpp"
#include "splatflow/splat.hpp"

namespace splatflow {

// Knobs for one generated dataset. The defaults are the desk-scale protocol:
// 6 sequences of 21 frames at 512x512 with 20k splats, split by the
// published 6791:1212:3158 pair proportions.
struct SceneConfig {
    std::uint64_t seed = 1;
    int n_sequences = 6;
    int n_gaussians = 20000;
    int n_frames = 21;
    int width = 512;
    int height = 512;
    double deformation_amplitude = 0.05; // world units
    double max_rotation = 0.15;          // radians, camera and subject axes
    std::array<double, 3> split_ratios = {6791.0 / 11161.0, 1212.0 / 11161.0, 3158.0 / 11161.0};

    // Throws ConfigInvalid unless n_sequences, n_gaussians >= 1,
    // n_frames >= 2, resolution >= 1x1, amplitude >= 0, max_rotation in
    // [0, pi), ratios non-negative and summing to 1 within 1e-9.
    void validate() const;

    SceneConfig with_seed(std::uint64_t s) const {
        SceneConfig c = *this;
        c.seed = s;
        return c;
    }
};

// Per-scene output record. Path references are relative to the scene
// directory; after generate_dataset returns, every referenced file exists.
struct FrameRecord {
    int index = 0;
    CameraExtrinsics extrinsics;
    std::string image_ref;
    std::string positions_ref;
};

struct PairRecord {
    int from = 0;
    int to = 0;
    std::string flow_ref;
    std::string mask_ref;
};

struct SequenceManifest {
    std::string scene_id;
    std::string split;
    CameraIntrinsics intrinsics;
    std::vector<FrameRecord> frames;
    std::vector<PairRecord> pairs;
};

struct DatasetResult {
    std::array<std::int64_t, 3> split_pair_counts = {0, 0, 0}; // train, val, test
    std::vector<SequenceManifest> scenes;
};

inline constexpr std::array<const char*, 3> kSplitNames = {"train", "val", "test"};

// The front-facing rig every sequence starts and ends with: identity
// orientation, subject origin 4 units down +Z, focal max(width, height).
CameraRig canonical_rig(const SceneConfig& config);

// Seed-deterministic splat cloud on an ellipsoidal head-like surface with
// smoothly varying color and opacity.
std::vector<Gaussian3D> make_head_proxy(const SceneConfig& config);

// Center positions at a frame: base centers plus a sum of three seed-drawn
// low-frequency sinusoids. Zero displacement at frame 0; magnitude never
// exceeds deformation_amplitude; consecutive frames move by at most twice
// the amplitude.
std::vector<Eigen::Vector3d> deform(const std::vector<Gaussian3D>& base, int frame_index,
                                    const SceneConfig& config);

// The two bounded random rotations an intermediate frame composes into the
// canonical rig. Endpoint frames use the identity.
struct FramePerturbation {
    Eigen::Matrix3d camera = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d subject = Eigen::Matrix3d::Identity();
};
FramePerturbation sample_frame_perturbation(const SceneConfig& config, int frame_index);

// Rigs for every frame: endpoints canonical; intermediate frames rotate the
// camera about its own center and the subject about the world origin, both
// by angles in [0, max_rotation].
std::vector<CameraRig> camera_schedule(const SceneConfig& config);

// Writes the full dataset tree under root:
//   <root>/<split>/<scene>/frame_<k>.png      rendered color
//                          positions_<k>.f32  splat centers, xyz float32 LE
//                          flow_<k>_<k+1>.flo forward flow of pair (k, k+1)
//                          mask_<k>.png       alpha >= 0.5 coverage of frame k
//                          cameras.json       intrinsics + per-frame extrinsics
//                          manifest.json      frame/pair records + split
//   <root>/dataset.json                       config echo + split summary
// Sequences are assigned to splits whole (Hamilton apportionment of pair
// counts at sequence granularity; ties favor the split holding fewer pairs)
// and generated independently, in parallel when threads allows. Bytes are a
// pure function of config for every thread count.
DatasetResult generate_dataset(const SceneConfig& config, const std::filesystem::path& root,
                               int threads = 0);

} // namespace splatflow
