// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <filesystem>

#include "splatflow/camera.hpp"
#include "splatflow/rasterizer.hpp"
#include "splatflow/scenegen.hpp"

namespace splatflow {

// Schema tags carried by every structured-text artifact.
inline constexpr const char* kSceneSchema = "splatflow-scene-v1";
inline constexpr const char* kDatasetSchema = "splatflow-dataset-v1";

// Intrinsics serialize as the 6 numbers [f_x, f_y, width, height, z_near,
// z_far]; extrinsics as 9 row-major rotation numbers plus 3 translation
// numbers; gaussians as 14 scalars in the order center xyz, scale xyz,
// rotation wxyz, opacity, color rgb.
nlohmann::json intrinsics_to_json(const CameraIntrinsics& intr);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);

nlohmann::json extrinsics_to_json(const CameraExtrinsics& ext);
CameraExtrinsics extrinsics_from_json(const nlohmann::json& j);

nlohmann::json rig_to_json(const CameraRig& rig);
CameraRig rig_from_json(const nlohmann::json& j);

nlohmann::json gaussian_to_json(const Gaussian3D& g);
Gaussian3D gaussian_from_json(const nlohmann::json& j);

// Frame-pair scene files are strict: a wrong schema tag or an unknown key is
// rejected (ConfigInvalid), malformed JSON surfaces as nlohmann's
// parse_error.
nlohmann::json scene_to_json(const FramePairScene& scene);
FramePairScene scene_from_json(const nlohmann::json& j);
void write_scene_file(const FramePairScene& scene, const std::filesystem::path& path);
FramePairScene read_scene_file(const std::filesystem::path& path);

// Generation config files: all keys optional (defaults apply), unknown keys
// rejected.
nlohmann::json scene_config_to_json(const SceneConfig& config);
SceneConfig scene_config_from_json(const nlohmann::json& j, const SceneConfig& defaults = {});
SceneConfig read_scene_config_file(const std::filesystem::path& path, const SceneConfig& defaults = {});

nlohmann::json manifest_to_json(const SequenceManifest& manifest);
SequenceManifest manifest_from_json(const nlohmann::json& j);

// Canonical bytes for structured text: two-space indent, sorted keys,
// trailing newline. Every JSON artifact goes through this one door so
// identical values give identical files.
std::string json_to_canonical_text(const nlohmann::json& j);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

} // namespace splatflow
