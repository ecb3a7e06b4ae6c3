// SPDX-License-Identifier: Apache-2.0
#include "splatflow/serialize.hpp"

#include <fstream>
#include <set>
#include <string>

#include "splatflow/errors.hpp"

namespace splatflow {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
    if (!j.is_object()) {
        throw ConfigInvalid(std::string(what) + ": expected a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw ConfigInvalid(std::string(what) + ": unknown key '" + key + "'");
        }
    }
}

std::vector<double> number_array(const json& j, std::size_t n, const char* what) {
    if (!j.is_array() || j.size() != n) {
        throw ConfigInvalid(std::string(what) + ": expected an array of " + std::to_string(n) +
                            " numbers");
    }
    std::vector<double> out;
    out.reserve(n);
    for (const auto& v : j) {
        if (!v.is_number()) {
            throw ConfigInvalid(std::string(what) + ": expected numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace

json intrinsics_to_json(const CameraIntrinsics& intr) {
    return json::array({intr.f_x, intr.f_y, intr.width, intr.height, intr.z_near, intr.z_far});
}

CameraIntrinsics intrinsics_from_json(const json& j) {
    const std::vector<double> v = number_array(j, 6, "intrinsics");
    CameraIntrinsics intr;
    intr.f_x = v[0];
    intr.f_y = v[1];
    intr.width = static_cast<int>(v[2]);
    intr.height = static_cast<int>(v[3]);
    intr.z_near = v[4];
    intr.z_far = v[5];
    intr.validate();
    return intr;
}

json extrinsics_to_json(const CameraExtrinsics& ext) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            rot.push_back(ext.rotation(r, c));
        }
    }
    return json{{"rotation", rot},
                {"translation", json::array({ext.translation.x(), ext.translation.y(),
                                             ext.translation.z()})}};
}

CameraExtrinsics extrinsics_from_json(const json& j) {
    require_keys(j, {"rotation", "translation"}, "extrinsics");
    const std::vector<double> rot = number_array(j.at("rotation"), 9, "extrinsics.rotation");
    const std::vector<double> t = number_array(j.at("translation"), 3, "extrinsics.translation");
    CameraExtrinsics ext;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            ext.rotation(r, c) = rot[static_cast<std::size_t>(r) * 3 + static_cast<std::size_t>(c)];
        }
    }
    ext.translation = Eigen::Vector3d(t[0], t[1], t[2]);
    ext.validate();
    return ext;
}

json rig_to_json(const CameraRig& rig) {
    json j = extrinsics_to_json(rig.extrinsics);
    j["intrinsics"] = intrinsics_to_json(rig.intrinsics);
    return j;
}

CameraRig rig_from_json(const json& j) {
    require_keys(j, {"intrinsics", "rotation", "translation"}, "camera");
    CameraRig rig;
    rig.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    json ext = j;
    ext.erase("intrinsics");
    rig.extrinsics = extrinsics_from_json(ext);
    return rig;
}

json gaussian_to_json(const Gaussian3D& g) {
    const std::array<double, 14> s = gaussian_to_scalars(g);
    return json(s);
}

Gaussian3D gaussian_from_json(const json& j) {
    const std::vector<double> v = number_array(j, 14, "gaussian");
    std::array<double, 14> s;
    std::copy(v.begin(), v.end(), s.begin());
    Gaussian3D g = gaussian_from_scalars(s);
    g.validate();
    return g;
}

json scene_to_json(const FramePairScene& scene) {
    json j;
    j["schema"] = kSceneSchema;
    j["camera_t"] = rig_to_json(scene.camera_t);
    j["camera_t1"] = rig_to_json(scene.camera_t1);
    json splats = json::array();
    for (const Gaussian3D& g : scene.splats) {
        splats.push_back(gaussian_to_json(g));
    }
    j["splats"] = splats;
    const auto positions = [](const std::vector<Eigen::Vector3d>& ps) {
        json arr = json::array();
        for (const Eigen::Vector3d& p : ps) {
            arr.push_back(json::array({p.x(), p.y(), p.z()}));
        }
        return arr;
    };
    if (!scene.positions_t.empty()) {
        j["positions_t"] = positions(scene.positions_t);
    }
    if (!scene.positions_t1.empty()) {
        j["positions_t1"] = positions(scene.positions_t1);
    }
    return j;
}

FramePairScene scene_from_json(const json& j) {
    require_keys(j, {"schema", "camera_t", "camera_t1", "splats", "positions_t", "positions_t1"},
                 "scene");
    if (!j.contains("schema") || !j.at("schema").is_string() ||
        j.at("schema").get<std::string>() != kSceneSchema) {
        throw ConfigInvalid(std::string("scene: schema must be '") + kSceneSchema + "'");
    }
    FramePairScene scene;
    scene.camera_t = rig_from_json(j.at("camera_t"));
    scene.camera_t1 = rig_from_json(j.at("camera_t1"));
    if (!j.contains("splats") || !j.at("splats").is_array()) {
        throw ConfigInvalid("scene: 'splats' must be an array");
    }
    for (const auto& g : j.at("splats")) {
        scene.splats.push_back(gaussian_from_json(g));
    }
    const auto positions = [](const json& arr, const char* what) {
        std::vector<Eigen::Vector3d> out;
        out.reserve(arr.size());
        for (const auto& p : arr) {
            const std::vector<double> v = number_array(p, 3, what);
            out.emplace_back(v[0], v[1], v[2]);
        }
        return out;
    };
    if (j.contains("positions_t")) {
        scene.positions_t = positions(j.at("positions_t"), "scene.positions_t");
    }
    if (j.contains("positions_t1")) {
        scene.positions_t1 = positions(j.at("positions_t1"), "scene.positions_t1");
    }
    scene.validate();
    return scene;
}

void write_scene_file(const FramePairScene& scene, const std::filesystem::path& path) {
    write_json_file(scene_to_json(scene), path);
}

FramePairScene read_scene_file(const std::filesystem::path& path) {
    return scene_from_json(read_json_file(path));
}

json scene_config_to_json(const SceneConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["n_sequences"] = config.n_sequences;
    j["n_gaussians"] = config.n_gaussians;
    j["n_frames"] = config.n_frames;
    j["width"] = config.width;
    j["height"] = config.height;
    j["deformation_amplitude"] = config.deformation_amplitude;
    j["max_rotation"] = config.max_rotation;
    j["split_ratios"] = json::array(
        {config.split_ratios[0], config.split_ratios[1], config.split_ratios[2]});
    return j;
}

SceneConfig scene_config_from_json(const json& j, const SceneConfig& defaults) {
    require_keys(j,
                 {"seed", "n_sequences", "n_gaussians", "n_frames", "width", "height",
                  "deformation_amplitude", "max_rotation", "split_ratios"},
                 "config");
    SceneConfig c = defaults;
    if (j.contains("seed")) {
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("n_sequences")) {
        c.n_sequences = j.at("n_sequences").get<int>();
    }
    if (j.contains("n_gaussians")) {
        c.n_gaussians = j.at("n_gaussians").get<int>();
    }
    if (j.contains("n_frames")) {
        c.n_frames = j.at("n_frames").get<int>();
    }
    if (j.contains("width")) {
        c.width = j.at("width").get<int>();
    }
    if (j.contains("height")) {
        c.height = j.at("height").get<int>();
    }
    if (j.contains("deformation_amplitude")) {
        c.deformation_amplitude = j.at("deformation_amplitude").get<double>();
    }
    if (j.contains("max_rotation")) {
        c.max_rotation = j.at("max_rotation").get<double>();
    }
    if (j.contains("split_ratios")) {
        const std::vector<double> r = number_array(j.at("split_ratios"), 3, "config.split_ratios");
        c.split_ratios = {r[0], r[1], r[2]};
    }
    return c;
}

SceneConfig read_scene_config_file(const std::filesystem::path& path, const SceneConfig& defaults) {
    return scene_config_from_json(read_json_file(path), defaults);
}

json manifest_to_json(const SequenceManifest& manifest) {
    json j;
    j["schema"] = kSceneSchema;
    j["scene"] = manifest.scene_id;
    j["split"] = manifest.split;
    j["intrinsics"] = intrinsics_to_json(manifest.intrinsics);
    json frames = json::array();
    for (const FrameRecord& f : manifest.frames) {
        json rec = extrinsics_to_json(f.extrinsics);
        rec["index"] = f.index;
        rec["image"] = f.image_ref;
        rec["positions"] = f.positions_ref;
        frames.push_back(rec);
    }
    j["frames"] = frames;
    json pairs = json::array();
    for (const PairRecord& p : manifest.pairs) {
        pairs.push_back(json{{"from", p.from}, {"to", p.to}, {"flow", p.flow_ref}, {"mask", p.mask_ref}});
    }
    j["pairs"] = pairs;
    return j;
}

SequenceManifest manifest_from_json(const json& j) {
    require_keys(j, {"schema", "scene", "split", "intrinsics", "frames", "pairs"}, "manifest");
    if (j.at("schema").get<std::string>() != kSceneSchema) {
        throw ConfigInvalid("manifest: unexpected schema tag");
    }
    SequenceManifest m;
    m.scene_id = j.at("scene").get<std::string>();
    m.split = j.at("split").get<std::string>();
    m.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    for (const auto& rec : j.at("frames")) {
        require_keys(rec, {"index", "image", "positions", "rotation", "translation"},
                     "manifest.frame");
        FrameRecord f;
        f.index = rec.at("index").get<int>();
        f.image_ref = rec.at("image").get<std::string>();
        f.positions_ref = rec.at("positions").get<std::string>();
        json ext = rec;
        ext.erase("index");
        ext.erase("image");
        ext.erase("positions");
        f.extrinsics = extrinsics_from_json(ext);
        m.frames.push_back(f);
    }
    for (const auto& rec : j.at("pairs")) {
        require_keys(rec, {"from", "to", "flow", "mask"}, "manifest.pair");
        PairRecord p;
        p.from = rec.at("from").get<int>();
        p.to = rec.at("to").get<int>();
        p.flow_ref = rec.at("flow").get<std::string>();
        p.mask_ref = rec.at("mask").get<std::string>();
        m.pairs.push_back(p);
    }
    return m;
}

std::string json_to_canonical_text(const json& j) {
    return j.dump(2) + "\n";
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw SinkError("cannot open for writing: " + path.string());
    }
    out << json_to_canonical_text(j);
    out.flush();
    if (!out) {
        throw SinkError("write failed: " + path.string());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileUnreadable("cannot open: " + path.string());
    }
    return json::parse(in);
}

} // namespace splatflow
