// SPDX-License-Identifier: Apache-2.0
#include "splatflow/scenegen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <system_error>

#include "splatflow/flowio.hpp"
#include "splatflow/image.hpp"
#include "splatflow/parallel.hpp"
#include "splatflow/rng.hpp"
#include "splatflow/serialize.hpp"

namespace splatflow {

namespace {

// rng-v1 stream tags
constexpr std::uint64_t kStreamScene = 0x53434E45;  // per-scene seed derivation
constexpr std::uint64_t kStreamSplats = 0x53504C54; // per-splat geometry
constexpr std::uint64_t kStreamStyle = 0x5354594C;  // per-scene color/opacity fields
constexpr std::uint64_t kStreamDeform = 0x4445464D; // per-scene deformation params
constexpr std::uint64_t kStreamCamera = 0x43414D52; // per-frame rig perturbations

const Eigen::Vector3d kHeadSemiAxes(0.85, 1.1, 0.95);

// Thomsen's approximation of the ellipsoid surface area; only used to give
// splats a footprint proportional to their surface share.
double ellipsoid_area(const Eigen::Vector3d& semi) {
    const double p = 1.6075;
    const double ap = std::pow(semi.x(), p);
    const double bp = std::pow(semi.y(), p);
    const double cp = std::pow(semi.z(), p);
    return 4.0 * std::numbers::pi * std::pow((ap * bp + ap * cp + bp * cp) / 3.0, 1.0 / p);
}

struct SinusoidField {
    Eigen::Vector3d direction[3];
    double frequency[3];
    double phase[3];
    Eigen::Vector3d motion[3];
    double rate[3];
};

SinusoidField draw_deformation(const SceneConfig& config) {
    std::mt19937_64 rng = make_rng({config.seed, kStreamDeform});
    SinusoidField f;
    for (int k = 0; k < 3; ++k) {
        f.direction[k] = random_unit_vector(rng);
        f.motion[k] = random_unit_vector(rng);
        f.frequency[k] = uniform_range(rng, 0.8, 1.8);
        f.phase[k] = uniform_range(rng, 0.0, 2.0 * std::numbers::pi);
        f.rate[k] = uniform_range(rng, 0.25, 0.9);
    }
    return f;
}

void write_positions_f32(const std::vector<Eigen::Vector3d>& positions,
                         const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw SinkError("cannot open positions file for writing: " + path.string());
    }
    std::vector<char> buf;
    buf.reserve(positions.size() * 12);
    for (const Eigen::Vector3d& p : positions) {
        for (int c = 0; c < 3; ++c) {
            const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(p[c]));
            buf.push_back(static_cast<char>(bits & 0xFF));
            buf.push_back(static_cast<char>((bits >> 8) & 0xFF));
            buf.push_back(static_cast<char>((bits >> 16) & 0xFF));
            buf.push_back(static_cast<char>((bits >> 24) & 0xFF));
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.flush();
    if (!out) {
        throw SinkError("positions write failed: " + path.string());
    }
}

// Whole sequences go to one split each: Hamilton apportionment of the
// sequence counts against the pair-count targets, ties broken toward the
// split currently holding fewer pairs, then lower index.
std::vector<int> assign_splits(const SceneConfig& config) {
    const int s = config.n_sequences;
    int counts[3] = {0, 0, 0};
    double remainder[3];
    int assigned = 0;
    for (int k = 0; k < 3; ++k) {
        const double exact = config.split_ratios[k] * s;
        counts[k] = static_cast<int>(std::floor(exact));
        remainder[k] = exact - counts[k];
        assigned += counts[k];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (remainder[a] != remainder[b]) {
            return remainder[a] > remainder[b];
        }
        if (counts[a] != counts[b]) {
            return counts[a] < counts[b];
        }
        return a < b;
    });
    for (int i = 0; assigned < s; ++i) {
        counts[order[static_cast<std::size_t>(i % 3)]] += 1;
        ++assigned;
    }
    std::vector<int> split_of(static_cast<std::size_t>(s));
    int seq = 0;
    for (int k = 0; k < 3; ++k) {
        for (int c = 0; c < counts[k]; ++c) {
            split_of[static_cast<std::size_t>(seq++)] = k;
        }
    }
    return split_of;
}

} // namespace

void SceneConfig::validate() const {
    if (n_sequences < 1) {
        throw ConfigInvalid("n_sequences must be at least 1");
    }
    if (n_gaussians < 1) {
        throw ConfigInvalid("n_gaussians must be at least 1");
    }
    if (n_frames < 2) {
        throw ConfigInvalid("n_frames must be at least 2");
    }
    if (width < 1 || height < 1) {
        throw ConfigInvalid("resolution must be at least 1x1");
    }
    if (!(deformation_amplitude >= 0.0)) {
        throw ConfigInvalid("deformation_amplitude must be non-negative");
    }
    if (!(max_rotation >= 0.0 && max_rotation < std::numbers::pi)) {
        throw ConfigInvalid("max_rotation must lie in [0, pi)");
    }
    double sum = 0.0;
    for (double r : split_ratios) {
        if (!(r >= 0.0)) {
            throw ConfigInvalid("split ratios must be non-negative");
        }
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigInvalid("split ratios must sum to 1 within 1e-9");
    }
}

CameraRig canonical_rig(const SceneConfig& config) {
    CameraRig rig;
    rig.intrinsics.f_x = static_cast<double>(std::max(config.width, config.height));
    rig.intrinsics.f_y = rig.intrinsics.f_x;
    rig.intrinsics.width = config.width;
    rig.intrinsics.height = config.height;
    rig.intrinsics.z_near = 0.1;
    rig.intrinsics.z_far = 100.0;
    rig.extrinsics.rotation = Eigen::Matrix3d::Identity();
    rig.extrinsics.translation = Eigen::Vector3d(0.0, 0.0, 4.0);
    return rig;
}

std::vector<Gaussian3D> make_head_proxy(const SceneConfig& config) {
    config.validate();

    std::mt19937_64 style = make_rng({config.seed, kStreamStyle});
    Eigen::Vector3d color_dir[3];
    double color_freq[3];
    double color_phase[3];
    for (int j = 0; j < 3; ++j) {
        color_dir[j] = random_unit_vector(style);
        color_freq[j] = uniform_range(style, 0.5, 2.5);
        color_phase[j] = uniform_range(style, 0.0, 2.0 * std::numbers::pi);
    }
    const Eigen::Vector3d opacity_dir = random_unit_vector(style);
    const double opacity_freq = uniform_range(style, 2.0, 4.0);
    const double opacity_phase = uniform_range(style, 0.0, 2.0 * std::numbers::pi);

    const int n = config.n_gaussians;
    const double sigma_base = 0.8 * std::sqrt(ellipsoid_area(kHeadSemiAxes) / n);
    const Eigen::Vector3d inv_sq = kHeadSemiAxes.cwiseProduct(kHeadSemiAxes).cwiseInverse();

    std::vector<Gaussian3D> splats(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::mt19937_64 rng = make_rng({config.seed, kStreamSplats, static_cast<std::uint64_t>(i)});
        const Eigen::Vector3d dir = random_unit_vector(rng);
        const double spin = uniform_range(rng, 0.0, 2.0 * std::numbers::pi);
        const double t1 = uniform_range(rng, 0.8, 1.3);
        const double t2 = uniform_range(rng, 0.8, 1.3);
        const double tn = uniform_range(rng, 0.8, 1.2);

        Gaussian3D g;
        g.center = kHeadSemiAxes.cwiseProduct(dir);
        // tangential disks: two wide axes on the surface, one flat axis
        // along the outward normal
        g.scale = Eigen::Vector3d(sigma_base * t1, sigma_base * t2, 0.35 * sigma_base * tn);
        const Eigen::Vector3d normal = g.center.cwiseProduct(inv_sq).normalized();
        const Eigen::Quaterniond align =
            Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), normal);
        g.rotation = (align * Eigen::Quaterniond(Eigen::AngleAxisd(spin, Eigen::Vector3d::UnitZ())))
                         .normalized();
        for (int j = 0; j < 3; ++j) {
            g.color[j] = 0.5 + 0.5 * std::sin(color_freq[j] * color_dir[j].dot(g.center) +
                                              color_phase[j]);
        }
        g.opacity = 0.6 + 0.35 * (0.5 + 0.5 * std::sin(opacity_freq * opacity_dir.dot(g.center) +
                                                       opacity_phase));
        splats[static_cast<std::size_t>(i)] = g;
    }
    return splats;
}

std::vector<Eigen::Vector3d> deform(const std::vector<Gaussian3D>& base, int frame_index,
                                    const SceneConfig& config) {
    const SinusoidField field = draw_deformation(config);
    const double a6 = config.deformation_amplitude / 6.0;
    const double t = static_cast<double>(frame_index);
    std::vector<Eigen::Vector3d> out(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        const Eigen::Vector3d p = base[i].center;
        Eigen::Vector3d disp = Eigen::Vector3d::Zero();
        for (int k = 0; k < 3; ++k) {
            const double theta = field.frequency[k] * field.direction[k].dot(p) + field.phase[k];
            disp += (std::sin(theta + field.rate[k] * t) - std::sin(theta)) * field.motion[k];
        }
        out[i] = p + a6 * disp;
    }
    return out;
}

FramePerturbation sample_frame_perturbation(const SceneConfig& config, int frame_index) {
    FramePerturbation p;
    if (frame_index <= 0 || frame_index >= config.n_frames - 1) {
        return p;
    }
    std::mt19937_64 rng =
        make_rng({config.seed, kStreamCamera, static_cast<std::uint64_t>(frame_index)});
    p.camera = random_rotation(rng, config.max_rotation);
    p.subject = random_rotation(rng, config.max_rotation);
    return p;
}

std::vector<CameraRig> camera_schedule(const SceneConfig& config) {
    config.validate();
    const CameraRig canonical = canonical_rig(config);
    std::vector<CameraRig> rigs(static_cast<std::size_t>(config.n_frames), canonical);
    for (int f = 1; f < config.n_frames - 1; ++f) {
        const FramePerturbation p = sample_frame_perturbation(config, f);
        CameraRig& rig = rigs[static_cast<std::size_t>(f)];
        // camera spins about its own center (left-composed), the subject
        // about the world origin (right-composed)
        rig.extrinsics.rotation = p.camera * canonical.extrinsics.rotation * p.subject;
        rig.extrinsics.translation = p.camera * canonical.extrinsics.translation;
    }
    return rigs;
}

DatasetResult generate_dataset(const SceneConfig& config, const std::filesystem::path& root,
                               int threads) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec || !std::filesystem::is_directory(root)) {
        throw OutputUnwritable("cannot create dataset root: " + root.string());
    }
    const std::vector<int> split_of = assign_splits(config);
    for (int k = 0; k < 3; ++k) {
        std::filesystem::create_directories(root / kSplitNames[static_cast<std::size_t>(k)], ec);
        if (ec) {
            throw OutputUnwritable("cannot create split directory under " + root.string());
        }
    }

    DatasetResult result;
    result.scenes.resize(static_cast<std::size_t>(config.n_sequences));

    RasterizerConfig rcfg;
    rcfg.threads = 1; // parallelism lives at sequence granularity

    parallel_for(config.n_sequences, threads, [&](std::int64_t s) {
        const int split = split_of[static_cast<std::size_t>(s)];
        const SceneConfig scfg = config.with_seed(
            derive_seed({config.seed, kStreamScene, static_cast<std::uint64_t>(s)}));
        const std::vector<Gaussian3D> base = make_head_proxy(scfg);
        const std::vector<CameraRig> rigs = camera_schedule(scfg);

        SequenceManifest manifest;
        manifest.scene_id = "scene_" + std::to_string(s);
        manifest.split = kSplitNames[static_cast<std::size_t>(split)];
        manifest.intrinsics = rigs.front().intrinsics;

        const std::filesystem::path dir = root / manifest.split / manifest.scene_id;
        std::error_code dir_ec;
        std::filesystem::create_directories(dir, dir_ec);
        if (dir_ec) {
            throw OutputUnwritable("cannot create scene directory: " + dir.string());
        }

        std::vector<std::vector<Eigen::Vector3d>> positions(
            static_cast<std::size_t>(config.n_frames));
        for (int f = 0; f < config.n_frames; ++f) {
            positions[static_cast<std::size_t>(f)] = deform(base, f, scfg);
        }

        for (int f = 0; f < config.n_frames; ++f) {
            FrameRecord rec;
            rec.index = f;
            rec.extrinsics = rigs[static_cast<std::size_t>(f)].extrinsics;
            rec.image_ref = "frame_" + std::to_string(f) + ".png";
            rec.positions_ref = "positions_" + std::to_string(f) + ".f32";
            write_positions_f32(positions[static_cast<std::size_t>(f)], dir / rec.positions_ref);
            manifest.frames.push_back(rec);
        }

        for (int f = 0; f < config.n_frames; ++f) {
            const bool last = f == config.n_frames - 1;
            FramePairScene scene;
            scene.splats = base;
            scene.positions_t = positions[static_cast<std::size_t>(f)];
            scene.positions_t1 = positions[static_cast<std::size_t>(last ? f : f + 1)];
            scene.camera_t = rigs[static_cast<std::size_t>(f)];
            scene.camera_t1 = rigs[static_cast<std::size_t>(last ? f : f + 1)];
            const RenderOutput out = rasterize_pair(scene, rcfg);
            write_png_rgb8(out.color, dir / manifest.frames[static_cast<std::size_t>(f)].image_ref);
            if (!last) {
                PairRecord pair;
                pair.from = f;
                pair.to = f + 1;
                pair.flow_ref = "flow_" + std::to_string(f) + "_" + std::to_string(f + 1) + ".flo";
                pair.mask_ref = "mask_" + std::to_string(f) + ".png";
                write_flo_file(out.flow, dir / pair.flow_ref);
                write_mask_png(out.mask, dir / pair.mask_ref);
                manifest.pairs.push_back(pair);
            }
        }

        nlohmann::json cameras;
        cameras["schema"] = kSceneSchema;
        cameras["intrinsics"] = intrinsics_to_json(manifest.intrinsics);
        nlohmann::json frames = nlohmann::json::array();
        for (const FrameRecord& rec : manifest.frames) {
            nlohmann::json jf;
            jf["index"] = rec.index;
            jf["extrinsics"] = extrinsics_to_json(rec.extrinsics);
            frames.push_back(jf);
        }
        cameras["frames"] = frames;
        write_json_file(cameras, dir / "cameras.json");
        write_json_file(manifest_to_json(manifest), dir / "manifest.json");

        result.scenes[static_cast<std::size_t>(s)] = std::move(manifest);
    });

    nlohmann::json summary;
    summary["schema"] = kDatasetSchema;
    summary["config"] = scene_config_to_json(config);
    nlohmann::json scenes = nlohmann::json::array();
    for (const SequenceManifest& m : result.scenes) {
        for (int k = 0; k < 3; ++k) {
            if (m.split == kSplitNames[static_cast<std::size_t>(k)]) {
                result.split_pair_counts[static_cast<std::size_t>(k)] +=
                    static_cast<std::int64_t>(m.pairs.size());
            }
        }
        scenes.push_back(nlohmann::json{
            {"name", m.scene_id}, {"split", m.split}, {"pairs", m.pairs.size()}});
    }
    summary["scenes"] = scenes;
    summary["split_pairs"] = nlohmann::json{{"train", result.split_pair_counts[0]},
                                            {"val", result.split_pair_counts[1]},
                                            {"test", result.split_pair_counts[2]}};
    write_json_file(summary, root / "dataset.json");
    return result;
}

} // namespace splatflow
