// SPDX-License-Identifier: Apache-2.0
//
// splatflow command line: gen, rasterize, eval, loss, viz.
// Exit codes: 0 success, 2 usage or config error, 3 I/O error,
// 4 data integrity error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "splatflow/errors.hpp"
#include "splatflow/flowio.hpp"
#include "splatflow/image.hpp"
#include "splatflow/metrics.hpp"
#include "splatflow/parallel.hpp"
#include "splatflow/rasterizer.hpp"
#include "splatflow/regloss.hpp"
#include "splatflow/scenegen.hpp"
#include "splatflow/serialize.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitData = 4;

constexpr const char* kConfigEnvVar = "SPLATFLOW_CONFIG";

struct ExitWith {
    int code;
    explicit ExitWith(int c) : code(c) {}
};

splatflow::FlowField crop_flow(const splatflow::FlowField& f, int cw, int ch) {
    const int ox = (f.width() - cw) / 2;
    const int oy = (f.height() - ch) / 2;
    splatflow::FlowField out(cw, ch);
    for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
            out.at(x, y) = f.at(x + ox, y + oy);
        }
    }
    return out;
}

splatflow::ValidMask crop_mask(const splatflow::ValidMask& m, int cw, int ch) {
    const int ox = (m.width() - cw) / 2;
    const int oy = (m.height() - ch) / 2;
    splatflow::ValidMask out(cw, ch);
    for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
            out(x, y) = m(x + ox, y + oy);
        }
    }
    return out;
}

bool parse_dims(const std::string& text, int& w, int& h) {
    const std::size_t sep = text.find('x');
    if (sep == std::string::npos) {
        return false;
    }
    try {
        std::size_t used = 0;
        w = std::stoi(text.substr(0, sep), &used);
        if (used != sep) {
            return false;
        }
        const std::string rest = text.substr(sep + 1);
        h = std::stoi(rest, &used);
        if (used != rest.size()) {
            return false;
        }
    } catch (const std::exception&) {
        return false;
    }
    return w > 0 && h > 0;
}

// For flow_<a>_<b>.flo the paired mask is mask_<a>.png; anything else keeps
// its stem.
std::string mask_name_for(const std::string& flow_stem) {
    if (flow_stem.rfind("flow_", 0) == 0) {
        const std::size_t last = flow_stem.rfind('_');
        if (last != std::string::npos && last > 5) {
            return "mask_" + flow_stem.substr(5, last - 5) + ".png";
        }
    }
    return flow_stem + ".png";
}

std::string format_metric(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string csv_row(const std::string& name, const splatflow::MetricsReport& r) {
    return name + "," + format_metric(r.epe) + "," + format_metric(r.px1) + "," +
           format_metric(r.px3) + "," + format_metric(r.px5) + "," + format_metric(r.f1_all) +
           "," + format_metric(r.wauc);
}

json report_to_json(const splatflow::MetricsReport& r) {
    return json{{"epe", r.epe},       {"px1", r.px1},
                {"px3", r.px3},       {"px5", r.px5},
                {"f1_all", r.f1_all}, {"wauc", r.wauc},
                {"valid_pixel_count", r.valid_pixel_count}};
}

int cmd_gen(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<int>& sequences, const std::optional<int>& gaussians,
            const std::optional<int>& frames, const std::optional<int>& width,
            const std::optional<int>& height, const std::optional<double>& amplitude,
            const std::optional<double>& max_rotation,
            const std::vector<double>& split_ratios, const std::string& out_dir, int threads) {
    splatflow::SceneConfig config;
    std::string effective_config = config_path;
    if (effective_config.empty()) {
        if (const char* env = std::getenv(kConfigEnvVar)) {
            effective_config = env;
        }
    }
    if (!effective_config.empty()) {
        config = splatflow::read_scene_config_file(effective_config, config);
    }
    if (seed) {
        config.seed = *seed;
    }
    if (sequences) {
        config.n_sequences = *sequences;
    }
    if (gaussians) {
        config.n_gaussians = *gaussians;
    }
    if (frames) {
        config.n_frames = *frames;
    }
    if (width) {
        config.width = *width;
    }
    if (height) {
        config.height = *height;
    }
    if (amplitude) {
        config.deformation_amplitude = *amplitude;
    }
    if (max_rotation) {
        config.max_rotation = *max_rotation;
    }
    if (!split_ratios.empty()) {
        if (split_ratios.size() != 3) {
            throw splatflow::ConfigInvalid("--split-ratios needs exactly three values");
        }
        config.split_ratios = {split_ratios[0], split_ratios[1], split_ratios[2]};
    }
    config.validate();

    const splatflow::DatasetResult result =
        splatflow::generate_dataset(config, out_dir, threads);
    for (int k = 0; k < 3; ++k) {
        std::int64_t scenes = 0;
        for (const splatflow::SequenceManifest& m : result.scenes) {
            scenes += (m.split == splatflow::kSplitNames[static_cast<std::size_t>(k)]) ? 1 : 0;
        }
        std::cout << "split " << splatflow::kSplitNames[static_cast<std::size_t>(k)] << ": "
                  << scenes << " scenes, " << result.split_pair_counts[static_cast<std::size_t>(k)]
                  << " pairs\n";
    }
    std::cout << "wrote " << out_dir << "\n";
    return kExitOk;
}

int cmd_rasterize(const std::string& scene_path, const std::string& out_prefix, int threads,
                  bool strict) {
    const splatflow::FramePairScene scene = splatflow::read_scene_file(scene_path);
    splatflow::RasterizerConfig config;
    config.threads = threads;
    if (strict) {
        config.early_termination = 0.0;
    }
    const splatflow::RenderOutput out = splatflow::rasterize_pair(scene, config);
    splatflow::write_png_rgb8(out.color, out_prefix + "_color.png");
    splatflow::write_flo_file(out.flow, out_prefix + "_flow.flo");
    splatflow::write_mask_png(out.mask, out_prefix + "_mask.png");
    std::cout << "wrote " << out_prefix << "_color.png, " << out_prefix << "_flow.flo, "
              << out_prefix << "_mask.png\n";
    return kExitOk;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& mask_dir,
             const std::string& crop, const std::string& csv_path, const std::string& json_path) {
    int crop_w = 0;
    int crop_h = 0;
    if (!crop.empty() && !parse_dims(crop, crop_w, crop_h)) {
        throw splatflow::ConfigInvalid("--crop expects WxH with positive integers");
    }

    const auto list_flo = [](const fs::path& dir) {
        if (!fs::is_directory(dir)) {
            throw splatflow::FileUnreadable("not a directory: " + dir.string());
        }
        std::vector<std::string> names;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".flo") {
                names.push_back(entry.path().filename().string());
            }
        }
        std::sort(names.begin(), names.end());
        return names;
    };

    const std::vector<std::string> pred_names = list_flo(pred_dir);
    const std::vector<std::string> gt_names = list_flo(gt_dir);
    if (pred_names.empty()) {
        throw splatflow::ConfigInvalid("no .flo files under " + pred_dir);
    }
    if (pred_names != gt_names) {
        throw splatflow::ConfigInvalid("prediction and ground-truth file sets differ by name");
    }

    std::vector<std::string> csv_lines;
    csv_lines.push_back("pair,epe,px1,px3,px5,f1_all,wauc");
    json out_json;
    out_json["pairs"] = json::array();
    splatflow::MetricsAccumulator aggregate;
    std::vector<std::string> skipped;

    for (const std::string& name : pred_names) {
        try {
            splatflow::FlowField pred = splatflow::read_flo_file(fs::path(pred_dir) / name);
            splatflow::FlowField gt = splatflow::read_flo_file(fs::path(gt_dir) / name);
            if (pred.width() != gt.width() || pred.height() != gt.height()) {
                throw splatflow::DimensionMismatch("prediction/ground-truth size mismatch");
            }
            splatflow::ValidMask mask(gt.width(), gt.height(), 1);
            if (!mask_dir.empty()) {
                const std::string stem = fs::path(name).stem().string();
                mask = splatflow::read_mask_png(fs::path(mask_dir) / mask_name_for(stem));
                if (!mask.same_size(gt.pixels)) {
                    throw splatflow::DimensionMismatch("mask size mismatch");
                }
            }
            if (!crop.empty()) {
                if (crop_w > gt.width() || crop_h > gt.height()) {
                    throw splatflow::ConfigInvalid("crop exceeds field size");
                }
                pred = crop_flow(pred, crop_w, crop_h);
                gt = crop_flow(gt, crop_w, crop_h);
                mask = crop_mask(mask, crop_w, crop_h);
            }
            const splatflow::MetricsReport r = splatflow::evaluate(pred, gt, mask);
            aggregate.add(pred, gt, mask);
            csv_lines.push_back(csv_row(name, r));
            json jr = report_to_json(r);
            jr["pair"] = name;
            out_json["pairs"].push_back(jr);
        } catch (const splatflow::ConfigInvalid&) {
            throw; // configuration problems abort the run
        } catch (const splatflow::Error& e) {
            skipped.push_back(name);
            std::cerr << "skipping " << name << ": " << e.what() << "\n";
        }
    }

    if (aggregate.valid_pixel_count() > 0) {
        const splatflow::MetricsReport agg = aggregate.report();
        csv_lines.push_back(csv_row("aggregate", agg));
        out_json["aggregate"] = report_to_json(agg);
    }
    for (const std::string& line : csv_lines) {
        std::cout << line << "\n";
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path, std::ios::binary);
        for (const std::string& line : csv_lines) {
            out << line << "\n";
        }
        if (!out) {
            throw splatflow::SinkError("cannot write csv: " + csv_path);
        }
    }
    if (!json_path.empty()) {
        splatflow::write_json_file(out_json, json_path);
    }
    if (!skipped.empty()) {
        std::cerr << skipped.size() << " pair(s) skipped\n";
        throw ExitWith(kExitData);
    }
    return kExitOk;
}

int cmd_loss(const std::vector<std::string>& flow_paths, const std::string& image_path,
             const std::string& mask_path, const std::string& which,
             const std::optional<double>& gamma, const std::optional<double>& lambda_n,
             int stride, bool literal_mask, const std::string& out_path) {
    splatflow::StageSequence seq;
    for (const std::string& p : flow_paths) {
        seq.stages.push_back(splatflow::read_flo_file(p));
    }
    if (gamma) {
        seq.gamma = *gamma;
    }
    if (lambda_n) {
        seq.lambda_n = *lambda_n;
    }
    seq.validate();

    const int w = seq.stages.front().width();
    const int h = seq.stages.front().height();
    splatflow::ValidMask mask(w, h, 1);
    if (!mask_path.empty()) {
        mask = splatflow::read_mask_png(mask_path);
    }

    const bool want_all = which == "all";
    json out;
    if (want_all || which == "tvr") {
        out["tvr"] = splatflow::tvr(seq);
    }
    if (want_all || which == "fdr") {
        out["fdr"] = splatflow::fdr(seq, mask, stride);
    }
    if (want_all || which == "migar" || which == "igvar") {
        if (image_path.empty()) {
            throw splatflow::ConfigInvalid("migar/igvar need --image");
        }
        const auto image = splatflow::read_png_rgb(image_path);
        if (want_all || which == "migar") {
            out["migar"] = splatflow::migar(seq, image, mask,
                                            splatflow::BaseMode::MeanGradient, literal_mask);
        }
        if (want_all || which == "igvar") {
            out["igvar"] = splatflow::migar(seq, image, mask,
                                            splatflow::BaseMode::GradientVariance, literal_mask);
        }
    }
    const std::string text = splatflow::json_to_canonical_text(out);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out_path, std::ios::binary);
        f << text;
        if (!f) {
            throw splatflow::SinkError("cannot write: " + out_path);
        }
    }
    return kExitOk;
}

int cmd_viz(const std::string& flow_path, const std::string& out_path,
            const std::optional<double>& max_magnitude) {
    const splatflow::FlowField flow = splatflow::read_flo_file(flow_path);
    std::optional<double> maxm;
    if (max_magnitude) {
        maxm = *max_magnitude;
    }
    splatflow::write_png_rgb8(splatflow::flow_to_color(flow, maxm), out_path);
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"splatflow: gaussian-splat flow dataset tools"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset tree");
    std::string gen_config;
    std::optional<std::uint64_t> gen_seed;
    std::optional<int> gen_sequences, gen_gaussians, gen_frames, gen_width, gen_height;
    std::optional<double> gen_amplitude, gen_max_rotation;
    std::vector<double> gen_ratios;
    std::string gen_out;
    int gen_threads = 0;
    gen->add_option("--config", gen_config,
                    std::string("JSON config file (default from $") + kConfigEnvVar + ")");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--sequences", gen_sequences, "number of sequences");
    gen->add_option("--gaussians", gen_gaussians, "splats per scene");
    gen->add_option("--frames", gen_frames, "frames per sequence (>= 2)");
    gen->add_option("--width", gen_width, "image width");
    gen->add_option("--height", gen_height, "image height");
    gen->add_option("--amplitude", gen_amplitude, "deformation amplitude, world units");
    gen->add_option("--max-rotation", gen_max_rotation, "max rotation, radians");
    gen->add_option("--split-ratios", gen_ratios, "train val test fractions summing to 1")
        ->expected(3);
    gen->add_option("--out", gen_out, "output root directory")->required();
    gen->add_option("--threads", gen_threads, "worker threads (0 = auto, 1 = serial)");

    // rasterize
    auto* ras = app.add_subcommand("rasterize", "render one frame-pair scene file");
    std::string ras_scene, ras_prefix;
    int ras_threads = 0;
    bool ras_strict = false;
    ras->add_option("--scene", ras_scene, "frame-pair scene JSON")->required();
    ras->add_option("--out-prefix", ras_prefix, "output path prefix")->required();
    ras->add_option("--threads", ras_threads, "worker threads (0 = auto, 1 = serial)");
    ras->add_flag("--strict", ras_strict, "disable early termination");

    // eval
    auto* ev = app.add_subcommand("eval", "score predicted flow against ground truth");
    std::string ev_pred, ev_gt, ev_mask, ev_crop, ev_csv, ev_json;
    ev->add_option("--pred", ev_pred, "directory of predicted .flo files")->required();
    ev->add_option("--gt", ev_gt, "directory of ground-truth .flo files")->required();
    ev->add_option("--mask", ev_mask, "directory of validity mask PNGs");
    ev->add_option("--crop", ev_crop, "center crop WxH before scoring");
    ev->add_option("--csv", ev_csv, "also write the CSV table here");
    ev->add_option("--json", ev_json, "write the structured report here");

    // loss
    auto* ls = app.add_subcommand("loss", "evaluate regularization losses on flow stages");
    std::vector<std::string> ls_flows;
    std::string ls_image, ls_mask, ls_which = "all", ls_out;
    std::optional<double> ls_gamma, ls_lambda;
    int ls_stride = 1;
    bool ls_literal = false;
    ls->add_option("--flow", ls_flows, "stage .flo files, earliest first")
        ->required()
        ->take_all();
    ls->add_option("--image", ls_image, "first-frame PNG (migar/igvar)");
    ls->add_option("--mask", ls_mask, "validity mask PNG (default all valid)");
    ls->add_option("--loss", ls_which, "tvr, fdr, migar, igvar, or all")
        ->check(CLI::IsMember({"tvr", "fdr", "migar", "igvar", "all"}));
    ls->add_option("--gamma", ls_gamma, "stage decay in (0,1)");
    ls->add_option("--lambda", ls_lambda, "regularization weight");
    ls->add_option("--stride", ls_stride, "fdr difference stride");
    ls->add_flag("--literal-mask", ls_literal, "literal total-mask mode");
    ls->add_option("--out", ls_out, "write JSON here instead of stdout");

    // viz
    auto* vz = app.add_subcommand("viz", "render a .flo file to a color PNG");
    std::string vz_flow, vz_out;
    std::optional<double> vz_max;
    vz->add_option("--flow", vz_flow, "input .flo file")->required();
    vz->add_option("--out", vz_out, "output PNG path")->required();
    vz->add_option("--max-magnitude", vz_max, "saturation normalization magnitude");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen(gen_config, gen_seed, gen_sequences, gen_gaussians, gen_frames,
                           gen_width, gen_height, gen_amplitude, gen_max_rotation, gen_ratios,
                           gen_out, gen_threads);
        }
        if (ras->parsed()) {
            return cmd_rasterize(ras_scene, ras_prefix, ras_threads, ras_strict);
        }
        if (ev->parsed()) {
            return cmd_eval(ev_pred, ev_gt, ev_mask, ev_crop, ev_csv, ev_json);
        }
        if (ls->parsed()) {
            return cmd_loss(ls_flows, ls_image, ls_mask, ls_which, ls_gamma, ls_lambda, ls_stride,
                            ls_literal, ls_out);
        }
        if (vz->parsed()) {
            return cmd_viz(vz_flow, vz_out, vz_max);
        }
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const ExitWith& e) {
        return e.code;
    } catch (const splatflow::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const splatflow::FileUnreadable& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const splatflow::SinkError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const splatflow::OutputUnwritable& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const splatflow::Error& e) {
        // BadMagic, TruncatedFile, DimensionOverflow, DimensionMismatch,
        // EmptyMask and friends: the input was readable but wrong.
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
