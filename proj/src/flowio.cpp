// SPDX-License-Identifier: Apache-2.0
#include "splatflow/flowio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "splatflow/errors.hpp"

namespace splatflow {

namespace {

std::uint32_t get_u32_le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (in.gcount() != 4) {
        throw TruncatedFile("flow stream ended inside a 4-byte word");
    }
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

float get_f32_le(std::istream& in) {
    return std::bit_cast<float>(get_u32_le(in));
}

Eigen::Vector3d hsv_to_rgb(double hue, double sat, double val) {
    // hue in radians; wraps onto [0, 2*pi)
    const double two_pi = 2.0 * std::numbers::pi;
    double h = std::fmod(hue, two_pi);
    if (h < 0.0) {
        h += two_pi;
    }
    const double sector = h * 3.0 / std::numbers::pi; // [0, 6)
    const int i = std::min(5, static_cast<int>(sector));
    const double f = sector - i;
    const double p = val * (1.0 - sat);
    const double q = val * (1.0 - sat * f);
    const double t = val * (1.0 - sat * (1.0 - f));
    switch (i) {
        case 0: return {val, t, p};
        case 1: return {q, val, p};
        case 2: return {p, val, t};
        case 3: return {p, q, val};
        case 4: return {t, p, val};
        default: return {val, p, q};
    }
}

} // namespace

std::size_t write_flo(const FlowField& flow, std::ostream& out) {
    std::vector<char> buf;
    buf.reserve(12 + 8 * flow.pixels.size());
    const auto push_u32 = [&buf](std::uint32_t v) {
        buf.push_back(static_cast<char>(v & 0xFF));
        buf.push_back(static_cast<char>((v >> 8) & 0xFF));
        buf.push_back(static_cast<char>((v >> 16) & 0xFF));
        buf.push_back(static_cast<char>((v >> 24) & 0xFF));
    };
    push_u32(std::bit_cast<std::uint32_t>(kFloMagic));
    push_u32(static_cast<std::uint32_t>(flow.width()));
    push_u32(static_cast<std::uint32_t>(flow.height()));
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            const Eigen::Vector2d& uv = flow.at(x, y);
            push_u32(std::bit_cast<std::uint32_t>(static_cast<float>(uv.x())));
            push_u32(std::bit_cast<std::uint32_t>(static_cast<float>(uv.y())));
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw SinkError("flow stream rejected bytes mid-write");
    }
    return buf.size();
}

void write_flo_file(const FlowField& flow, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw SinkError("cannot open flow file for writing: " + path.string());
    }
    write_flo(flow, out);
    out.flush();
    if (!out) {
        throw SinkError("flow file write failed: " + path.string());
    }
}

FlowField read_flo(std::istream& in) {
    const float magic = get_f32_le(in);
    if (magic != kFloMagic) {
        throw BadMagic("flow file does not start with the expected tag");
    }
    const std::int32_t w = static_cast<std::int32_t>(get_u32_le(in));
    const std::int32_t h = static_cast<std::int32_t>(get_u32_le(in));
    if (w <= 0 || h <= 0 || static_cast<std::int64_t>(w) * static_cast<std::int64_t>(h) > kFloMaxPixels) {
        throw DimensionOverflow("flow dimensions out of range");
    }
    FlowField flow(w, h);
    const std::size_t payload = 8 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<unsigned char> buf(payload);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(payload));
    if (static_cast<std::size_t>(in.gcount()) != payload) {
        throw TruncatedFile("flow stream ended inside the payload");
    }
    const auto word = [&buf](std::size_t i) {
        return static_cast<std::uint32_t>(buf[i]) | (static_cast<std::uint32_t>(buf[i + 1]) << 8) |
               (static_cast<std::uint32_t>(buf[i + 2]) << 16) |
               (static_cast<std::uint32_t>(buf[i + 3]) << 24);
    };
    std::size_t off = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float u = std::bit_cast<float>(word(off));
            const float v = std::bit_cast<float>(word(off + 4));
            flow.at(x, y) = Eigen::Vector2d(u, v);
            off += 8;
        }
    }
    return flow;
}

FlowField read_flo_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileUnreadable("cannot open flow file: " + path.string());
    }
    FlowField flow = read_flo(in);
    in.peek();
    if (!in.eof()) {
        throw BadMagic("flow file has trailing bytes past the declared payload: " + path.string());
    }
    return flow;
}

Grid<Eigen::Vector3d> flow_to_color(const FlowField& flow, std::optional<double> max_magnitude) {
    double maxm;
    if (max_magnitude.has_value()) {
        maxm = *max_magnitude;
    } else {
        std::vector<double> mags;
        mags.reserve(flow.pixels.size());
        for (const Eigen::Vector2d& uv : flow.pixels.data()) {
            mags.push_back(std::sqrt(uv.x() * uv.x() + uv.y() * uv.y()));
        }
        if (mags.empty()) {
            maxm = 0.0;
        } else {
            std::sort(mags.begin(), mags.end());
            const std::size_t rank =
                static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(mags.size())));
            maxm = mags[std::min(mags.size() - 1, std::max<std::size_t>(rank, 1) - 1)];
        }
    }

    Grid<Eigen::Vector3d> out(flow.width(), flow.height(), Eigen::Vector3d::Ones());
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            const Eigen::Vector2d& uv = flow.at(x, y);
            const double mag = std::sqrt(uv.x() * uv.x() + uv.y() * uv.y());
            if (mag <= 0.0 || maxm <= 0.0) {
                continue; // stays white
            }
            const double hue = std::atan2(uv.y(), uv.x());
            const double sat = std::min(mag / maxm, 1.0);
            out(x, y) = hsv_to_rgb(hue, sat, 1.0);
        }
    }
    return out;
}

} // namespace splatflow
