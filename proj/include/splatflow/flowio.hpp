// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "splatflow/flow_field.hpp"
#include "splatflow/grid.hpp"

namespace splatflow {

// Binary flow file layout: float32 magic 202021.25, int32 width, int32
// height, then height rows of width (u, v) float32 pairs. Everything is
// little-endian; a valid file is exactly 12 + 8 * width * height bytes.
inline constexpr float kFloMagic = 202021.25f;
inline constexpr std::int64_t kFloMaxPixels = std::int64_t{1} << 30;

// Serializes a field; returns the byte count written. Throws SinkError when
// the stream refuses bytes.
std::size_t write_flo(const FlowField& flow, std::ostream& out);
void write_flo_file(const FlowField& flow, const std::filesystem::path& path);

// Parses a field. Throws TruncatedFile when the stream ends early, BadMagic
// on a wrong tag, DimensionOverflow when the header declares non-positive
// dimensions or more than kFloMaxPixels pixels (checked before allocating).
FlowField read_flo(std::istream& in);
// Additionally rejects files with trailing bytes past the declared payload.
FlowField read_flo_file(const std::filesystem::path& path);

// Direction-as-hue rendering: hue is the flow angle, saturation the
// magnitude over max_magnitude (clamped to 1), value constant 1, so zero
// flow is exactly white. Without max_magnitude the 99th-percentile magnitude
// (nearest-rank) is used; fields with no positive magnitude render white.
Grid<Eigen::Vector3d> flow_to_color(const FlowField& flow,
                                    std::optional<double> max_magnitude = std::nullopt);

} // namespace splatflow
