// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <filesystem>

#include "splatflow/grid.hpp"

namespace splatflow {

// 8-bit PNG I/O. Color grids hold RGB in [0, 1]; writing clamps and rounds,
// reading divides by 255. Mask images are single-channel with 0 = invalid
// and 255 = valid. All writes use fixed encoder settings and carry no
// ancillary chunks, so identical pixels give identical files.

void write_png_rgb8(const Grid<Eigen::Vector3d>& image, const std::filesystem::path& path);
Grid<Eigen::Vector3d> read_png_rgb(const std::filesystem::path& path);

void write_png_gray8(const Grid<std::uint8_t>& image, const std::filesystem::path& path);
Grid<std::uint8_t> read_png_gray8(const std::filesystem::path& path);

// 0/1 validity mask <-> 0/255 image bytes (threshold at 128 on the way in).
Grid<std::uint8_t> mask_to_bytes(const ValidMask& mask);
ValidMask bytes_to_mask(const Grid<std::uint8_t>& bytes);

void write_mask_png(const ValidMask& mask, const std::filesystem::path& path);
ValidMask read_mask_png(const std::filesystem::path& path);

} // namespace splatflow
