// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "splatflow/errors.hpp"

namespace splatflow {

// Dense row-major 2D buffer. (x, y) indexes column x of row y; the element
// order in data() is y * width + x, matching every on-disk raster format in
// this project.
template <typename T>
class Grid {
public:
    Grid() = default;

    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height) {
        if (width < 0 || height < 0) {
            throw DimensionMismatch("grid dimensions must be non-negative");
        }
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int x, int y) {
        return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }
    const T& operator()(int x, int y) const {
        return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    template <typename U>
    bool same_size(const Grid<U>& other) const {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Grid& other) const {
        return width_ == other.width_ && height_ == other.height_ && data_ == other.data_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

// Validity mask: nonzero marks a pixel that participates in reductions.
using ValidMask = Grid<std::uint8_t>;

inline std::int64_t count_valid(const ValidMask& mask) {
    std::int64_t n = 0;
    for (std::uint8_t v : mask.data()) {
        n += (v != 0) ? 1 : 0;
    }
    return n;
}

} // namespace splatflow
