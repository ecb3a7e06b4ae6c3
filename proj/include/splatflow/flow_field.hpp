// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include "splatflow/grid.hpp"

namespace splatflow {

// Dense 2D optical flow field. Component u is the horizontal pixel
// displacement, v the vertical one, both stored per pixel in row-major order.
struct FlowField {
    Grid<Eigen::Vector2d> pixels;

    FlowField() = default;
    FlowField(int width, int height, Eigen::Vector2d fill = Eigen::Vector2d::Zero())
        : pixels(width, height, fill) {}

    int width() const { return pixels.width(); }
    int height() const { return pixels.height(); }

    Eigen::Vector2d& at(int x, int y) { return pixels(x, y); }
    const Eigen::Vector2d& at(int x, int y) const { return pixels(x, y); }

    // Extracts one scalar channel: 0 = u, 1 = v.
    Grid<double> channel(int c) const {
        Grid<double> out(width(), height());
        for (int y = 0; y < height(); ++y) {
            for (int x = 0; x < width(); ++x) {
                out(x, y) = pixels(x, y)[c];
            }
        }
        return out;
    }
};

} // namespace splatflow
