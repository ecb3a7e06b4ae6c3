// SPDX-License-Identifier: Apache-2.0
#include "splatflow/regloss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "splatflow/errors.hpp"

namespace splatflow {

namespace {

// Kernels: Gx = [[-1,0,1],[-2,0,2],[-1,0,1]], Gy = Gx^T, applied as
// cross-correlation below.

int clamp_index(int i, int n) {
    return std::clamp(i, 0, n - 1);
}

double stage_weight(double gamma, int n, int i) {
    return std::pow(gamma, n - 1 - i);
}

// Mean over all pixels of |gx| + |gy| from normalized Sobel.
double total_variation(const Grid<double>& channel) {
    const GradientPair g = sobel(channel, true);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.gx.size(); ++i) {
        sum += std::abs(g.gx.data()[i]) + std::abs(g.gy.data()[i]);
    }
    return sum / static_cast<double>(g.gx.size());
}

Grid<double> apply_mask(const Grid<double>& channel, const ValidMask& mask) {
    Grid<double> out = channel;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask.data()[i]) {
            out.data()[i] = 0.0;
        }
    }
    return out;
}

} // namespace

void StageSequence::validate() const {
    if (stages.empty()) {
        throw ConfigInvalid("a stage sequence needs at least one stage");
    }
    for (const FlowField& f : stages) {
        if (!f.pixels.same_size(stages.front().pixels)) {
            throw ConfigInvalid("all stages must share dimensions");
        }
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ConfigInvalid("gamma must lie strictly inside (0, 1)");
    }
    if (!(lambda_n >= 0.0)) {
        throw ConfigInvalid("lambda_n must be non-negative");
    }
}

GradientPair sobel(const Grid<double>& channel, bool normalized) {
    const int w = channel.width();
    const int h = channel.height();
    if (w < 3 || h < 3) {
        throw TooSmall("sobel needs at least a 3x3 grid");
    }
    GradientPair out{Grid<double>(w, h), Grid<double>(w, h)};
    const double scale = normalized ? 1.0 / 8.0 : 1.0;
    // Each tap pairs the +k and -k kernel entries as a difference, so a
    // constant input yields exactly zero instead of accumulated rounding.
    for (int y = 0; y < h; ++y) {
        const int ym = clamp_index(y - 1, h);
        const int yp = clamp_index(y + 1, h);
        for (int x = 0; x < w; ++x) {
            const int xm = clamp_index(x - 1, w);
            const int xp = clamp_index(x + 1, w);
            const double gx = (channel(xp, ym) - channel(xm, ym)) +
                              2.0 * (channel(xp, y) - channel(xm, y)) +
                              (channel(xp, yp) - channel(xm, yp));
            const double gy = (channel(xm, yp) - channel(xm, ym)) +
                              2.0 * (channel(x, yp) - channel(x, ym)) +
                              (channel(xp, yp) - channel(xp, ym));
            out.gx(x, y) = gx * scale;
            out.gy(x, y) = gy * scale;
        }
    }
    return out;
}

GradientPair flow_difference(const Grid<double>& channel, int stride) {
    if (stride < 1) {
        throw ConfigInvalid("stride must be at least 1");
    }
    const int w = channel.width();
    const int h = channel.height();
    if (w <= stride || h <= stride) {
        throw TooSmall("grid must exceed the stride in both dimensions");
    }
    GradientPair out{Grid<double>(w - stride, h), Grid<double>(w, h - stride)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w - stride; ++x) {
            out.gx(x, y) = (channel(x + stride, y) - channel(x, y)) / stride;
        }
    }
    for (int y = 0; y < h - stride; ++y) {
        for (int x = 0; x < w; ++x) {
            out.gy(x, y) = (channel(x, y + stride) - channel(x, y)) / stride;
        }
    }
    return out;
}

double tvr(const StageSequence& seq) {
    seq.validate();
    const int n = static_cast<int>(seq.stages.size());
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = total_variation(seq.stages[i].channel(0)) +
                         total_variation(seq.stages[i].channel(1));
        loss += stage_weight(seq.gamma, n, i) * r;
    }
    return seq.lambda_n * loss;
}

double fdr(const StageSequence& seq, const ValidMask& mask, int stride) {
    seq.validate();
    if (!mask.same_size(seq.stages.front().pixels)) {
        throw DimensionMismatch("mask dimensions must match the stages");
    }
    const int w = mask.width();
    const int h = mask.height();
    if (w <= stride || h <= stride) {
        throw TooSmall("grid must exceed the stride in both dimensions");
    }

    // Reduced masks: drop the last `stride` columns for the horizontal
    // differences, the last `stride` rows for the vertical ones.
    std::int64_t nx = 0;
    std::int64_t ny = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w - stride; ++x) {
            nx += mask(x, y) ? 1 : 0;
        }
    }
    for (int y = 0; y < h - stride; ++y) {
        for (int x = 0; x < w; ++x) {
            ny += mask(x, y) ? 1 : 0;
        }
    }
    if (nx == 0 || ny == 0) {
        throw EmptyMask("fdr mask has no valid pixel in a reduced grid");
    }

    const int n = static_cast<int>(seq.stages.size());
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const GradientPair du = flow_difference(seq.stages[i].channel(0), stride);
        const GradientPair dv = flow_difference(seq.stages[i].channel(1), stride);
        double sum_x = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w - stride; ++x) {
                if (mask(x, y)) {
                    sum_x += std::abs(du.gx(x, y)) + std::abs(dv.gx(x, y));
                }
            }
        }
        double sum_y = 0.0;
        for (int y = 0; y < h - stride; ++y) {
            for (int x = 0; x < w; ++x) {
                if (mask(x, y)) {
                    sum_y += std::abs(du.gy(x, y)) + std::abs(dv.gy(x, y));
                }
            }
        }
        const double r = sum_x / static_cast<double>(nx) + sum_y / static_cast<double>(ny);
        loss += stage_weight(seq.gamma, n, i) * r;
    }
    return seq.lambda_n * loss;
}

Grid<double> grad_magnitude(const Grid<Eigen::Vector3d>& image) {
    const int w = image.width();
    const int h = image.height();
    Grid<double> channel(w, h);
    Grid<double> out(w, h, 0.0);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                channel(x, y) = image(x, y)[c];
            }
        }
        const GradientPair g = sobel(channel, false);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double gx = g.gx.data()[i];
            const double gy = g.gy.data()[i];
            out.data()[i] += std::sqrt(gx * gx + gy * gy);
        }
    }
    for (double& v : out.data()) {
        v /= 3.0;
    }
    return out;
}

double migar_base(const Grid<double>& g) {
    double sum = 0.0;
    for (double v : g.data()) {
        sum += v;
    }
    return std::exp(sum / static_cast<double>(g.size()));
}

double igvar_base(const Grid<double>& g, const ValidMask& mask) {
    if (!g.same_size(mask)) {
        throw DimensionMismatch("gradient grid and mask must share dimensions");
    }
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (mask.data()[i]) {
            sum += g.data()[i];
            ++n;
        }
    }
    if (n == 0) {
        throw EmptyMask("igvar base over an empty mask");
    }
    const double mean = sum / static_cast<double>(n);
    double var_sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (mask.data()[i]) {
            const double d = g.data()[i] - mean;
            var_sum += d * d;
        }
    }
    const double variance = var_sum / static_cast<double>(n);
    return std::max(variance / 100.0, std::numbers::e);
}

ActivationWeights pixel_weights(const Grid<double>& g, double base) {
    if (!(base >= 1.0)) {
        throw ConfigInvalid("pixel weight base must be at least 1");
    }
    ActivationWeights out;
    out.base = base;
    out.weights = Grid<double>(g.width(), g.height());
    for (std::size_t i = 0; i < g.size(); ++i) {
        out.weights.data()[i] = std::pow(base, -g.data()[i]);
    }
    return out;
}

ValidMask total_mask(const ValidMask& mask, bool literal_mode) {
    Grid<double> as_double(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        as_double.data()[i] = mask.data()[i] ? 1.0 : 0.0;
    }
    const GradientPair g = sobel(as_double, false);
    ValidMask out(mask.width(), mask.height(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask.data()[i]) {
            continue;
        }
        const double gx = g.gx.data()[i];
        const double gy = g.gy.data()[i];
        const bool keep = literal_mode ? (gx > 0.0 && gy > 0.0) : (gx == 0.0 && gy == 0.0);
        out.data()[i] = keep ? 1 : 0;
    }
    return out;
}

double migar(const StageSequence& seq, const Grid<Eigen::Vector3d>& first_image,
             const ValidMask& mask, BaseMode mode, bool literal_mask_mode) {
    seq.validate();
    if (!first_image.same_size(seq.stages.front().pixels) || !mask.same_size(first_image)) {
        throw DimensionMismatch("image, mask and stages must share dimensions");
    }
    if (count_valid(mask) == 0) {
        throw EmptyMask("migar mask has no valid pixel");
    }

    const Grid<double> g = grad_magnitude(first_image);
    const double base = mode == BaseMode::MeanGradient ? migar_base(g) : igvar_base(g, mask);
    const ActivationWeights w = pixel_weights(g, base);
    const ValidMask keep = total_mask(mask, literal_mask_mode);

    const int n = static_cast<int>(seq.stages.size());
    const double pixel_count = static_cast<double>(mask.size());
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = 0.0;
        for (int c = 0; c < 2; ++c) {
            const Grid<double> masked = apply_mask(seq.stages[i].channel(c), keep);
            const GradientPair grad = sobel(masked, false);
            double sum = 0.0;
            for (std::size_t p = 0; p < masked.size(); ++p) {
                sum += w.weights.data()[p] *
                       (std::abs(grad.gx.data()[p]) + std::abs(grad.gy.data()[p]));
            }
            r += sum / pixel_count;
        }
        loss += stage_weight(seq.gamma, n, i) * r;
    }
    return loss;
}

} // namespace splatflow
