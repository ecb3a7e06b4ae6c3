// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "splatflow/flow_field.hpp"
#include "splatflow/grid.hpp"

namespace splatflow {

// Multi-stage flow prediction with its loss hyperparameters. Stage i of n
// enters every loss with weight gamma^(n-1-i): the last stage weighs 1, the
// first gamma^(n-1).
struct StageSequence {
    std::vector<FlowField> stages;
    double gamma = 0.8;    // decay, in (0, 1); no published value, 0.8 is our default
    double lambda_n = 0.05; // regularization weight for tvr/fdr

    // Throws ConfigInvalid unless there is at least one stage, all stages
    // share dimensions, gamma is in (0,1) and lambda_n >= 0.
    void validate() const;
};

// Horizontal and vertical gradient grids. The Sobel path preserves the
// source dimensions (replicate padding); the finite-difference path shrinks
// gx by `stride` columns and gy by `stride` rows.
struct GradientPair {
    Grid<double> gx;
    Grid<double> gy;
};

// Edge-adaptive weights w = base^(-G): 1 where the image is flat, smaller
// where it has structure. base >= 1, so every weight lies in (0, 1].
struct ActivationWeights {
    double base = 1.0;
    Grid<double> weights;
};

enum class BaseMode {
    MeanGradient,     // base = exp(mean gradient magnitude)
    GradientVariance, // base = max(masked variance / 100, e)
};

// 3x3 Sobel cross-correlation with replicate padding, output dimensions
// equal input. Gx = [[-1,0,1],[-2,0,2],[-1,0,1]], Gy its transpose; with
// `normalized` both responses are divided by 8 so a unit ramp reads slope 1.
// Taps are evaluated as paired differences, so any constant input gives
// exactly zero. Throws TooSmall when either dimension is below 3.
GradientPair sobel(const Grid<double>& channel, bool normalized);

// Strided forward differences divided by the stride: gx(x,y) =
// (c(x+stride,y) - c(x,y)) / stride over the first W-stride columns, gy
// analogous over rows. Throws TooSmall unless W and H both exceed stride.
GradientPair flow_difference(const Grid<double>& channel, int stride);

// Total-variation regularizer: lambda_n * sum_i gamma^(n-1-i) *
// (R(u_i) + R(v_i)) with R the mean over all pixels of |gx| + |gy| from
// normalized Sobel.
double tvr(const StageSequence& seq);

// Flow-difference regularizer: like tvr but with strided differences, and
// each reduced gradient grid averaged over the mask restricted to it (the
// mask loses its last `stride` columns for gx, rows for gy). The absolute
// value and the masked mean are our reading; they keep the term nonnegative
// and on tvr's scale. Throws EmptyMask when a reduced mask has no valid
// pixel.
double fdr(const StageSequence& seq, const ValidMask& mask, int stride = 1);

// Mean over RGB of the unnormalized Sobel gradient magnitude,
// (1/3) * sum_c sqrt(gx_c^2 + gy_c^2).
Grid<double> grad_magnitude(const Grid<Eigen::Vector3d>& image);

// exp(mean of G); >= 1 because G >= 0.
double migar_base(const Grid<double>& g);

// max(population variance of G over valid pixels / 100, e).
// Throws EmptyMask on an all-zero mask.
double igvar_base(const Grid<double>& g, const ValidMask& mask);

// w = base^(-G) per pixel. Throws ConfigInvalid when base < 1.
ActivationWeights pixel_weights(const Grid<double>& g, double base);

// Combines a validity mask with its own unnormalized Sobel gradients.
// literal_mode keeps pixels where both gradients are strictly positive
// (which annihilates mask interiors); the default keeps pixels where both
// gradients are exactly zero, i.e. the interior with the boundary band
// removed. Mask values are 0/1 so the gradients are exact small integers
// and both comparisons are exact.
ValidMask total_mask(const ValidMask& mask, bool literal_mode = false);

// Image-gradient-aware regularizer over a stage sequence: each flow channel
// is zeroed outside total_mask(mask, literal_mask_mode), its unnormalized
// Sobel gradients are weighted by pixel_weights(grad_magnitude(first_image),
// base(mode)) and averaged over all pixels; channels and stages combine with
// the gamma decay and no lambda_n factor. Throws EmptyMask when the mask has
// no valid pixel.
double migar(const StageSequence& seq, const Grid<Eigen::Vector3d>& first_image,
             const ValidMask& mask, BaseMode mode = BaseMode::MeanGradient,
             bool literal_mask_mode = false);

} // namespace splatflow
