// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "splatflow/flow_field.hpp"
#include "splatflow/grid.hpp"

namespace splatflow {

// Aggregate flow-quality numbers over the valid pixels of one or more pairs.
// epe is in pixels; px1/px3/px5 are fractions in [0, 1]; f1_all is the
// percentage of outlier pixels (error > 3 px and > 5% of the ground-truth
// magnitude) and wauc is a percent, both in [0, 100]. Error thresholds are
// inclusive throughout (err <= tau passes); that convention and the 100-bin
// WAUC layout are pinned here, as the common benchmark definitions.
struct MetricsReport {
    double epe = 0.0;
    double px1 = 0.0;
    double px3 = 0.0;
    double px5 = 0.0;
    double f1_all = 0.0;
    double wauc = 0.0;
    std::int64_t valid_pixel_count = 0;
};

// Mean endpoint error over valid pixels. All metric reductions in this
// module accumulate in 64-bit floats, serially, in row-major pixel order.
// Every function below throws DimensionMismatch on shape disagreement and
// EmptyMask when no pixel is valid.
double epe(const FlowField& pred, const FlowField& gt, const ValidMask& mask);

// Fraction of valid pixels with endpoint error <= tau (inclusive).
double px_accuracy(const FlowField& pred, const FlowField& gt, const ValidMask& mask, double tau);

double f1_all(const FlowField& pred, const FlowField& gt, const ValidMask& mask);

// Threshold-weighted area under the accuracy curve: thresholds i * 0.05 px
// with weights 1 - (i - 1) / 100 for i = 1..100, reported in [0, 100].
double wauc(const FlowField& pred, const FlowField& gt, const ValidMask& mask);

MetricsReport evaluate(const FlowField& pred, const FlowField& gt, const ValidMask& mask);

// Pixel-pooled aggregation across pairs: add() folds a pair's valid pixels
// into running sums, report() reduces them. Equivalent to evaluating one
// giant concatenated pair; pairs do not get equal weight unless they have
// equal valid counts.
class MetricsAccumulator {
public:
    void add(const FlowField& pred, const FlowField& gt, const ValidMask& mask);
    MetricsReport report() const; // throws EmptyMask if nothing was added
    std::int64_t valid_pixel_count() const { return count_; }

private:
    std::int64_t count_ = 0;
    double err_sum_ = 0.0;
    std::int64_t within_[3] = {0, 0, 0}; // tau = 1, 3, 5
    std::int64_t outliers_ = 0;
    // first_bucket_[i] counts pixels whose smallest passing threshold is
    // i * 0.05 (i in 1..100); index 0 counts pixels passing none.
    std::int64_t first_bucket_[101] = {};
};

} // namespace splatflow
