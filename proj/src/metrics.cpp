// SPDX-License-Identifier: Apache-2.0
#include "splatflow/metrics.hpp"

#include <cmath>

#include "splatflow/errors.hpp"

namespace splatflow {

namespace {

void check_shapes(const FlowField& pred, const FlowField& gt, const ValidMask& mask) {
    if (!pred.pixels.same_size(gt.pixels) || !pred.pixels.same_size(mask)) {
        throw DimensionMismatch("prediction, ground truth and mask must share dimensions");
    }
}

// Visits valid pixels in row-major order with the endpoint error and the
// ground-truth magnitude. The single traversal order keeps every metric's
// floating-point result identical to a straight double loop.
template <typename Fn>
void for_valid(const FlowField& pred, const FlowField& gt, const ValidMask& mask, Fn&& fn) {
    check_shapes(pred, gt, mask);
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            if (!mask(x, y)) {
                continue;
            }
            const Eigen::Vector2d& p = pred.at(x, y);
            const Eigen::Vector2d& g = gt.at(x, y);
            const double du = p.x() - g.x();
            const double dv = p.y() - g.y();
            const double err = std::sqrt(du * du + dv * dv);
            const double gt_mag = std::sqrt(g.x() * g.x() + g.y() * g.y());
            fn(err, gt_mag);
        }
    }
}

} // namespace

double epe(const FlowField& pred, const FlowField& gt, const ValidMask& mask) {
    double sum = 0.0;
    std::int64_t n = 0;
    for_valid(pred, gt, mask, [&](double err, double) {
        sum += err;
        ++n;
    });
    if (n == 0) {
        throw EmptyMask("epe over an empty mask");
    }
    return sum / static_cast<double>(n);
}

double px_accuracy(const FlowField& pred, const FlowField& gt, const ValidMask& mask, double tau) {
    std::int64_t within = 0;
    std::int64_t n = 0;
    for_valid(pred, gt, mask, [&](double err, double) {
        within += (err <= tau) ? 1 : 0;
        ++n;
    });
    if (n == 0) {
        throw EmptyMask("px_accuracy over an empty mask");
    }
    return static_cast<double>(within) / static_cast<double>(n);
}

double f1_all(const FlowField& pred, const FlowField& gt, const ValidMask& mask) {
    std::int64_t outliers = 0;
    std::int64_t n = 0;
    for_valid(pred, gt, mask, [&](double err, double gt_mag) {
        outliers += (err > 3.0 && err > 0.05 * gt_mag) ? 1 : 0;
        ++n;
    });
    if (n == 0) {
        throw EmptyMask("f1_all over an empty mask");
    }
    return 100.0 * static_cast<double>(outliers) / static_cast<double>(n);
}

double wauc(const FlowField& pred, const FlowField& gt, const ValidMask& mask) {
    std::int64_t passing[101] = {};
    std::int64_t n = 0;
    for_valid(pred, gt, mask, [&](double err, double) {
        for (int i = 1; i <= 100; ++i) {
            if (err <= i * 0.05) {
                ++passing[i];
            }
        }
        ++n;
    });
    if (n == 0) {
        throw EmptyMask("wauc over an empty mask");
    }
    double weighted = 0.0;
    double weight_sum = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double w = 1.0 - (i - 1) / 100.0;
        weighted += w * (static_cast<double>(passing[i]) / static_cast<double>(n));
        weight_sum += w;
    }
    return 100.0 * weighted / weight_sum;
}

void MetricsAccumulator::add(const FlowField& pred, const FlowField& gt, const ValidMask& mask) {
    for_valid(pred, gt, mask, [&](double err, double gt_mag) {
        err_sum_ += err;
        ++count_;
        within_[0] += (err <= 1.0) ? 1 : 0;
        within_[1] += (err <= 3.0) ? 1 : 0;
        within_[2] += (err <= 5.0) ? 1 : 0;
        outliers_ += (err > 3.0 && err > 0.05 * gt_mag) ? 1 : 0;
        int first = 0;
        for (int i = 1; i <= 100; ++i) {
            if (err <= i * 0.05) {
                first = i;
                break;
            }
        }
        ++first_bucket_[first];
    });
}

MetricsReport MetricsAccumulator::report() const {
    if (count_ == 0) {
        throw EmptyMask("metrics aggregate over zero valid pixels");
    }
    MetricsReport r;
    r.valid_pixel_count = count_;
    const double n = static_cast<double>(count_);
    r.epe = err_sum_ / n;
    r.px1 = static_cast<double>(within_[0]) / n;
    r.px3 = static_cast<double>(within_[1]) / n;
    r.px5 = static_cast<double>(within_[2]) / n;
    r.f1_all = 100.0 * static_cast<double>(outliers_) / n;

    // passing(t_i) = pixels whose first passing threshold is <= i
    double weighted = 0.0;
    double weight_sum = 0.0;
    std::int64_t cumulative = 0;
    for (int i = 1; i <= 100; ++i) {
        cumulative += first_bucket_[i];
        const double w = 1.0 - (i - 1) / 100.0;
        weighted += w * (static_cast<double>(cumulative) / n);
        weight_sum += w;
    }
    r.wauc = 100.0 * weighted / weight_sum;
    return r;
}

MetricsReport evaluate(const FlowField& pred, const FlowField& gt, const ValidMask& mask) {
    MetricsAccumulator acc;
    acc.add(pred, gt, mask);
    return acc.report();
}

} // namespace splatflow
