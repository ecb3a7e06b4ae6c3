// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "splatflow/regloss.hpp"
#include "splatflow/rng.hpp"

using namespace splatflow;

namespace {

Grid<double> make_channel(int w, int h, double (*fn)(int, int)) {
    Grid<double> g(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            g(x, y) = fn(x, y);
        }
    }
    return g;
}

FlowField field_from_channels(const Grid<double>& u, const Grid<double>& v) {
    FlowField f(u.width(), u.height());
    for (int y = 0; y < u.height(); ++y) {
        for (int x = 0; x < u.width(); ++x) {
            f.at(x, y) = Eigen::Vector2d(u(x, y), v(x, y));
        }
    }
    return f;
}

FlowField ramp_u_field(int w, int h) {
    return field_from_channels(make_channel(w, h, [](int x, int) { return double(x); }),
                               Grid<double>(w, h, 0.0));
}

// Independent 3x3 cross-correlation with replicate padding, written as
// per-column/per-row weighted sums rather than a kernel walk.
GradientPair naive_sobel(const Grid<double>& c, bool normalized) {
    const int w = c.width();
    const int h = c.height();
    const auto at = [&](int x, int y) {
        x = std::min(std::max(x, 0), w - 1);
        y = std::min(std::max(y, 0), h - 1);
        return c(x, y);
    };
    GradientPair out{Grid<double>(w, h), Grid<double>(w, h)};
    const double s = normalized ? 0.125 : 1.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double right = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1);
            const double left = at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1);
            const double below = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1);
            const double above = at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1);
            out.gx(x, y) = (right - left) * s;
            out.gy(x, y) = (below - above) * s;
        }
    }
    return out;
}

} // namespace

TEST_CASE("sobel of a constant image is exactly zero") {
    const Grid<double> c(9, 7, 3.25);
    const GradientPair g = sobel(c, true);
    for (double v : g.gx.data()) {
        CHECK(v == 0.0);
    }
    for (double v : g.gy.data()) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("normalized sobel reads unit slope on a ramp") {
    const Grid<double> ramp = make_channel(8, 5, [](int x, int) { return double(x); });
    const GradientPair g = sobel(ramp, true);
    for (int y = 0; y < 5; ++y) {
        CHECK(g.gx(0, y) == 0.5); // replicate padding halves the border response
        CHECK(g.gx(7, y) == 0.5);
        for (int x = 1; x < 7; ++x) {
            CHECK(g.gx(x, y) == 1.0);
        }
        for (int x = 0; x < 8; ++x) {
            CHECK(g.gy(x, y) == 0.0);
        }
    }
}

TEST_CASE("sobel center response on a hand-computed patch") {
    Grid<double> c(3, 3, 0.0);
    c(1, 0) = 1.0;
    c(0, 1) = 2.0;
    c(2, 1) = 3.0;
    c(1, 2) = 4.0;
    const GradientPair g = sobel(c, true);
    CHECK(g.gx(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.gy(1, 1) == doctest::Approx(0.75).epsilon(1e-15));
    const GradientPair raw = sobel(c, false);
    CHECK(raw.gx(1, 1) == 2.0);
    CHECK(raw.gy(1, 1) == 6.0);
}

TEST_CASE("sobel matches an independent formulation on random data") {
    std::mt19937_64 rng = make_rng({42, 7});
    Grid<double> c(9, 6);
    for (double& v : c.data()) {
        v = uniform_range(rng, -5.0, 5.0);
    }
    for (bool normalized : {false, true}) {
        const GradientPair got = sobel(c, normalized);
        const GradientPair want = naive_sobel(c, normalized);
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 9; ++x) {
                CHECK(got.gx(x, y) == doctest::Approx(want.gx(x, y)).epsilon(1e-12));
                CHECK(got.gy(x, y) == doctest::Approx(want.gy(x, y)).epsilon(1e-12));
            }
        }
    }
    CHECK_THROWS_AS(sobel(Grid<double>(2, 5, 0.0), true), TooSmall);
    CHECK_THROWS_AS(sobel(Grid<double>(5, 2, 0.0), true), TooSmall);
}

TEST_CASE("flow_difference shapes and values") {
    const Grid<double> c = make_channel(5, 4, [](int x, int y) { return double(x * x + 3 * y); });
    const GradientPair g = flow_difference(c, 2);
    REQUIRE(g.gx.width() == 3);
    REQUIRE(g.gx.height() == 4);
    REQUIRE(g.gy.width() == 5);
    REQUIRE(g.gy.height() == 2);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 3; ++x) {
            // ((x+2)^2 - x^2) / 2 = 2x + 2
            CHECK(g.gx(x, y) == doctest::Approx(2.0 * x + 2.0).epsilon(1e-15));
        }
    }
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 5; ++x) {
            CHECK(g.gy(x, y) == doctest::Approx(3.0).epsilon(1e-15));
        }
    }
    CHECK_THROWS_AS(flow_difference(c, 0), ConfigInvalid);
    CHECK_THROWS_AS(flow_difference(c, 4), TooSmall); // height 4 does not exceed stride
}

TEST_CASE("tvr closed form on a ramp stage") {
    StageSequence seq;
    seq.stages.push_back(ramp_u_field(8, 5));
    // R(u) = mean |gx| = ((w-2) + 2*0.5) / w = (w-1)/w; v contributes nothing
    CHECK(tvr(seq) == doctest::Approx(0.05 * 7.0 / 8.0).epsilon(1e-12));

    seq.lambda_n = 0.2;
    CHECK(tvr(seq) == doctest::Approx(0.2 * 7.0 / 8.0).epsilon(1e-12));

    // constant stages cancel exactly under replicate padding
    StageSequence flat;
    flat.stages.emplace_back(6, 6, Eigen::Vector2d(4.0, -2.0));
    CHECK(tvr(flat) == 0.0);
}

TEST_CASE("tvr applies the decay to earlier stages") {
    StageSequence one;
    one.stages.push_back(ramp_u_field(8, 5));
    const double single = tvr(one);

    StageSequence two;
    two.stages.push_back(ramp_u_field(8, 5));
    two.stages.push_back(ramp_u_field(8, 5));
    CHECK(tvr(two) == doctest::Approx(single * 1.8).epsilon(1e-12));

    StageSequence last_only;
    last_only.stages.emplace_back(8, 5); // zero first stage
    last_only.stages.push_back(ramp_u_field(8, 5));
    CHECK(tvr(last_only) == doctest::Approx(single).epsilon(1e-12));

    StageSequence first_only;
    first_only.stages.push_back(ramp_u_field(8, 5));
    first_only.stages.emplace_back(8, 5);
    CHECK(tvr(first_only) == doctest::Approx(single * 0.8).epsilon(1e-12));
}

TEST_CASE("stage sequence validation") {
    StageSequence seq;
    CHECK_THROWS_AS(seq.validate(), ConfigInvalid); // no stages
    seq.stages.emplace_back(4, 4);
    seq.stages.emplace_back(4, 5);
    CHECK_THROWS_AS(seq.validate(), ConfigInvalid); // mismatched stages
    seq.stages.pop_back();
    seq.gamma = 1.0;
    CHECK_THROWS_AS(seq.validate(), ConfigInvalid);
    seq.gamma = 0.8;
    seq.lambda_n = -0.01;
    CHECK_THROWS_AS(seq.validate(), ConfigInvalid);
    seq.lambda_n = 0.0;
    CHECK_NOTHROW(seq.validate());
}

TEST_CASE("fdr closed form with and without mask holes") {
    // u = x^2 gives strided differences 2x+1; v = 0
    StageSequence seq;
    seq.stages.push_back(field_from_channels(
        make_channel(4, 3, [](int x, int) { return double(x * x); }), Grid<double>(4, 3, 0.0)));

    ValidMask mask(4, 3, 1);
    // gx mean over 3x3 reduced grid: (1 + 3 + 5) / 3 = 3; gy sums are zero
    CHECK(fdr(seq, mask) == doctest::Approx(0.05 * 3.0).epsilon(1e-12));

    for (int y = 0; y < 3; ++y) {
        mask(0, y) = 0; // drop the first column
    }
    CHECK(fdr(seq, mask) == doctest::Approx(0.05 * 4.0).epsilon(1e-12));

    ValidMask last_col_only(4, 3, 0);
    for (int y = 0; y < 3; ++y) {
        last_col_only(3, y) = 1; // falls off the reduced gx grid entirely
    }
    CHECK_THROWS_AS(fdr(seq, last_col_only), EmptyMask);

    CHECK_THROWS_AS(fdr(seq, mask, 0), ConfigInvalid);
    CHECK_THROWS_AS(fdr(seq, mask, 3), TooSmall);
    ValidMask wrong(5, 3, 1);
    CHECK_THROWS_AS(fdr(seq, wrong), DimensionMismatch);
}

TEST_CASE("fdr stride divides the difference") {
    StageSequence seq;
    seq.stages.push_back(field_from_channels(
        make_channel(6, 6, [](int x, int) { return 4.0 * x; }), Grid<double>(6, 6, 0.0)));
    ValidMask mask(6, 6, 1);
    // linear field: differences divided by stride are the slope at any stride
    const double at1 = fdr(seq, mask, 1);
    const double at2 = fdr(seq, mask, 2);
    CHECK(at1 == doctest::Approx(0.05 * 4.0).epsilon(1e-12));
    CHECK(at2 == doctest::Approx(0.05 * 4.0).epsilon(1e-12));
}

TEST_CASE("grad_magnitude averages channel responses") {
    Grid<Eigen::Vector3d> flat(6, 6, Eigen::Vector3d(0.3, 0.6, 0.9));
    const Grid<double> flat_g = grad_magnitude(flat);
    for (double v : flat_g.data()) {
        CHECK(v == 0.0);
    }

    // one ramp channel: interior response 8, averaged over three channels
    Grid<Eigen::Vector3d> img(6, 6, Eigen::Vector3d::Zero());
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 6; ++x) {
            img(x, y).x() = double(x);
        }
    }
    const Grid<double> g = grad_magnitude(img);
    CHECK(g(2, 3) == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
    CHECK(g(0, 3) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    // all three channels ramping triples the response
    Grid<Eigen::Vector3d> img3(6, 6, Eigen::Vector3d::Zero());
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 6; ++x) {
            img3(x, y) = Eigen::Vector3d::Constant(double(x));
        }
    }
    CHECK(grad_magnitude(img3)(2, 3) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("migar_base and igvar_base closed forms") {
    CHECK(migar_base(Grid<double>(4, 4, 0.0)) == 1.0);
    Grid<double> g(2, 1);
    g(0, 0) = 0.0;
    g(1, 0) = 2.0;
    CHECK(migar_base(g) == doctest::Approx(std::numbers::e).epsilon(1e-12));

    Grid<double> spread(2, 1);
    spread(0, 0) = 0.0;
    spread(1, 0) = 60.0;
    ValidMask both(2, 1, 1);
    CHECK(igvar_base(spread, both) == doctest::Approx(9.0).epsilon(1e-12));

    Grid<double> narrow(2, 1);
    narrow(0, 0) = 0.0;
    narrow(1, 0) = 20.0;
    CHECK(igvar_base(narrow, both) == std::numbers::e); // variance 100 floors at e

    Grid<double> three(3, 1);
    three(0, 0) = 0.0;
    three(1, 0) = 60.0;
    three(2, 0) = 12345.0;
    ValidMask first_two(3, 1, 1);
    first_two(2, 0) = 0;
    CHECK(igvar_base(three, first_two) == doctest::Approx(9.0).epsilon(1e-12));

    ValidMask none(3, 1, 0);
    CHECK_THROWS_AS(igvar_base(three, none), EmptyMask);
    CHECK_THROWS_AS(igvar_base(g, none), DimensionMismatch);
}

TEST_CASE("pixel_weights exponentiates downward from 1") {
    Grid<double> g(3, 1);
    g(0, 0) = 0.0;
    g(1, 0) = 1.0;
    g(2, 0) = 2.0;
    const ActivationWeights w = pixel_weights(g, std::numbers::e);
    CHECK(w.weights(0, 0) == 1.0);
    CHECK(w.weights(1, 0) == doctest::Approx(1.0 / std::numbers::e).epsilon(1e-12));
    CHECK(w.weights(2, 0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(w.base == std::numbers::e);

    CHECK(pixel_weights(g, 1.0).weights(2, 0) == 1.0);
    CHECK_THROWS_AS(pixel_weights(g, 0.99), ConfigInvalid);
}

TEST_CASE("total_mask keeps the gradient-free interior by default") {
    ValidMask mask(7, 7, 0);
    for (int y = 1; y <= 5; ++y) {
        for (int x = 1; x <= 5; ++x) {
            mask(x, y) = 1;
        }
    }
    const ValidMask inner = total_mask(mask);
    CHECK(count_valid(inner) == 9);
    for (int y = 2; y <= 4; ++y) {
        for (int x = 2; x <= 4; ++x) {
            CHECK(inner(x, y) == 1);
        }
    }
    CHECK(inner(1, 1) == 0);
    CHECK(inner(1, 3) == 0);
    CHECK(inner(0, 0) == 0);

    // literal mode wants both gradients strictly positive, which on this
    // block singles out the top-left boundary corner
    const ValidMask literal = total_mask(mask, true);
    CHECK(count_valid(literal) == 1);
    CHECK(literal(1, 1) == 1);

    // a full mask has no boundary under replicate padding
    const ValidMask full(5, 5, 1);
    CHECK(count_valid(total_mask(full)) == 25);
    CHECK(count_valid(total_mask(full, true)) == 0);
}

TEST_CASE("migar closed form on a flat image") {
    // flat image: base 1, weights 1; full mask: total_mask keeps everything;
    // ramp u: |gx| sums to 8*(w-1) per row unnormalized
    const int w = 8;
    const int h = 5;
    StageSequence seq;
    seq.stages.push_back(ramp_u_field(w, h));
    const Grid<Eigen::Vector3d> image(w, h, Eigen::Vector3d::Constant(0.5));
    const ValidMask mask(w, h, 1);

    const double got = migar(seq, image, mask);
    CHECK(got == doctest::Approx(8.0 * (w - 1) / w).epsilon(1e-12));

    // lambda_n must not leak into this loss
    StageSequence zero_lambda = seq;
    zero_lambda.lambda_n = 0.0;
    CHECK(migar(zero_lambda, image, mask) == got);

    // decay across two stages
    StageSequence two;
    two.stages.push_back(ramp_u_field(w, h));
    two.stages.push_back(ramp_u_field(w, h));
    CHECK(migar(two, image, mask) == doctest::Approx(1.8 * got).epsilon(1e-12));

    // variance mode floors the base at e on a flat image; weights stay 1
    CHECK(migar(seq, image, mask, BaseMode::GradientVariance) ==
          doctest::Approx(got).epsilon(1e-12));
}

TEST_CASE("migar literal mask mode empties a full mask") {
    StageSequence seq;
    seq.stages.push_back(ramp_u_field(6, 6));
    const Grid<Eigen::Vector3d> image(6, 6, Eigen::Vector3d::Constant(0.2));
    const ValidMask mask(6, 6, 1);
    // literal mode drops every pixel of a full mask, so all channels zero out
    CHECK(migar(seq, image, mask, BaseMode::MeanGradient, true) == 0.0);

    const ValidMask empty(6, 6, 0);
    CHECK_THROWS_AS(migar(seq, image, empty), EmptyMask);
    const Grid<Eigen::Vector3d> wrong(5, 6, Eigen::Vector3d::Zero());
    CHECK_THROWS_AS(migar(seq, wrong, mask), DimensionMismatch);
}

TEST_CASE("migar matches an explicitly staged reference") {
    std::mt19937_64 rng = make_rng({314});
    const int w = 9;
    const int h = 7;
    StageSequence seq;
    for (int s = 0; s < 2; ++s) {
        FlowField f(w, h);
        for (auto& uv : f.pixels.data()) {
            uv = Eigen::Vector2d(uniform_range(rng, -3.0, 3.0), uniform_range(rng, -3.0, 3.0));
        }
        seq.stages.push_back(std::move(f));
    }
    Grid<Eigen::Vector3d> image(w, h);
    for (auto& px : image.data()) {
        px = Eigen::Vector3d(uniform_double(rng), uniform_double(rng), uniform_double(rng));
    }
    ValidMask mask(w, h, 1);
    mask(0, 0) = 0;
    mask(4, 3) = 0;

    const Grid<double> g = grad_magnitude(image);
    const ActivationWeights wts = pixel_weights(g, migar_base(g));
    const ValidMask keep = total_mask(mask);
    double want = 0.0;
    for (int s = 0; s < 2; ++s) {
        double r = 0.0;
        for (int c = 0; c < 2; ++c) {
            Grid<double> channel = seq.stages[s].channel(c);
            for (std::size_t i = 0; i < channel.size(); ++i) {
                if (!keep.data()[i]) {
                    channel.data()[i] = 0.0;
                }
            }
            const GradientPair grad = sobel(channel, false);
            double sum = 0.0;
            for (std::size_t i = 0; i < channel.size(); ++i) {
                sum += wts.weights.data()[i] *
                       (std::abs(grad.gx.data()[i]) + std::abs(grad.gy.data()[i]));
            }
            r += sum / double(w * h);
        }
        want += std::pow(0.8, 1 - s) * r;
    }
    CHECK(migar(seq, image, mask) == doctest::Approx(want).epsilon(1e-12));
}
