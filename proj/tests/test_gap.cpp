#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "lca/error.hpp"
#include "lca/gap.hpp"
#include "lca/synth.hpp"

using namespace lca;
using namespace lca::gap;

namespace {

// fx = fy = 1, principal point at origin: pixel coordinates ARE normalized
// coordinates, handy for fabricating exact geometry.
CameraIntrinsics identity_camera() {
    CameraIntrinsics cam;
    cam.fx = 1.0;
    cam.fy = 1.0;
    return cam;
}

// A frame whose boundary lines are vertical at +-half_b and whose bottom
// point sits between them: lane_width_in_image == 2 * half_b exactly.
FrameSet vertical_frame(int index, double half_b) {
    FrameSet f;
    f.frame_index = index;
    f.p_left_1 = {-half_b, 0.2};
    f.p_left_2 = {-half_b, 0.8};
    f.p_right_1 = {half_b, 0.25};
    f.p_right_2 = {half_b, 0.85};
    f.p_bottom = {0.0, 0.5};
    return f;
}

}  // namespace

TEST_CASE("undistort maps the principal point to the origin") {
    CameraIntrinsics cam;
    cam.fx = 700.0;
    cam.fy = 710.0;
    cam.cx = 640.0;
    cam.cy = 360.0;
    const Normalized n = undistort_point({640.0, 360.0}, cam);
    CHECK(n.x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(n.y == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("undistort inverts forward projection with strong distortion") {
    CameraIntrinsics cam;
    cam.fx = 700.0;
    cam.fy = 700.0;
    cam.cx = 640.0;
    cam.cy = 360.0;
    cam.skew = 0.4;
    cam.k1 = -0.3;

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coord(-0.45, 0.45);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const double x = coord(rng), y = coord(rng);
        const PixelPoint px = synth::project_point(x, y, 1.0, cam);
        const Normalized n = undistort_point(px, cam);
        worst = std::max(worst, std::max(std::abs(n.x - x), std::abs(n.y - y)));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("zero distortion undistortion equals the closed-form inverse") {
    CameraIntrinsics cam;
    cam.fx = 720.0;
    cam.fy = 700.0;
    cam.cx = 630.0;
    cam.cy = 355.0;
    cam.skew = 1.5;

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> upix(0.0, 1280.0), vpix(0.0, 720.0);
    for (int i = 0; i < 200; ++i) {
        const PixelPoint px{upix(rng), vpix(rng)};
        const Normalized n = undistort_point(px, cam);
        const double y = (px.v - cam.cy) / cam.fy;
        const double x = (px.u - cam.cx - cam.skew * y) / cam.fx;
        CHECK(std::abs(n.x - x) < 1e-12);
        CHECK(std::abs(n.y - y) < 1e-12);
    }
}

TEST_CASE("undistortion fails outside the invertible region") {
    CameraIntrinsics cam;
    cam.fx = 100.0;
    cam.fy = 100.0;
    cam.k1 = -0.5;
    // far outside the valid field of view for this distortion
    CHECK_THROWS_AS(undistort_point({500.0, 400.0}, cam), Error);
}

TEST_CASE("lane width in image matches the pinhole prediction") {
    const CameraIntrinsics cam = synth::default_intrinsics();
    const synth::FrameGeometry geom;
    const double b_true = 3.5, l_t = 5.0, range = 20.0;
    const FrameSet frame = synth::synthesize_frame(10, range, 0.2, b_true, l_t, cam, geom, 0.0, false, 1);
    const double b = lane_width_in_image(frame, cam);
    CHECK(b == doctest::Approx(b_true / (range + l_t)).epsilon(1e-9));
}

TEST_CASE("degenerate boundary geometry is an error") {
    const CameraIntrinsics cam = identity_camera();
    FrameSet f = vertical_frame(1, 0.1);
    f.p_left_2 = f.p_left_1;  // coincident points
    CHECK_THROWS_AS(lane_width_in_image(f, cam), Error);

    FrameSet g = vertical_frame(1, 0.1);
    g.p_right_1 = {0.1, 0.5};
    g.p_right_2 = {0.4, 0.5};  // horizontal line never meets the bottom row
    CHECK_THROWS_AS(lane_width_in_image(g, cam), Error);

    FrameSet h = vertical_frame(1, 0.1);
    h.valid = false;
    CHECK_THROWS_AS(lane_width_in_image(h, cam), Error);
}

TEST_CASE("frame_range implements the pinhole relation") {
    const CameraIntrinsics cam = identity_camera();
    const double b_true = 2.0;

    // b == B gives z_c = 1
    CHECK(frame_range(vertical_frame(1, 1.0), b_true, 0.0, cam) == doctest::Approx(1.0).epsilon(1e-12));

    // z_c = 4 with l_t = 5 goes negative; the caller is expected to flag it
    CHECK(frame_range(vertical_frame(1, 0.25), b_true, 5.0, cam) == doctest::Approx(-1.0).epsilon(1e-12));

    // synthetic 20 m gap round-trips through projection and inversion
    const CameraIntrinsics real_cam = synth::default_intrinsics();
    const FrameSet frame =
        synth::synthesize_frame(10, 20.0, 0.0, 3.5, 5.0, real_cam, synth::FrameGeometry{}, 0.0, false, 1);
    CHECK(frame_range(frame, 3.5, 5.0, real_cam) == doctest::Approx(20.0).epsilon(1e-8));
}

namespace {

// frames whose frame_range comes out exactly z(i) with identity camera,
// B = 2, l_t = 0
std::vector<FrameSet> frames_with_ranges(const std::vector<std::pair<int, double>>& ranges) {
    std::vector<FrameSet> out;
    for (const auto& [idx, r] : ranges) out.push_back(vertical_frame(idx, 1.0 / r));
    return out;
}

}  // namespace

TEST_CASE("event_range reads the crossing frame directly") {
    std::vector<std::pair<int, double>> ranges;
    for (int i = 1; i <= 10; ++i) ranges.emplace_back(i, 30.0 - i);
    const auto frames = frames_with_ranges(ranges);
    const EventRange er = event_range(frames, 2.0, 0.0, identity_camera());
    CHECK(er.n_valid == 10);
    CHECK_FALSE(er.extrapolated);
    CHECK(er.range_at_cross == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("event_range extrapolates a dropped crossing frame") {
    std::vector<std::pair<int, double>> ranges;
    for (int i = 1; i <= 10; ++i) ranges.emplace_back(i, 30.0 - i);
    auto frames = frames_with_ranges(ranges);
    frames[8].valid = false;
    frames[9].valid = false;
    const EventRange er = event_range(frames, 2.0, 0.0, identity_camera());
    CHECK(er.n_valid == 8);
    CHECK(er.extrapolated);
    CHECK(er.range_at_cross == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("fewer than 7 valid frames is an invalid event") {
    std::vector<std::pair<int, double>> ranges;
    for (int i = 1; i <= 10; ++i) ranges.emplace_back(i, 25.0);
    auto frames = frames_with_ranges(ranges);
    for (int i = 0; i < 4; ++i) frames[static_cast<std::size_t>(i)].valid = false;
    CHECK_THROWS_WITH_AS(event_range(frames, 2.0, 0.0, identity_camera()), doctest::Contains("invalid event"),
                         Error);
}

TEST_CASE("dropping up to 3 frames of exact affine data changes nothing") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> pick(0, 9);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::pair<int, double>> ranges;
        for (int i = 1; i <= 10; ++i) ranges.emplace_back(i, 40.0 - 1.5 * i);
        auto frames = frames_with_ranges(ranges);
        const double base = event_range(frames, 2.0, 0.0, identity_camera()).range_at_cross;
        int dropped = 0;
        while (dropped < 3) {
            const int i = pick(rng);
            if (frames[static_cast<std::size_t>(i)].valid) {
                frames[static_cast<std::size_t>(i)].valid = false;
                ++dropped;
            }
        }
        const double after = event_range(frames, 2.0, 0.0, identity_camera()).range_at_cross;
        CHECK(std::abs(after - base) < 1e-9);
    }
}

TEST_CASE("wls_affine recovers slopes in physical units") {
    std::vector<std::pair<int, double>> pairs;
    for (int i = 1; i <= 10; ++i) pairs.emplace_back(i, 30.0 - 1.0 * i);
    CHECK(range_rate(pairs, RangeRateMode::wls_affine, 10.0) == doctest::Approx(-10.0).epsilon(1e-9));

    std::vector<std::pair<int, double>> flat;
    for (int i = 1; i <= 10; ++i) flat.emplace_back(i, 20.0);
    CHECK(range_rate(flat, RangeRateMode::wls_affine, 10.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("paper_literal evaluates the through-origin regression") {
    std::vector<std::pair<int, double>> flat;
    for (int i = 1; i <= 10; ++i) flat.emplace_back(i, 10.0);
    // sum(F) / sum(F^2 / R) = 55 / 38.5 = 10/7 per frame
    CHECK(std::abs(range_rate(flat, RangeRateMode::paper_literal, 1.0) - 10.0 / 7.0) < 1e-12);
    // the per-frame coefficient scales linearly with the frame rate
    CHECK(range_rate(flat, RangeRateMode::paper_literal, 10.0) ==
          doctest::Approx(10.0 * 10.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("range_rate rejects non-positive ranges and tiny inputs") {
    std::vector<std::pair<int, double>> bad{{1, 10.0}, {2, -1.0}, {3, 12.0}};
    CHECK_THROWS_AS(range_rate(bad, RangeRateMode::wls_affine, 10.0), Error);
    std::vector<std::pair<int, double>> one{{1, 10.0}};
    CHECK_THROWS_AS(range_rate(one, RangeRateMode::wls_affine, 10.0), Error);
}

TEST_CASE("both modes match brute-force normal equations") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> rdist(1.0, 120.0);
    std::uniform_int_distribution<int> ndist(7, 10);
    for (int rep = 0; rep < 300; ++rep) {
        const int n = ndist(rng);
        std::vector<int> indices{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        for (int i = 9; i > 0; --i) {
            std::uniform_int_distribution<int> j(0, i);
            std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j(rng))]);
        }
        indices.resize(static_cast<std::size_t>(n));
        std::sort(indices.begin(), indices.end());

        std::vector<double> xs, ys, ws, taus;
        std::vector<std::pair<int, double>> pairs;
        for (int idx : indices) {
            const double r = rdist(rng);
            xs.push_back(idx);
            taus.push_back(idx / 10.0);
            ys.push_back(r);
            ws.push_back(1.0 / r);
            pairs.emplace_back(idx, r);
        }
        const double lit = range_rate(pairs, RangeRateMode::paper_literal, 1.0);
        const double lit_oracle = testutil::brute_origin_coefficient(xs, ys, ws);
        CHECK(std::abs(lit - lit_oracle) <= 1e-12 * std::max(1.0, std::abs(lit_oracle)));

        const double slope = range_rate(pairs, RangeRateMode::wls_affine, 10.0);
        const double slope_oracle = testutil::brute_affine_fit(taus, ys, ws).slope;
        CHECK(std::abs(slope - slope_oracle) <= 1e-11 * std::max(1.0, std::abs(slope_oracle)));
    }
}

TEST_CASE("weighted affine fit is exact on affine data under any positive weights") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> coef(-5.0, 5.0), weight(0.05, 20.0);
    for (int rep = 0; rep < 300; ++rep) {
        const double a = coef(rng) + 30.0, s = coef(rng);
        std::vector<double> xs, ys, ws;
        for (int i = 1; i <= 10; ++i) {
            xs.push_back(i);
            ys.push_back(a + s * i);
            ws.push_back(weight(rng));
        }
        const AffineFit fit = weighted_affine_fit(xs, ys, ws);
        CHECK(std::abs(fit.slope - s) < 1e-9);
        CHECK(std::abs(fit.intercept - a) < 1e-8);
    }
}

TEST_CASE("weight scaling leaves both estimators unchanged") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> rdist(2.0, 80.0);
    std::vector<double> xs, ys, ws, ws_scaled;
    for (int i = 1; i <= 10; ++i) {
        xs.push_back(i);
        ys.push_back(rdist(rng));
        ws.push_back(1.0 / ys.back());
        ws_scaled.push_back(137.25 / ys.back());
    }
    CHECK(std::abs(weighted_origin_coefficient(xs, ys, ws) - weighted_origin_coefficient(xs, ys, ws_scaled)) <
          1e-12);
    const AffineFit f1 = weighted_affine_fit(xs, ys, ws);
    const AffineFit f2 = weighted_affine_fit(xs, ys, ws_scaled);
    CHECK(std::abs(f1.slope - f2.slope) < 1e-12);
    CHECK(std::abs(f1.intercept - f2.intercept) < 1e-12);
}
