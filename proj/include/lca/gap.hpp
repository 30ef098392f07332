#pragma once

#include <span>
#include <utility>
#include <vector>

#include "lca/trace.hpp"

namespace lca::gap {

struct PixelPoint {
    double u = 0, v = 0;
};

struct Normalized {
    double x = 0, y = 0;
};

// Five manually-annotated pixel points for one rear-camera frame: two on each
// lane boundary and one on the POV front-bottom edge. valid == false marks a
// dropped frame (lane marker unreadable).
struct FrameSet {
    int frame_index = 1;  // 1..10, frame 10 is the boundary-crossing frame
    PixelPoint p_left_1, p_left_2;
    PixelPoint p_right_1, p_right_2;
    PixelPoint p_bottom;
    bool valid = true;
};

enum class RangeRateMode { paper_literal, wls_affine };

struct GapEstimate {
    double range_m = 0;        // range at boundary crossing
    double range_rate_mps = 0; // negative = POV closing on SV
    int n_valid = 0;
    bool crossing_frame_extrapolated = false;
    RangeRateMode mode = RangeRateMode::wls_affine;
};

const char* range_rate_mode_name(RangeRateMode mode);
RangeRateMode range_rate_mode_from_name(const std::string& name);

// Pixel -> normalized image plane (z = 1): inverts the pixel mapping, then the
// radial-tangential distortion by fixed-point iteration (<= 50 iterations or
// step < 1e-12). Throws on non-convergence.
Normalized undistort_point(const PixelPoint& px, const CameraIntrinsics& cam);

// Lane width at the POV bottom row, in normalized units: undistort the five
// points, extrapolate each boundary pair, intersect with the horizontal line
// through the bottom point.
double lane_width_in_image(const FrameSet& frame, const CameraIntrinsics& cam);

// R_i = B / b_i - l_t  (pinhole range minus camera-to-trailer-rear offset).
double frame_range(const FrameSet& frame, double lane_width_true, double cam_to_rear, const CameraIntrinsics& cam);

struct EventRange {
    double range_at_cross = 0;
    int n_valid = 0;
    bool extrapolated = false;
};

// Range at the crossing frame from the 10-frame set. Frames must be ordered
// by frame_index. Fewer than min_valid usable frames is an invalid event
// (throws). A dropped crossing frame is recovered by the least-squares line
// through (frame_index, R_i) over the usable frames.
EventRange event_range(std::span<const FrameSet> frames, double lane_width_true, double cam_to_rear,
                       const CameraIntrinsics& cam, int min_valid = 7);

// Range rate from (frame_index, R_i) pairs; weights are 1/R_i in both modes.
// wls_affine (default): slope of the weighted affine fit in m/s.
// paper_literal: weighted through-origin coefficient, per frame, scaled by
// frame_rate (the literal regression has no time axis; see README).
double range_rate(std::span<const std::pair<int, double>> ranges_by_frame, RangeRateMode mode, double frame_rate_hz);

// Weighted least-squares cores, exposed so oracle tests can drive them with
// arbitrary weights.
struct AffineFit {
    double intercept = 0;
    double slope = 0;
};
AffineFit weighted_affine_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w);
double weighted_origin_coefficient(std::span<const double> x, std::span<const double> y, std::span<const double> w);

}  // namespace lca::gap
