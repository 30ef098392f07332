#include "lca/gap.hpp"

#include <cmath>
#include <string>

#include "lca/error.hpp"

namespace lca::gap {

const char* range_rate_mode_name(RangeRateMode mode) {
    return mode == RangeRateMode::paper_literal ? "paper_literal" : "wls_affine";
}

RangeRateMode range_rate_mode_from_name(const std::string& name) {
    if (name == "paper_literal") return RangeRateMode::paper_literal;
    if (name == "wls_affine") return RangeRateMode::wls_affine;
    throw Error(Error::Kind::usage, "unknown range-rate mode '" + name + "'");
}

Normalized undistort_point(const PixelPoint& px, const CameraIntrinsics& cam) {
    if (!(cam.fx > 0) || !(cam.fy > 0)) {
        throw Error(Error::Kind::data, "undistort_point: invalid intrinsics");
    }
    // invert the affine pixel mapping: u = fx*x + skew*y + cx, v = fy*y + cy
    const double yd = (px.v - cam.cy) / cam.fy;
    const double xd = (px.u - cam.cx - cam.skew * yd) / cam.fx;

    double x = xd, y = yd;
    for (int iter = 0; iter < 50; ++iter) {
        const double r2 = x * x + y * y;
        const double radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3));
        if (!(radial > 1e-8)) break;  // outside the invertible region
        const double dx_t = 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x);
        const double dy_t = cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y;
        const double x_new = (xd - dx_t) / radial;
        const double y_new = (yd - dy_t) / radial;
        const double step = std::abs(x_new - x) + std::abs(y_new - y);
        x = x_new;
        y = y_new;
        if (step < 1e-12) return Normalized{x, y};
    }
    throw Error(Error::Kind::geometry, "undistort_point: iteration did not converge (point outside invertible region)");
}

double lane_width_in_image(const FrameSet& frame, const CameraIntrinsics& cam) {
    if (!frame.valid) {
        throw Error(Error::Kind::data, "lane_width_in_image: frame marked invalid");
    }
    const Normalized l1 = undistort_point(frame.p_left_1, cam);
    const Normalized l2 = undistort_point(frame.p_left_2, cam);
    const Normalized r1 = undistort_point(frame.p_right_1, cam);
    const Normalized r2 = undistort_point(frame.p_right_2, cam);
    const Normalized bot = undistort_point(frame.p_bottom, cam);

    // x(y) along each boundary line, evaluated at the bottom row
    auto intersect_at = [&](const Normalized& a, const Normalized& b, const char* side) {
        const double dy = b.y - a.y;
        const double dist2 = (b.x - a.x) * (b.x - a.x) + dy * dy;
        if (dist2 < 1e-20) {
            throw Error(Error::Kind::geometry,
                        std::string("lane_width_in_image: coincident points on ") + side + " boundary");
        }
        if (std::abs(dy) < 1e-12) {
            throw Error(Error::Kind::geometry,
                        std::string("lane_width_in_image: ") + side + " boundary line is horizontal");
        }
        return a.x + (b.x - a.x) * (bot.y - a.y) / dy;
    };

    const double x_left = intersect_at(l1, l2, "left");
    const double x_right = intersect_at(r1, r2, "right");
    const double b = std::abs(x_right - x_left);
    if (!(b > 0) || !std::isfinite(b)) {
        throw Error(Error::Kind::geometry, "lane_width_in_image: degenerate image lane width");
    }
    return b;
}

double frame_range(const FrameSet& frame, double lane_width_true, double cam_to_rear, const CameraIntrinsics& cam) {
    if (!(lane_width_true > 0)) {
        throw Error(Error::Kind::data, "frame_range: reference lane width must be > 0");
    }
    const double b = lane_width_in_image(frame, cam);
    return lane_width_true / b - cam_to_rear;
}

EventRange event_range(std::span<const FrameSet> frames, double lane_width_true, double cam_to_rear,
                       const CameraIntrinsics& cam, int min_valid) {
    std::vector<std::pair<int, double>> usable;
    usable.reserve(frames.size());
    bool crossing_valid = false;
    double crossing_range = 0;
    int last_index = 0;
    for (const FrameSet& f : frames) {
        if (f.frame_index <= last_index) {
            throw Error(Error::Kind::data, "event_range: frames not ordered by frame_index");
        }
        last_index = f.frame_index;
        if (!f.valid) continue;
        const double r = frame_range(f, lane_width_true, cam_to_rear, cam);
        usable.emplace_back(f.frame_index, r);
        if (f.frame_index == 10) {
            crossing_valid = true;
            crossing_range = r;
        }
    }
    EventRange out;
    out.n_valid = static_cast<int>(usable.size());
    if (out.n_valid < min_valid) {
        throw Error(Error::Kind::data, "event_range: invalid event, only " + std::to_string(out.n_valid) +
                                           " valid frames (need " + std::to_string(min_valid) + ")");
    }
    if (crossing_valid) {
        out.range_at_cross = crossing_range;
        out.extrapolated = false;
        return out;
    }
    std::vector<double> xs, ys, ws;
    for (const auto& [idx, r] : usable) {
        xs.push_back(static_cast<double>(idx));
        ys.push_back(r);
        ws.push_back(1.0);
    }
    const AffineFit fit = weighted_affine_fit(xs, ys, ws);
    out.range_at_cross = fit.intercept + fit.slope * 10.0;
    out.extrapolated = true;
    return out;
}

AffineFit weighted_affine_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    if (x.size() != y.size() || x.size() != w.size() || x.size() < 2) {
        throw Error(Error::Kind::data, "weighted_affine_fit: need >= 2 equally sized x/y/w");
    }
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(w[i] > 0)) throw Error(Error::Kind::data, "weighted_affine_fit: weights must be > 0");
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
        swxx += w[i] * x[i] * x[i];
        swxy += w[i] * x[i] * y[i];
    }
    const double det = sw * swxx - swx * swx;
    const double scale = sw * swxx + swx * swx;
    if (!(std::abs(det) > 1e-14 * std::max(1.0, scale))) {
        throw Error(Error::Kind::numeric, "weighted_affine_fit: singular normal equations");
    }
    AffineFit fit;
    fit.slope = (sw * swxy - swx * swy) / det;
    fit.intercept = (swy - fit.slope * swx) / sw;
    return fit;
}

double weighted_origin_coefficient(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    if (x.size() != y.size() || x.size() != w.size() || x.empty()) {
        throw Error(Error::Kind::data, "weighted_origin_coefficient: need equally sized non-empty x/y/w");
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(w[i] > 0)) throw Error(Error::Kind::data, "weighted_origin_coefficient: weights must be > 0");
        num += x[i] * w[i] * y[i];
        den += x[i] * w[i] * x[i];
    }
    if (!(std::abs(den) > 0)) {
        throw Error(Error::Kind::numeric, "weighted_origin_coefficient: singular normal equation");
    }
    return num / den;
}

double range_rate(std::span<const std::pair<int, double>> ranges_by_frame, RangeRateMode mode, double frame_rate_hz) {
    if (!(frame_rate_hz > 0)) {
        throw Error(Error::Kind::data, "range_rate: frame rate must be > 0");
    }
    std::vector<double> xs, ys, ws;
    for (const auto& [idx, r] : ranges_by_frame) {
        if (!(r > 0)) {
            throw Error(Error::Kind::data, "range_rate: estimated range <= 0, reciprocal weight undefined");
        }
        xs.push_back(static_cast<double>(idx));
        ys.push_back(r);
        ws.push_back(1.0 / r);
    }
    if (xs.size() < 2) {
        throw Error(Error::Kind::data, "range_rate: need at least 2 valid frames");
    }
    if (mode == RangeRateMode::paper_literal) {
        return weighted_origin_coefficient(xs, ys, ws) * frame_rate_hz;
    }
    std::vector<double> taus(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) taus[i] = xs[i] / frame_rate_hz;
    return weighted_affine_fit(taus, ys, ws).slope;
}

}  // namespace lca::gap
