#include "lca/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "lca/error.hpp"
#include "lca/record.hpp"

namespace lca::synth {

void SynthConfig::validate() const {
    auto bad = [](const std::string& field, const std::string& why) {
        throw Error(Error::Kind::usage, "synth config: field '" + field + "' " + why);
    };
    if (n_mlc < 0) bad("n_mlc", "must be >= 0");
    if (n_dlc < 0) bad("n_dlc", "must be >= 0");
    if (n_ambiguous < 0) bad("n_ambiguous", "must be >= 0");
    if (n_other < 0) bad("n_other", "must be >= 0");
    if (!(sample_rate_hz > 0)) bad("sample_rate_hz", "must be > 0");
    if (!(lane_width_m > 0)) bad("lane_width_m", "must be > 0");
    if (!(vehicle_width_m > 0)) bad("vehicle_width_m", "must be > 0");
    if (vehicle_width_m >= lane_width_m - 0.25) bad("vehicle_width_m", "must leave room inside the lane");
    if (!(cam_to_rear_m >= 0)) bad("cam_to_rear_m", "must be >= 0");
    if (!(cam_height_m > 0)) bad("cam_height_m", "must be > 0");
    if (!(speed_min_mps < speed_max_mps)) bad("speed_min_mps", "window must satisfy low < high");
    if (!(cross_duration_min_s < cross_duration_max_s)) bad("cross_duration_min_s", "window must satisfy low < high");
    if (!(cross_duration_min_s > 0)) bad("cross_duration_min_s", "must be > 0");
    if (!(mlc_cross_scale > 0)) bad("mlc_cross_scale", "must be > 0");
    if (!(gap_range_min_m < gap_range_max_m)) bad("gap_range_min_m", "window must satisfy low < high");
    if (!(gap_range_min_m > 0)) bad("gap_range_min_m", "must be > 0");
    if (!(gap_rate_sd_mps >= 0)) bad("gap_rate_sd_mps", "must be >= 0");
    if (!(gap_rate_min_mps < gap_rate_max_mps)) bad("gap_rate_min_mps", "window must satisfy low < high");
    if (!(pixel_noise_px >= 0)) bad("pixel_noise_px", "must be >= 0");
    if (frame_drop_probability < 0 || frame_drop_probability > 1) bad("frame_drop_probability", "must be in [0,1]");
}

double quintic_smoothstep(double s) {
    if (s <= 0) return 0;
    if (s >= 1) return 1;
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double quintic_crossing_fraction(double frac) {
    if (!(frac > 0 && frac < 1)) {
        throw Error(Error::Kind::data, "quintic_crossing_fraction: fraction must lie in (0,1)");
    }
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (quintic_smoothstep(mid) < frac) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

CameraIntrinsics default_intrinsics() {
    CameraIntrinsics cam;
    cam.fx = 720.0;
    cam.fy = 720.0;
    cam.skew = 0.0;
    cam.cx = 640.0;
    cam.cy = 360.0;
    cam.k1 = -0.08;
    cam.k2 = 0.004;
    cam.k3 = 0.0;
    cam.p1 = 2e-4;
    cam.p2 = -1.5e-4;
    return cam;
}

gap::PixelPoint project_point(double x, double y, double z, const CameraIntrinsics& cam) {
    if (!(z > 0)) {
        throw Error(Error::Kind::geometry, "project_point: point behind camera (z <= 0)");
    }
    const double xn = x / z, yn = y / z;
    const double r2 = xn * xn + yn * yn;
    const double radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3));
    const double xd = xn * radial + 2.0 * cam.p1 * xn * yn + cam.p2 * (r2 + 2.0 * xn * xn);
    const double yd = yn * radial + cam.p1 * (r2 + 2.0 * yn * yn) + 2.0 * cam.p2 * xn * yn;
    return gap::PixelPoint{cam.fx * xd + cam.skew * yd + cam.cx, cam.fy * yd + cam.cy};
}

gap::FrameSet synthesize_frame(int frame_index, double range, double lateral_offset, double lane_width_true,
                               double cam_to_rear, const CameraIntrinsics& cam, const FrameGeometry& geom,
                               double sigma_px, bool dropped, std::uint64_t noise_seed) {
    const double b = lane_width_true;
    const double z_pov = range + cam_to_rear;
    if (!(z_pov > 0.5)) {
        throw Error(Error::Kind::geometry, "synthesize_frame: POV too close to the camera");
    }
    const double z_near = geom.near_depth_factor * z_pov;
    const double z_far = geom.far_depth_factor * z_pov;
    const double h = geom.cam_height_m;

    // destination-lane boundaries sit at b/2 and 3b/2 from the original lane
    // center; the POV is centered in the destination lane
    const double x_inner = 0.5 * b - lateral_offset;
    const double x_outer = 1.5 * b - lateral_offset;
    const double x_pov = b - lateral_offset;

    gap::FrameSet frame;
    frame.frame_index = frame_index;
    frame.valid = !dropped;
    frame.p_left_1 = project_point(x_inner, h, z_near, cam);
    frame.p_left_2 = project_point(x_inner, h, z_far, cam);
    frame.p_right_1 = project_point(x_outer, h, z_near, cam);
    frame.p_right_2 = project_point(x_outer, h, z_far, cam);
    frame.p_bottom = project_point(x_pov, h, z_pov, cam);

    if (sigma_px > 0) {
        std::mt19937_64 rng(noise_seed);
        std::normal_distribution<double> noise(0.0, sigma_px);
        for (gap::PixelPoint* p : {&frame.p_left_1, &frame.p_left_2, &frame.p_right_1, &frame.p_right_2, &frame.p_bottom}) {
            p->u += noise(rng);
            p->v += noise(rng);
        }
    }
    return frame;
}

std::vector<gap::FrameSet> synthesize_frames(const PlantedEvent& event, const Trip& trip,
                                             const CameraIntrinsics& cam, double sigma_px, double drop_p,
                                             std::uint64_t seed, const FrameGeometry& geom) {
    if (event.pov_trajectory.size() != 10) return {};

    // frames are the last 10 samples at or before the crossing-frame anchor
    const auto& ss = trip.samples;
    std::size_t anchor = 0;
    while (anchor + 1 < ss.size() && ss[anchor + 1].t <= event.t_anchor + 1e-9) ++anchor;
    if (anchor < 9) {
        throw Error(Error::Kind::data, "synthesize_frames: fewer than 10 samples before the crossing");
    }

    std::mt19937_64 drop_rng(mix_seed(seed, 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<gap::FrameSet> frames;
    frames.reserve(10);
    for (int j = 0; j < 10; ++j) {
        const std::size_t idx = anchor - 9 + static_cast<std::size_t>(j);
        const bool dropped = drop_p > 0 && unit(drop_rng) < drop_p;
        // pre-crossing samples still carry the original-lane offset reference
        const double lateral = ss[idx].lane_offset;
        frames.push_back(synthesize_frame(j + 1, event.pov_trajectory[static_cast<std::size_t>(j)], lateral,
                                          trip.lane_width_true, trip.cam_to_rear, cam, geom, sigma_px, dropped,
                                          mix_seed(seed, 1 + static_cast<std::uint64_t>(j))));
    }
    return frames;
}

namespace {

struct EventPlan {
    LaneChangeClass cls = LaneChangeClass::Other;
    double t0 = 0;      // quintic start
    double span = 0;    // quintic duration
    double t_head = 0, t_cs = 0, t_ce = 0, t_tail = 0;
    // POV behind in the destination lane
    bool has_pov = false;
    double r_cross = 0, r_rate = 0, t_anchor = 0;
    // forward lead vehicle (DLC condition a)
    bool has_lead = false;
    double lead_t0 = 0, lead_t1 = 0, lead_r0 = 0, lead_rate = 0;
    // right-side pass (DLC condition b): offset crosses zero downward
    bool has_pass = false;
    double pass_t_zero = 0, pass_speed = 0;
    // right-side merger that overtakes the SV (offset crosses zero upward)
    bool has_merger = false;
    double merger_t_zero = 0, merger_speed = 0;
    // upcoming on-ramp (MLC condition)
    bool has_ramp = false;
    double ramp_t0 = 0, ramp_dist_at_head = 0;
};

}  // namespace

GeneratedTrip generate_trip(const SynthConfig& config, const CameraIntrinsics& cam, std::uint64_t seed,
                            const std::string& trip_id) {
    config.validate();
    std::mt19937_64 rng(mix_seed(seed, 0x5ca1ab1e));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const double rate = config.sample_rate_hz;
    const double dt = 1.0 / rate;
    const double w_lane = config.lane_width_m;
    const double w_veh = config.vehicle_width_m;

    // crossing fractions of the quintic are fixed by lane and vehicle width
    const double s_head = quintic_crossing_fraction(0.10 / w_lane);
    const double s_cs = quintic_crossing_fraction((0.5 * w_lane - 0.5 * w_veh) / w_lane);
    const double s_ce = quintic_crossing_fraction((0.5 * w_lane + 0.5 * w_veh) / w_lane);
    const double s_tail = quintic_crossing_fraction((w_lane - 0.10) / w_lane);

    // class sequence, deterministically shuffled
    std::vector<LaneChangeClass> order;
    order.insert(order.end(), static_cast<std::size_t>(config.n_mlc), LaneChangeClass::MLC);
    order.insert(order.end(), static_cast<std::size_t>(config.n_dlc), LaneChangeClass::DLC);
    order.insert(order.end(), static_cast<std::size_t>(config.n_ambiguous), LaneChangeClass::Ambiguous);
    order.insert(order.end(), static_cast<std::size_t>(config.n_other), LaneChangeClass::Other);
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(std::floor(unit(rng) * static_cast<double>(i)));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }

    const double base_speed = uniform(config.speed_min_mps + 0.2, config.speed_max_mps - 0.2);

    std::vector<EventPlan> plans;
    double cursor = 0.0;
    for (LaneChangeClass cls : order) {
        EventPlan plan;
        plan.cls = cls;

        double d_cross = uniform(config.cross_duration_min_s, config.cross_duration_max_s);
        if (cls == LaneChangeClass::MLC || cls == LaneChangeClass::Ambiguous) d_cross *= config.mlc_cross_scale;
        plan.span = d_cross / (s_ce - s_cs);
        plan.t0 = cursor + uniform(14.0, 22.0);
        plan.t_head = plan.t0 + s_head * plan.span;
        plan.t_cs = plan.t0 + s_cs * plan.span;
        plan.t_ce = plan.t0 + s_ce * plan.span;
        plan.t_tail = plan.t0 + s_tail * plan.span;

        const bool is_mlc_like = cls == LaneChangeClass::MLC || cls == LaneChangeClass::Ambiguous;
        const bool is_dlc_like = cls == LaneChangeClass::DLC || cls == LaneChangeClass::Ambiguous;

        if (cls != LaneChangeClass::Other) {
            plan.has_pov = true;
            plan.r_cross = uniform(config.gap_range_min_m, config.gap_range_max_m);
            std::normal_distribution<double> rate_dist(
                config.gap_rate_mean_mps + (is_mlc_like ? config.mlc_rate_shift_mps : 0.0), config.gap_rate_sd_mps);
            const double frame_span = 9.0 * dt;
            for (int tries = 0; tries < 64; ++tries) {
                plan.r_rate = std::clamp(rate_dist(rng), config.gap_rate_min_mps, config.gap_rate_max_mps);
                if (plan.r_cross - std::max(0.0, plan.r_rate) * frame_span > 1.0) break;
                plan.r_rate = 0.0;
            }
        }

        if (is_mlc_like) {
            plan.has_ramp = true;
            plan.ramp_dist_at_head = uniform(120.0, 280.0);
            plan.ramp_t0 = plan.t_head - 15.0;
        }
        if (is_dlc_like) {
            plan.has_lead = true;
            plan.lead_t0 = plan.t_cs - 6.5;
            plan.lead_t1 = plan.t_cs + 0.3;
            plan.lead_r0 = uniform(31.0, 70.0);
            plan.lead_rate = uniform(-4.5, 1.5);
            plan.has_pass = true;
            plan.pass_t_zero = plan.t_ce + uniform(6.0, 45.0);
            plan.pass_speed = uniform(1.5, 6.0);
        }
        if (cls == LaneChangeClass::MLC) {
            // the yielded-to vehicle drifts past on the right: behind to ahead,
            // the direction a pass detector must ignore
            plan.has_merger = true;
            plan.merger_t_zero = plan.t_cs + uniform(-3.0, 6.0);
            plan.merger_speed = uniform(1.0, 4.0);
        }

        double end = plan.t_tail;
        if (plan.has_pass) end = std::max(end, plan.pass_t_zero + 3.0);
        cursor = end + uniform(4.0, 8.0);
        plans.push_back(plan);
    }

    GeneratedTrip gen;
    gen.trip.trip_id = trip_id;
    gen.trip.sample_rate = rate;
    gen.trip.cam_to_rear = config.cam_to_rear_m;
    gen.trip.vehicle_width = w_veh;
    gen.trip.lane_width_true = w_lane;

    const double total = cursor + 2.0;
    const std::size_t n_samples = static_cast<std::size_t>(std::floor(total * rate)) + 1;
    gen.trip.samples.reserve(n_samples);

    for (std::size_t i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / rate;
        TraceSample s;
        s.t = t;
        s.speed = base_speed + 0.12 * std::sin(0.35 * t);
        s.lane_width = w_lane;
        s.daytime = true;
        s.road_class = RoadClass::highway;

        for (const EventPlan& plan : plans) {
            if (t >= plan.t0 - 1e-12 && t <= plan.t0 + plan.span + 1e-12) {
                const double o = w_lane * quintic_smoothstep((t - plan.t0) / plan.span);
                s.lane_offset = o > 0.5 * w_lane ? o - w_lane : o;  // tracker re-anchors past the boundary
            }
            if (plan.has_ramp && t >= plan.ramp_t0) {
                const double d = plan.ramp_dist_at_head - base_speed * (t - plan.t_head);
                if (d > 0) s.dist_to_next_onramp = d;
            }
            if (plan.has_lead && t >= plan.lead_t0 && t <= plan.lead_t1) {
                s.lead_range = std::max(2.0, plan.lead_r0 + plan.lead_rate * (t - plan.t_cs));
                s.lead_range_rate = plan.lead_rate;
            }
            if (plan.has_pass) {
                const double x = plan.pass_speed * (plan.pass_t_zero - t);
                if (std::abs(x) <= 70.0) s.right_targets.push_back(x);
            }
            if (plan.has_merger) {
                const double x = plan.merger_speed * (t - plan.merger_t_zero);
                if (std::abs(x) <= 70.0) s.right_targets.push_back(x);
            }
        }
        gen.trip.samples.push_back(std::move(s));
    }

    // ground truth + frames
    for (std::size_t k = 0; k < plans.size(); ++k) {
        const EventPlan& plan = plans[k];
        PlantedEvent ev;
        ev.event_id = "e" + std::to_string(k + 1);
        ev.true_class = plan.cls;
        ev.t_head_start = plan.t_head;
        ev.t_cross_start = plan.t_cs;
        ev.t_cross_end = plan.t_ce;
        ev.t_tail_end = plan.t_tail;
        if (plan.has_pov) {
            const double anchor_t = std::floor(plan.t_cs * rate + 1e-9) / rate;
            ev.t_anchor = anchor_t;
            ev.true_range_at_cross = plan.r_cross;
            ev.true_range_rate = plan.r_rate;
            for (int j = 9; j >= 0; --j) {
                const double tj = anchor_t - static_cast<double>(j) * dt;
                ev.pov_trajectory.push_back(plan.r_cross + plan.r_rate * (tj - anchor_t));
            }
        }
        gen.events.push_back(ev);
        if (plan.has_pov) {
            gen.frames.push_back(synthesize_frames(gen.events.back(), gen.trip, cam, config.pixel_noise_px,
                                                   config.frame_drop_probability, mix_seed(seed, 7000 + k)));
        } else {
            gen.frames.emplace_back();
        }
    }
    return gen;
}

namespace {

void write_point(RecordLine& line, const char* key, const gap::PixelPoint& p) {
    line.field(key, std::string_view(format_double(p.u) + "," + format_double(p.v)));
}

gap::PixelPoint read_point(const Record& rec, const char* key) {
    const std::vector<double> v = rec.get_double_list(key);
    if (v.size() != 2) rec.fail(std::string("point '") + key + "' must be u,v");
    return gap::PixelPoint{v[0], v[1]};
}

}  // namespace

void save_truth(const GeneratedTrip& gen, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot write " + path.string());
    for (const PlantedEvent& ev : gen.events) {
        RecordLine line("event");
        line.field("trip_id", gen.trip.trip_id)
            .field("event_id", ev.event_id)
            .field("true_class", extraction::class_name(ev.true_class))
            .field("t_head_start", ev.t_head_start)
            .field("t_cross_start", ev.t_cross_start)
            .field("t_cross_end", ev.t_cross_end)
            .field("t_tail_end", ev.t_tail_end);
        if (ev.true_range_at_cross) line.field("true_range_at_cross", *ev.true_range_at_cross);
        if (ev.true_range_rate) line.field("true_range_rate", *ev.true_range_rate);
        if (!ev.pov_trajectory.empty()) {
            line.field("t_anchor", ev.t_anchor);
            line.field_list("pov_trajectory", ev.pov_trajectory);
        }
        f << line.str() << '\n';
    }
}

std::vector<TruthRecord> load_truth(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot open " + path.string());
    std::vector<TruthRecord> out;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        Record rec = parse_record(line, line_no);
        if (rec.tag != "event") rec.fail("expected event record");
        TruthRecord tr;
        tr.trip_id = rec.get_str("trip_id");
        tr.event.event_id = rec.get_str("event_id");
        tr.event.true_class = extraction::class_from_name(rec.get_str("true_class"), line_no);
        tr.event.t_head_start = rec.get_double("t_head_start");
        tr.event.t_cross_start = rec.get_double("t_cross_start");
        tr.event.t_cross_end = rec.get_double("t_cross_end");
        tr.event.t_tail_end = rec.get_double("t_tail_end");
        tr.event.true_range_at_cross = rec.opt_double("true_range_at_cross");
        tr.event.true_range_rate = rec.opt_double("true_range_rate");
        if (rec.has("pov_trajectory")) {
            tr.event.pov_trajectory = rec.get_double_list("pov_trajectory");
            tr.event.t_anchor = rec.get_double("t_anchor");
        }
        out.push_back(std::move(tr));
    }
    return out;
}

void save_frames(const GeneratedTrip& gen, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot write " + path.string());
    for (std::size_t k = 0; k < gen.events.size(); ++k) {
        const std::vector<gap::FrameSet>& frames = gen.frames[k];
        if (frames.empty()) continue;
        RecordLine header("frames");
        header.field("trip_id", gen.trip.trip_id)
            .field("event_id", gen.events[k].event_id)
            .field("t_anchor", gen.events[k].t_anchor)
            .field("n", frames.size());
        f << header.str() << '\n';
        for (const gap::FrameSet& fr : frames) {
            RecordLine line("f");
            line.field("index", fr.frame_index).field("valid", fr.valid);
            if (fr.valid) {
                write_point(line, "p_left_1", fr.p_left_1);
                write_point(line, "p_left_2", fr.p_left_2);
                write_point(line, "p_right_1", fr.p_right_1);
                write_point(line, "p_right_2", fr.p_right_2);
                write_point(line, "p_bottom", fr.p_bottom);
            }
            f << line.str() << '\n';
        }
    }
}

std::vector<FramesRecord> load_frames(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot open " + path.string());
    std::vector<FramesRecord> out;
    std::string line;
    long line_no = 0;
    long pending = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        Record rec = parse_record(line, line_no);
        if (rec.tag == "frames") {
            if (pending > 0) rec.fail("previous frames block incomplete");
            FramesRecord fr;
            fr.trip_id = rec.get_str("trip_id");
            fr.event_id = rec.get_str("event_id");
            fr.t_anchor = rec.get_double("t_anchor");
            pending = rec.get_long("n");
            out.push_back(std::move(fr));
        } else if (rec.tag == "f") {
            if (out.empty() || pending <= 0) rec.fail("frame line outside a frames block");
            gap::FrameSet fr;
            fr.frame_index = static_cast<int>(rec.get_long("index"));
            fr.valid = rec.get_bool("valid");
            if (fr.valid) {
                fr.p_left_1 = read_point(rec, "p_left_1");
                fr.p_left_2 = read_point(rec, "p_left_2");
                fr.p_right_1 = read_point(rec, "p_right_1");
                fr.p_right_2 = read_point(rec, "p_right_2");
                fr.p_bottom = read_point(rec, "p_bottom");
            }
            out.back().frames.push_back(fr);
            --pending;
        } else {
            rec.fail("unknown record tag '" + rec.tag + "'");
        }
    }
    if (pending > 0) {
        throw Error(Error::Kind::parse, path.string() + ": truncated frames block");
    }
    return out;
}

}  // namespace lca::synth
