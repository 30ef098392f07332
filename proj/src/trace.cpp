#include "lca/trace.hpp"

#include <cmath>
#include <fstream>

#include "lca/error.hpp"
#include "lca/record.hpp"

namespace lca {

double mph_to_mps(double mph) {
    return mph * 0.44704;
}

const char* road_class_name(RoadClass rc) {
    return rc == RoadClass::highway ? "highway" : "other";
}

RoadClass road_class_from_name(const std::string& name, long line_no) {
    if (name == "highway") return RoadClass::highway;
    if (name == "other") return RoadClass::other;
    throw Error(Error::Kind::parse, "line " + std::to_string(line_no) + ": unknown road_class '" + name + "'");
}

std::vector<Violation> validate_trip(const Trip& trip) {
    std::vector<Violation> out;
    auto add = [&](long idx, const char* field, std::string msg) {
        out.push_back(Violation{idx, field, std::move(msg)});
    };

    if (trip.trip_id.empty()) add(-1, "trip_id", "trip_id empty");
    if (!(trip.sample_rate > 0)) add(-1, "sample_rate", "sample_rate must be > 0");
    if (!(trip.cam_to_rear >= 0)) add(-1, "cam_to_rear", "cam_to_rear must be >= 0");
    if (!(trip.vehicle_width > 0)) add(-1, "vehicle_width", "vehicle_width must be > 0");
    if (!(trip.lane_width_true > 0)) add(-1, "lane_width_true", "lane_width_true must be > 0");

    const double dt_expected = trip.sample_rate > 0 ? 1.0 / trip.sample_rate : 0.0;
    for (std::size_t i = 0; i < trip.samples.size(); ++i) {
        const TraceSample& s = trip.samples[i];
        const long idx = static_cast<long>(i);
        if (!(s.speed >= 0)) add(idx, "speed", "speed >= 0 violated");
        if (!(s.lane_width > 0)) add(idx, "lane_width", "lane_width > 0 violated");
        if (s.lead_range && !(*s.lead_range > 0)) add(idx, "lead_range", "lead_range present but not > 0");
        if (i > 0) {
            const double dt = s.t - trip.samples[i - 1].t;
            if (!(dt > 0)) {
                add(idx, "t", "timestamps not increasing");
            } else if (trip.sample_rate > 0 && std::abs(dt - dt_expected) > 1e-6) {
                add(idx, "t", "sample spacing deviates from 1/sample_rate by more than 1e-6 s");
            }
        }
    }
    return out;
}

namespace {

void append_sample_line(std::string& out, const TraceSample& s) {
    RecordLine line("sample");
    line.field("t", s.t)
        .field("speed", s.speed)
        .field("lane_offset", s.lane_offset)
        .field("lane_width", s.lane_width)
        .field("daytime", s.daytime)
        .field("road_class", road_class_name(s.road_class));
    if (s.dist_to_next_onramp) line.field("dist_to_next_onramp", *s.dist_to_next_onramp);
    if (s.lead_range) line.field("lead_range", *s.lead_range);
    if (s.lead_range_rate) line.field("lead_range_rate", *s.lead_range_rate);
    if (!s.right_targets.empty()) line.field_list("right_targets", s.right_targets);
    out += line.str();
    out += '\n';
}

}  // namespace

void save_trip(const Trip& trip, const std::filesystem::path& path) {
    std::string out;
    out.reserve(trip.samples.size() * 96 + 128);
    RecordLine header("trip");
    header.field("trip_id", trip.trip_id)
        .field("sample_rate", trip.sample_rate)
        .field("cam_to_rear", trip.cam_to_rear)
        .field("vehicle_width", trip.vehicle_width)
        .field("lane_width_true", trip.lane_width_true);
    out += header.str();
    out += '\n';
    for (const TraceSample& s : trip.samples) append_sample_line(out, s);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot write " + path.string());
    f << out;
    if (!f) throw Error(Error::Kind::io, "write failed for " + path.string());
}

Trip load_trip(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot open " + path.string());

    Trip trip;
    bool have_header = false;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        Record rec = parse_record(line, line_no);
        if (rec.tag == "trip") {
            if (have_header) rec.fail("duplicate trip header");
            trip.trip_id = rec.get_str("trip_id");
            trip.sample_rate = rec.get_double("sample_rate");
            trip.cam_to_rear = rec.get_double("cam_to_rear");
            trip.vehicle_width = rec.get_double("vehicle_width");
            trip.lane_width_true = rec.get_double("lane_width_true");
            have_header = true;
        } else if (rec.tag == "sample") {
            if (!have_header) rec.fail("sample before trip header");
            TraceSample s;
            s.t = rec.get_double("t");
            s.speed = rec.get_double("speed");
            s.lane_offset = rec.get_double("lane_offset");
            s.lane_width = rec.get_double("lane_width");
            s.daytime = rec.get_bool("daytime");
            s.road_class = road_class_from_name(rec.get_str("road_class"), line_no);
            s.dist_to_next_onramp = rec.opt_double("dist_to_next_onramp");
            s.lead_range = rec.opt_double("lead_range");
            s.lead_range_rate = rec.opt_double("lead_range_rate");
            if (rec.has("right_targets")) s.right_targets = rec.get_double_list("right_targets");
            trip.samples.push_back(std::move(s));
        } else {
            rec.fail("unknown record tag '" + rec.tag + "'");
        }
    }
    if (!have_header) throw Error(Error::Kind::parse, path.string() + ": missing trip header");

    const std::vector<Violation> violations = validate_trip(trip);
    if (!violations.empty()) {
        const Violation& v = violations.front();
        std::string where = v.sample_index >= 0 ? " (sample " + std::to_string(v.sample_index) + ")" : "";
        throw Error(Error::Kind::data, path.string() + ": invalid trip, field '" + v.field + "': " + v.message + where);
    }
    return trip;
}

void save_camera(const CameraIntrinsics& cam, const std::filesystem::path& path) {
    RecordLine line("camera");
    line.field("fx", cam.fx).field("fy", cam.fy).field("skew", cam.skew).field("cx", cam.cx).field("cy", cam.cy);
    line.field("k1", cam.k1).field("k2", cam.k2).field("k3", cam.k3).field("p1", cam.p1).field("p2", cam.p2);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot write " + path.string());
    f << line.str() << '\n';
}

CameraIntrinsics load_camera(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot open " + path.string());
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        Record rec = parse_record(line, line_no);
        if (rec.tag != "camera") rec.fail("expected camera record");
        CameraIntrinsics cam;
        cam.fx = rec.get_double("fx");
        cam.fy = rec.get_double("fy");
        cam.skew = rec.get_double("skew");
        cam.cx = rec.get_double("cx");
        cam.cy = rec.get_double("cy");
        cam.k1 = rec.get_double("k1");
        cam.k2 = rec.get_double("k2");
        cam.k3 = rec.get_double("k3");
        cam.p1 = rec.get_double("p1");
        cam.p2 = rec.get_double("p2");
        if (!(cam.fx > 0) || !(cam.fy > 0)) rec.fail("focal lengths must be > 0");
        return cam;
    }
    throw Error(Error::Kind::parse, path.string() + ": no camera record");
}

}  // namespace lca
