#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lca {

enum class RoadClass { highway, other };

// One time step of a driving trace. Channels that can have no return (radar,
// ramp distance) are optionals; "no lead vehicle" is not the same as a lead
// at 0 m.
struct TraceSample {
    double t = 0;                 // seconds, strictly increasing within a trip
    double speed = 0;             // m/s
    double lane_offset = 0;       // m from current-lane center, positive = toward left
    double lane_width = 0;        // m, width of the current lane
    std::optional<double> dist_to_next_onramp;  // m ahead, absent when none known
    std::optional<double> lead_range;           // m, forward radar
    std::optional<double> lead_range_rate;      // m/s, negative = closing on lead
    std::vector<double> right_targets;          // longitudinal offsets of right-lane radar targets, m, positive = ahead
    bool daytime = true;
    RoadClass road_class = RoadClass::highway;
};

struct Trip {
    std::string trip_id;
    double sample_rate = 0;      // Hz
    double cam_to_rear = 0;      // m, rear camera to trailer rear edge
    double vehicle_width = 0;    // m
    double lane_width_true = 0;  // m, surveyed lane width used as range reference
    std::vector<TraceSample> samples;
};

struct CameraIntrinsics {
    double fx = 0, fy = 0;       // focal lengths, px
    double skew = 0;
    double cx = 0, cy = 0;       // principal point, px
    double k1 = 0, k2 = 0, k3 = 0;  // radial distortion
    double p1 = 0, p2 = 0;          // tangential distortion
};

// One invariant violation found in a trip. sample_index is -1 for trip-level
// findings. Violations are data, not errors: validate_trip never throws.
struct Violation {
    long sample_index = -1;
    std::string field;
    std::string message;
};

double mph_to_mps(double mph);

std::vector<Violation> validate_trip(const Trip& trip);

Trip load_trip(const std::filesystem::path& path);
void save_trip(const Trip& trip, const std::filesystem::path& path);

CameraIntrinsics load_camera(const std::filesystem::path& path);
void save_camera(const CameraIntrinsics& cam, const std::filesystem::path& path);

const char* road_class_name(RoadClass rc);
RoadClass road_class_from_name(const std::string& name, long line_no);

}  // namespace lca
