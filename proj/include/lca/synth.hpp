#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lca/extraction.hpp"
#include "lca/gap.hpp"
#include "lca/trace.hpp"

namespace lca::synth {

using extraction::LaneChangeClass;

// Ground truth for one planted lane change. Stage times come from
// root-finding on the quintic lateral profile; t_anchor is the timestamp of
// the crossing frame (frame 10) and true_range_at_cross is the POV range at
// that instant.
struct PlantedEvent {
    std::string event_id;
    LaneChangeClass true_class = LaneChangeClass::Other;
    double t_head_start = 0;
    double t_cross_start = 0;
    double t_cross_end = 0;
    double t_tail_end = 0;
    std::optional<double> true_range_at_cross;
    std::optional<double> true_range_rate;
    std::vector<double> pov_trajectory;  // POV-front to trailer-rear distance per frame
    double t_anchor = 0;
};

struct SynthConfig {
    int n_mlc = 1;
    int n_dlc = 1;
    int n_ambiguous = 0;
    int n_other = 0;
    double sample_rate_hz = 10.0;
    double lane_width_m = 3.5;
    double vehicle_width_m = 2.55;
    double cam_to_rear_m = 5.0;
    double cam_height_m = 2.0;
    double speed_min_mps = 25.0;   // stays inside the 55-63 mph study band
    double speed_max_mps = 27.4;
    double cross_duration_min_s = 1.8;  // sets the quintic span; head/tail follow from geometry
    double cross_duration_max_s = 3.4;
    double mlc_cross_scale = 0.9;       // MLC crossings run shorter
    double gap_range_min_m = 3.0;
    double gap_range_max_m = 110.0;
    double gap_rate_mean_mps = -0.8;
    double gap_rate_sd_mps = 2.4;
    double gap_rate_min_mps = -8.0;
    double gap_rate_max_mps = 6.0;
    double mlc_rate_shift_mps = -0.8;   // MLC gaps close a little faster on average
    double pixel_noise_px = 0.0;
    double frame_drop_probability = 0.0;
    std::uint64_t seed = 1;

    // throws a usage error naming the first offending field
    void validate() const;
};

struct GeneratedTrip {
    Trip trip;
    std::vector<PlantedEvent> events;
    std::vector<std::vector<gap::FrameSet>> frames;  // one 10-frame set per event with a POV
};

// Quintic smoothstep profile used for every planted lateral transition:
// zero velocity and acceleration at both ends, strictly monotone between.
double quintic_smoothstep(double s);
// Solve quintic_smoothstep(s) = frac by bisection; |error| < 1e-12 in s.
double quintic_crossing_fraction(double frac);

CameraIntrinsics default_intrinsics();

// Forward pinhole projection with radial-tangential distortion; synthesis
// side of the inverse pair with gap::undistort_point. Throws when z <= 0.
gap::PixelPoint project_point(double x, double y, double z, const CameraIntrinsics& cam);

struct FrameGeometry {
    double cam_height_m = 2.0;
    double near_depth_factor = 0.9;  // boundary sample depths relative to the POV depth
    double far_depth_factor = 1.8;
};

// One synthetic rear-camera frame: two points per lane boundary of the
// destination lane plus the POV front-bottom point, projected through the
// camera model. lateral_offset is the camera's distance from the original
// lane center, range the POV-front to trailer-rear gap.
gap::FrameSet synthesize_frame(int frame_index, double range, double lateral_offset, double lane_width_true,
                               double cam_to_rear, const CameraIntrinsics& cam, const FrameGeometry& geom,
                               double sigma_px, bool dropped, std::uint64_t noise_seed);

// The 10 frames ending at the last sample at or before t_cross_start.
std::vector<gap::FrameSet> synthesize_frames(const PlantedEvent& event, const Trip& trip,
                                             const CameraIntrinsics& cam, double sigma_px, double drop_p,
                                             std::uint64_t seed, const FrameGeometry& geom = FrameGeometry{});

// One trip with the configured number of planted events, exact ground truth,
// and per-event frame sets. Deterministic in (config, seed).
GeneratedTrip generate_trip(const SynthConfig& config, const CameraIntrinsics& cam, std::uint64_t seed,
                            const std::string& trip_id);

struct TruthRecord {
    std::string trip_id;
    PlantedEvent event;
};

struct FramesRecord {
    std::string trip_id;
    std::string event_id;
    double t_anchor = 0;
    std::vector<gap::FrameSet> frames;
};

void save_truth(const GeneratedTrip& gen, const std::filesystem::path& path);
std::vector<TruthRecord> load_truth(const std::filesystem::path& path);

void save_frames(const GeneratedTrip& gen, const std::filesystem::path& path);
std::vector<FramesRecord> load_frames(const std::filesystem::path& path);

}  // namespace lca::synth
