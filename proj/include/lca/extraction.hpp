#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lca/trace.hpp"

namespace lca::extraction {

enum class Direction { left, right };
enum class LaneChangeClass { MLC, DLC, Ambiguous, Other };

const char* direction_name(Direction d);
const char* class_name(LaneChangeClass c);
LaneChangeClass class_from_name(const std::string& name, long line_no);

// Stage boundaries of one lane change, seconds. Head runs from the 10 cm
// offset to first encroachment on the lane line, cross until the vehicle has
// fully crossed, tail until it settles within 10 cm of the destination-lane
// center. t_cross_start == t_cross_end only in the degenerate zero-width case.
struct StageTiming {
    double t_head_start = 0;
    double t_cross_start = 0;
    double t_cross_end = 0;
    double t_tail_end = 0;

    double d_head() const { return t_cross_start - t_head_start; }
    double d_cross() const { return t_cross_end - t_cross_start; }
    double d_tail() const { return t_tail_end - t_cross_end; }
    bool ordered() const {
        return t_head_start < t_cross_start && t_cross_start <= t_cross_end && t_cross_end < t_tail_end;
    }
};

struct LaneChangeEvent {
    std::string trip_id;
    std::string event_id;
    Direction direction = Direction::left;
    LaneChangeClass classification = LaneChangeClass::Other;
    StageTiming stage;
    double speed_at_cross = 0;
};

// A raw boundary crossing found in the lane-offset channel. switch_index is
// the last sample before the offset reference jumps to the destination lane.
struct Candidate {
    Direction direction = Direction::left;
    double t_boundary_cross = 0;
    std::size_t switch_index = 0;
};

struct ExtractionConfig {
    double ramp_window_m = 300.0;
    double lead_range_min_m = 1.0;
    double lead_range_max_m = 100.0;
    double lead_rate_min_mps = -10.0;
    double lead_rate_max_mps = 2.5;
    double pass_window_s = 60.0;
    double speed_min_mph = 55.0;
    double speed_max_mph = 63.0;
    double dlc_lookback_s = 5.0;
    double offset_threshold_m = 0.10;
    double head_hysteresis_m = 0.02;
    double pass_gate_m = 10.0;  // max per-sample jump when tracking a right-side target
};

// One candidate per lane-offset reference switch: the channel jumps by about
// one lane width when the tracker re-anchors to the destination lane.
std::vector<Candidate> detect_lane_changes(const Trip& trip);

// Stage boundaries around a candidate, on the offset signal rebuilt relative
// to the original lane center. Throws an incomplete-event error naming the
// boundary the trajectory never reaches.
StageTiming segment_stages(const Candidate& candidate, const Trip& trip,
                           const ExtractionConfig& cfg = ExtractionConfig{});

// Highway + daytime + speed band, all at the sample nearest t_cross_start.
bool filter_context(const Candidate& candidate, const StageTiming& stage, const Trip& trip,
                    const ExtractionConfig& cfg);

LaneChangeClass classify(const Candidate& candidate, const StageTiming& stage, const Trip& trip,
                         const ExtractionConfig& cfg);

struct ExtractionCounts {
    std::size_t candidates = 0;
    std::size_t context_filtered = 0;
    std::size_t incomplete = 0;
};

// Full per-trip pipeline: detect, segment, filter, classify.
std::vector<LaneChangeEvent> extract_events(const Trip& trip, const ExtractionConfig& cfg,
                                            ExtractionCounts* counts = nullptr);

void save_events(std::span<const LaneChangeEvent> events, const std::filesystem::path& path);
std::vector<LaneChangeEvent> load_events(const std::filesystem::path& path);

}  // namespace lca::extraction
