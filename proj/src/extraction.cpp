#include "lca/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lca/error.hpp"
#include "lca/record.hpp"

namespace lca::extraction {

const char* direction_name(Direction d) {
    return d == Direction::left ? "left" : "right";
}

const char* class_name(LaneChangeClass c) {
    switch (c) {
        case LaneChangeClass::MLC: return "MLC";
        case LaneChangeClass::DLC: return "DLC";
        case LaneChangeClass::Ambiguous: return "Ambiguous";
        default: return "Other";
    }
}

LaneChangeClass class_from_name(const std::string& name, long line_no) {
    if (name == "MLC") return LaneChangeClass::MLC;
    if (name == "DLC") return LaneChangeClass::DLC;
    if (name == "Ambiguous") return LaneChangeClass::Ambiguous;
    if (name == "Other") return LaneChangeClass::Other;
    throw Error(Error::Kind::parse, "line " + std::to_string(line_no) + ": unknown classification '" + name + "'");
}

namespace {

std::size_t nearest_index(const Trip& trip, double t) {
    const auto& ss = trip.samples;
    auto it = std::lower_bound(ss.begin(), ss.end(), t,
                               [](const TraceSample& s, double tv) { return s.t < tv; });
    if (it == ss.begin()) return 0;
    if (it == ss.end()) return ss.size() - 1;
    const std::size_t hi = static_cast<std::size_t>(it - ss.begin());
    return (t - ss[hi - 1].t) <= (ss[hi].t - t) ? hi - 1 : hi;
}

[[noreturn]] void incomplete(const char* boundary) {
    throw Error(Error::Kind::data,
                std::string("segment_stages: incomplete event, trajectory never reaches the ") + boundary +
                    " boundary");
}

}  // namespace

std::vector<Candidate> detect_lane_changes(const Trip& trip) {
    std::vector<Candidate> out;
    const auto& ss = trip.samples;
    for (std::size_t i = 0; i + 1 < ss.size(); ++i) {
        const double w = ss[i].lane_width;
        const double delta = ss[i + 1].lane_offset - ss[i].lane_offset;
        if (std::abs(delta) <= 0.5 * w) continue;  // ordinary in-lane motion

        Candidate c;
        c.switch_index = i;
        if (delta < 0) {
            // reference jumped left: rebuild the pre-switch offset and find the
            // instant the center crossed +w/2
            c.direction = Direction::left;
            const double o0 = ss[i].lane_offset;
            const double o1 = ss[i + 1].lane_offset + w;
            const double frac = (o1 != o0) ? std::clamp((0.5 * w - o0) / (o1 - o0), 0.0, 1.0) : 0.0;
            c.t_boundary_cross = ss[i].t + frac * (ss[i + 1].t - ss[i].t);
        } else {
            c.direction = Direction::right;
            const double o0 = ss[i].lane_offset;
            const double o1 = ss[i + 1].lane_offset - w;
            const double frac = (o1 != o0) ? std::clamp((-0.5 * w - o0) / (o1 - o0), 0.0, 1.0) : 0.0;
            c.t_boundary_cross = ss[i].t + frac * (ss[i + 1].t - ss[i].t);
        }
        out.push_back(c);
    }
    return out;
}

namespace {

// Offset relative to the ORIGINAL lane center, folded to the candidate's
// direction: positive toward the destination lane, destination center at +w.
struct UnwrappedOffset {
    const Trip& trip;
    const Candidate& cand;
    double lane_w;

    double at(std::size_t i) const {
        const double o = trip.samples[i].lane_offset;
        const double s = cand.direction == Direction::left ? 1.0 : -1.0;
        return i > cand.switch_index ? s * o + lane_w : s * o;
    }
};

double interp_time(const Trip& trip, std::size_t i, double q0, double q1, double threshold) {
    const double t0 = trip.samples[i].t, t1 = trip.samples[i + 1].t;
    if (q1 == q0) return t0;
    const double frac = std::clamp((threshold - q0) / (q1 - q0), 0.0, 1.0);
    return t0 + frac * (t1 - t0);
}

}  // namespace

StageTiming segment_stages(const Candidate& cand, const Trip& trip, const ExtractionConfig& cfg) {
    const auto& ss = trip.samples;
    if (cand.switch_index + 1 >= ss.size()) incomplete("cross-end");
    const double w_lane = ss[cand.switch_index].lane_width;
    const UnwrappedOffset q{trip, cand, w_lane};

    const double theta_head = cfg.offset_threshold_m;
    const double hyst = cfg.offset_threshold_m - cfg.head_hysteresis_m;
    const double theta_cs = 0.5 * w_lane - 0.5 * trip.vehicle_width;
    const double theta_ce = 0.5 * w_lane + 0.5 * trip.vehicle_width;
    const std::size_t max_scan =
        static_cast<std::size_t>(std::max(1.0, 240.0 * trip.sample_rate));

    // anchor the head scan at the last sample comfortably inside the original lane
    std::size_t j0 = cand.switch_index;
    bool found_floor = false;
    for (std::size_t steps = 0; steps <= max_scan; ++steps) {
        if (q.at(j0) <= hyst) {
            found_floor = true;
            break;
        }
        if (j0 == 0) break;
        --j0;
    }
    if (!found_floor) incomplete("head-start");

    // last upward crossing of the 10 cm threshold, with hysteresis: a dip only
    // re-arms the anchor if it falls below threshold - hysteresis
    double t_head = 0;
    bool have_head = false;
    bool below = true;
    StageTiming st;
    bool have_cs = false, have_ce = false;

    std::size_t i = j0;
    for (std::size_t steps = 0; steps <= max_scan && i + 1 < ss.size(); ++steps, ++i) {
        const double q0 = q.at(i), q1 = q.at(i + 1);
        if (below && q1 > theta_head && !have_cs) {
            t_head = interp_time(trip, i, q0, q1, theta_head);
            have_head = true;
            below = false;
        } else if (!below && q1 <= hyst && !have_cs) {
            below = true;
        }
        if (!have_cs && q0 < theta_cs && q1 >= theta_cs) {
            st.t_cross_start = interp_time(trip, i, q0, q1, theta_cs);
            have_cs = true;
        }
        if (have_cs && !have_ce && q1 >= theta_ce) {
            st.t_cross_end = interp_time(trip, i, q0, q1, theta_ce);
            have_ce = true;
        }
        if (have_ce) {
            // first entry into the +-10 cm band around the destination center
            const double lo = w_lane - cfg.offset_threshold_m;
            const double hi = w_lane + cfg.offset_threshold_m;
            const bool in0 = q0 >= lo && q0 <= hi;
            const bool in1 = q1 >= lo && q1 <= hi;
            if (!in0 && in1) {
                const double threshold = q0 < lo ? lo : hi;
                const double t = interp_time(trip, i, q0, q1, threshold);
                if (t > st.t_cross_end) {
                    st.t_tail_end = t;
                    st.t_head_start = t_head;
                    if (!have_head) incomplete("head-start");
                    if (!st.ordered()) {
                        throw Error(Error::Kind::data, "segment_stages: stage ordering violated");
                    }
                    return st;
                }
            }
        }
    }
    if (!have_cs) incomplete("cross-start");
    if (!have_ce) incomplete("cross-end");
    incomplete("tail");
}

bool filter_context(const Candidate& /*candidate*/, const StageTiming& stage, const Trip& trip,
                    const ExtractionConfig& cfg) {
    const TraceSample& s = trip.samples[nearest_index(trip, stage.t_cross_start)];
    if (s.road_class != RoadClass::highway) return false;
    if (!s.daytime) return false;
    const double lo = mph_to_mps(cfg.speed_min_mph);
    const double hi = mph_to_mps(cfg.speed_max_mph);
    return s.speed >= lo && s.speed <= hi;
}

namespace {

bool mlc_condition(const StageTiming& stage, const Trip& trip, const ExtractionConfig& cfg) {
    const TraceSample& s = trip.samples[nearest_index(trip, stage.t_head_start)];
    return s.dist_to_next_onramp && *s.dist_to_next_onramp <= cfg.ramp_window_m;
}

bool dlc_lead_condition(const StageTiming& stage, const Trip& trip, const ExtractionConfig& cfg) {
    const double t_lo = stage.t_cross_start - cfg.dlc_lookback_s;
    const double t_hi = stage.t_cross_start;
    for (const TraceSample& s : trip.samples) {
        if (s.t < t_lo) continue;
        if (s.t > t_hi) break;
        if (!s.lead_range || !s.lead_range_rate) continue;
        if (*s.lead_range >= cfg.lead_range_min_m && *s.lead_range <= cfg.lead_range_max_m &&
            *s.lead_range_rate >= cfg.lead_rate_min_mps && *s.lead_range_rate <= cfg.lead_rate_max_mps) {
            return true;
        }
    }
    return false;
}

// A right-side pass: some right-adjacent radar target moves from ahead to
// behind. Targets are tracked frame to frame by nearest association within a
// gate, and the interpolated zero crossing must land in the pass window.
bool dlc_pass_condition(const StageTiming& stage, const Trip& trip, const ExtractionConfig& cfg) {
    const double t_lo = stage.t_cross_end;
    const double t_hi = stage.t_cross_end + cfg.pass_window_s;
    const auto& ss = trip.samples;
    for (std::size_t i = 0; i + 1 < ss.size(); ++i) {
        if (ss[i + 1].t < t_lo) continue;
        if (ss[i].t > t_hi) break;
        for (double x_next : ss[i + 1].right_targets) {
            if (x_next >= 0) continue;
            double best_prev = 0;
            bool found = false;
            for (double x_prev : ss[i].right_targets) {
                if (x_prev < 0) continue;
                if (std::abs(x_prev - x_next) > cfg.pass_gate_m) continue;
                if (!found || std::abs(x_prev - x_next) < std::abs(best_prev - x_next)) {
                    best_prev = x_prev;
                    found = true;
                }
            }
            if (!found) continue;
            const double frac = best_prev / (best_prev - x_next);
            const double t_zero = ss[i].t + frac * (ss[i + 1].t - ss[i].t);
            if (t_zero >= t_lo && t_zero <= t_hi) return true;
        }
    }
    return false;
}

}  // namespace

LaneChangeClass classify(const Candidate& cand, const StageTiming& stage, const Trip& trip,
                         const ExtractionConfig& cfg) {
    if (cand.direction != Direction::left) return LaneChangeClass::Other;
    const bool mlc = mlc_condition(stage, trip, cfg);
    const bool dlc = dlc_lead_condition(stage, trip, cfg) && dlc_pass_condition(stage, trip, cfg);
    if (mlc && dlc) return LaneChangeClass::Ambiguous;
    if (mlc) return LaneChangeClass::MLC;
    if (dlc) return LaneChangeClass::DLC;
    return LaneChangeClass::Other;
}

std::vector<LaneChangeEvent> extract_events(const Trip& trip, const ExtractionConfig& cfg,
                                            ExtractionCounts* counts) {
    std::vector<LaneChangeEvent> out;
    ExtractionCounts local;
    for (const Candidate& cand : detect_lane_changes(trip)) {
        ++local.candidates;
        StageTiming stage;
        try {
            stage = segment_stages(cand, trip, cfg);
        } catch (const Error&) {
            ++local.incomplete;
            continue;
        }
        if (!filter_context(cand, stage, trip, cfg)) {
            ++local.context_filtered;
            continue;
        }
        LaneChangeEvent ev;
        ev.trip_id = trip.trip_id;
        ev.event_id = "e" + std::to_string(out.size() + 1);
        ev.direction = cand.direction;
        ev.classification = classify(cand, stage, trip, cfg);
        ev.stage = stage;
        ev.speed_at_cross = trip.samples[nearest_index(trip, stage.t_cross_start)].speed;
        out.push_back(std::move(ev));
    }
    if (counts) *counts = local;
    return out;
}

void save_events(std::span<const LaneChangeEvent> events, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot write " + path.string());
    for (const LaneChangeEvent& ev : events) {
        RecordLine line("event");
        line.field("trip_id", ev.trip_id)
            .field("event_id", ev.event_id)
            .field("direction", direction_name(ev.direction))
            .field("classification", class_name(ev.classification))
            .field("t_head_start", ev.stage.t_head_start)
            .field("t_cross_start", ev.stage.t_cross_start)
            .field("t_cross_end", ev.stage.t_cross_end)
            .field("t_tail_end", ev.stage.t_tail_end)
            .field("d_head", ev.stage.d_head())
            .field("d_cross", ev.stage.d_cross())
            .field("d_tail", ev.stage.d_tail())
            .field("speed_at_cross", ev.speed_at_cross);
        f << line.str() << '\n';
    }
}

std::vector<LaneChangeEvent> load_events(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot open " + path.string());
    std::vector<LaneChangeEvent> out;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        Record rec = parse_record(line, line_no);
        if (rec.tag != "event") rec.fail("expected event record");
        LaneChangeEvent ev;
        ev.trip_id = rec.get_str("trip_id");
        ev.event_id = rec.get_str("event_id");
        ev.direction = rec.get_str("direction") == "right" ? Direction::right : Direction::left;
        ev.classification = class_from_name(rec.get_str("classification"), line_no);
        ev.stage.t_head_start = rec.get_double("t_head_start");
        ev.stage.t_cross_start = rec.get_double("t_cross_start");
        ev.stage.t_cross_end = rec.get_double("t_cross_end");
        ev.stage.t_tail_end = rec.get_double("t_tail_end");
        ev.speed_at_cross = rec.get_double("speed_at_cross");
        if (!ev.stage.ordered()) rec.fail("stage times out of order");
        out.push_back(std::move(ev));
    }
    return out;
}

}  // namespace lca::extraction
