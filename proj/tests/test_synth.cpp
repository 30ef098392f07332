#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "lca/error.hpp"
#include "lca/extraction.hpp"
#include "lca/gap.hpp"
#include "lca/synth.hpp"

using namespace lca;
using namespace lca::synth;
using extraction::LaneChangeClass;

TEST_CASE("quintic smoothstep and its crossing solver") {
    CHECK(quintic_smoothstep(0.0) == 0.0);
    CHECK(quintic_smoothstep(1.0) == 1.0);
    CHECK(quintic_smoothstep(0.5) == doctest::Approx(0.5).epsilon(1e-12));
    double prev = -1;
    for (double s = 0; s <= 1.0; s += 1.0 / 512.0) {
        const double q = quintic_smoothstep(s);
        CHECK(q >= prev);
        prev = q;
    }
    for (double frac : {0.01, 0.0285714, 0.25, 0.5, 0.75, 0.99}) {
        const double s = quintic_crossing_fraction(frac);
        CHECK(quintic_smoothstep(s) == doctest::Approx(frac).epsilon(1e-9));
    }
}

TEST_CASE("optical axis projects to the principal point") {
    CameraIntrinsics cam;
    cam.fx = 700.0;
    cam.fy = 700.0;
    cam.cx = 640.0;
    cam.cy = 360.0;
    const gap::PixelPoint px = project_point(0.0, 0.0, 1.0, cam);
    CHECK(px.u == doctest::Approx(640.0).epsilon(1e-15));
    CHECK(px.v == doctest::Approx(360.0).epsilon(1e-15));
    CHECK_THROWS_AS(project_point(0.0, 0.0, -1.0, cam), Error);
    CHECK_THROWS_AS(project_point(0.0, 0.0, 0.0, cam), Error);
}

TEST_CASE("generate_trip is deterministic bit for bit") {
    SynthConfig cfg;
    cfg.n_mlc = 1;
    cfg.n_dlc = 2;
    cfg.n_ambiguous = 1;
    cfg.n_other = 1;
    cfg.pixel_noise_px = 0.4;
    cfg.frame_drop_probability = 0.05;
    const CameraIntrinsics cam = default_intrinsics();

    testutil::TempDir dir("synth_det");
    for (int run = 0; run < 2; ++run) {
        const GeneratedTrip gen = generate_trip(cfg, cam, 12345, "T1");
        const auto sub = dir.path() / ("run" + std::to_string(run));
        std::filesystem::create_directories(sub);
        save_trip(gen.trip, sub / "t.trace");
        save_truth(gen, sub / "t.truth");
        save_frames(gen, sub / "t.frames");
    }
    CHECK(testutil::read_file(dir.path() / "run0/t.trace") == testutil::read_file(dir.path() / "run1/t.trace"));
    CHECK(testutil::read_file(dir.path() / "run0/t.truth") == testutil::read_file(dir.path() / "run1/t.truth"));
    CHECK(testutil::read_file(dir.path() / "run0/t.frames") == testutil::read_file(dir.path() / "run1/t.frames"));

    // a different seed produces different data
    const GeneratedTrip other = generate_trip(cfg, cam, 54321, "T1");
    const GeneratedTrip base = generate_trip(cfg, cam, 12345, "T1");
    CHECK(other.events[0].t_cross_start != base.events[0].t_cross_start);
}

TEST_CASE("events without a POV carry no range truth") {
    SynthConfig cfg;
    cfg.n_mlc = 0;
    cfg.n_dlc = 0;
    cfg.n_other = 1;
    const GeneratedTrip gen = generate_trip(cfg, default_intrinsics(), 7, "T1");
    REQUIRE(gen.events.size() == 1);
    CHECK(gen.events[0].true_class == LaneChangeClass::Other);
    CHECK_FALSE(gen.events[0].true_range_at_cross.has_value());
    CHECK_FALSE(gen.events[0].true_range_rate.has_value());
    CHECK(gen.events[0].pov_trajectory.empty());
    CHECK(gen.frames[0].empty());
}

TEST_CASE("noiseless frames reproduce the planted range and rate") {
    SynthConfig cfg;
    cfg.n_mlc = 0;
    cfg.n_dlc = 1;
    cfg.gap_range_min_m = 20.0;
    cfg.gap_range_max_m = 20.002;
    const CameraIntrinsics cam = default_intrinsics();
    const GeneratedTrip gen = generate_trip(cfg, cam, 31, "T1");
    REQUIRE(gen.events.size() == 1);
    const PlantedEvent& ev = gen.events[0];
    REQUIRE(ev.true_range_at_cross.has_value());
    CHECK(*ev.true_range_at_cross == doctest::Approx(20.001).epsilon(1e-4));

    const auto& frames = gen.frames[0];
    REQUIRE(frames.size() == 10);
    const gap::EventRange er = gap::event_range(frames, gen.trip.lane_width_true, gen.trip.cam_to_rear, cam);
    CHECK(std::abs(er.range_at_cross - *ev.true_range_at_cross) < 1e-6);

    std::vector<std::pair<int, double>> pairs;
    for (const gap::FrameSet& f : frames) {
        pairs.emplace_back(f.frame_index, gap::frame_range(f, gen.trip.lane_width_true, gen.trip.cam_to_rear, cam));
    }
    const double rate = gap::range_rate(pairs, gap::RangeRateMode::wls_affine, gen.trip.sample_rate);
    CHECK(std::abs(rate - *ev.true_range_rate) < 1e-6);
}

TEST_CASE("drop probability one invalidates every frame") {
    SynthConfig cfg;
    cfg.n_dlc = 1;
    cfg.n_mlc = 0;
    cfg.frame_drop_probability = 1.0;
    const GeneratedTrip gen = generate_trip(cfg, default_intrinsics(), 3, "T1");
    REQUIRE(gen.frames[0].size() == 10);
    for (const gap::FrameSet& f : gen.frames[0]) CHECK_FALSE(f.valid);
}

TEST_CASE("frame noise is seed-reproducible") {
    SynthConfig cfg;
    cfg.n_dlc = 1;
    cfg.n_mlc = 0;
    const CameraIntrinsics cam = default_intrinsics();
    const GeneratedTrip gen = generate_trip(cfg, cam, 5, "T1");
    const PlantedEvent& ev = gen.events[0];

    const auto a = synthesize_frames(ev, gen.trip, cam, 0.5, 0.0, 77);
    const auto b = synthesize_frames(ev, gen.trip, cam, 0.5, 0.0, 77);
    const auto c = synthesize_frames(ev, gen.trip, cam, 0.5, 0.0, 78);
    REQUIRE(a.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(a[i].p_bottom.u == b[i].p_bottom.u);
        CHECK(a[i].p_bottom.v == b[i].p_bottom.v);
    }
    CHECK(a[0].p_bottom.u != c[0].p_bottom.u);
}

TEST_CASE("planted stage times match extraction within 1.5 sample periods") {
    SynthConfig cfg;
    cfg.n_mlc = 2;
    cfg.n_dlc = 2;
    cfg.n_ambiguous = 1;
    cfg.n_other = 1;
    const GeneratedTrip gen = generate_trip(cfg, default_intrinsics(), 101, "T1");
    const auto candidates = extraction::detect_lane_changes(gen.trip);
    REQUIRE(candidates.size() == gen.events.size());

    const double tol = 1.5 / gen.trip.sample_rate;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const extraction::StageTiming st = extraction::segment_stages(candidates[i], gen.trip);
        const PlantedEvent& ev = gen.events[i];
        CHECK(std::abs(st.t_head_start - ev.t_head_start) < tol);
        CHECK(std::abs(st.t_cross_start - ev.t_cross_start) < tol);
        CHECK(std::abs(st.t_cross_end - ev.t_cross_end) < tol);
        CHECK(std::abs(st.t_tail_end - ev.t_tail_end) < tol);
    }
}

TEST_CASE("planted class counts are recovered exactly") {
    SynthConfig cfg;
    cfg.n_mlc = 3;
    cfg.n_dlc = 4;
    cfg.n_ambiguous = 2;
    cfg.n_other = 2;
    const GeneratedTrip gen = generate_trip(cfg, default_intrinsics(), 55, "T1");
    const auto events = extraction::extract_events(gen.trip, extraction::ExtractionConfig{});
    REQUIRE(events.size() == gen.events.size());

    std::size_t mlc = 0, dlc = 0, amb = 0, other = 0;
    for (const auto& e : events) {
        switch (e.classification) {
            case LaneChangeClass::MLC: ++mlc; break;
            case LaneChangeClass::DLC: ++dlc; break;
            case LaneChangeClass::Ambiguous: ++amb; break;
            default: ++other; break;
        }
    }
    CHECK(mlc == 3);
    CHECK(dlc == 4);
    CHECK(amb == 2);
    CHECK(other == 2);

    // classes agree event by event, matched on time overlap
    for (std::size_t i = 0; i < events.size(); ++i) {
        CHECK(events[i].classification == gen.events[i].true_class);
    }
}

TEST_CASE("a single planted MLC yields exactly one MLC event downstream") {
    SynthConfig cfg;
    cfg.n_mlc = 1;
    cfg.n_dlc = 0;
    const GeneratedTrip gen = generate_trip(cfg, default_intrinsics(), 202, "T1");
    const auto events = extraction::extract_events(gen.trip, extraction::ExtractionConfig{});
    REQUIRE(events.size() == 1);
    CHECK(events[0].classification == LaneChangeClass::MLC);
    CHECK(events[0].direction == extraction::Direction::left);
}

TEST_CASE("truth and frames files round trip") {
    SynthConfig cfg;
    cfg.n_mlc = 1;
    cfg.n_dlc = 1;
    cfg.pixel_noise_px = 0.25;
    const GeneratedTrip gen = generate_trip(cfg, default_intrinsics(), 11, "T9");

    testutil::TempDir dir("synth_io");
    save_truth(gen, dir.path() / "t.truth");
    save_frames(gen, dir.path() / "t.frames");

    const auto truth = load_truth(dir.path() / "t.truth");
    REQUIRE(truth.size() == gen.events.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(truth[i].trip_id == "T9");
        CHECK(truth[i].event.event_id == gen.events[i].event_id);
        CHECK(truth[i].event.true_class == gen.events[i].true_class);
        CHECK(truth[i].event.t_head_start == gen.events[i].t_head_start);
        CHECK(truth[i].event.true_range_at_cross == gen.events[i].true_range_at_cross);
        CHECK(truth[i].event.pov_trajectory == gen.events[i].pov_trajectory);
    }

    const auto frames = load_frames(dir.path() / "t.frames");
    REQUIRE(frames.size() == 2);  // both events carry a POV
    for (std::size_t k = 0; k < frames.size(); ++k) {
        REQUIRE(frames[k].frames.size() == 10);
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(frames[k].frames[i].p_bottom.u == gen.frames[k][i].p_bottom.u);
            CHECK(frames[k].frames[i].p_left_1.v == gen.frames[k][i].p_left_1.v);
        }
    }
}

TEST_CASE("config validation names the offending field") {
    SynthConfig cfg;
    cfg.frame_drop_probability = 1.5;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("frame_drop_probability"), Error);
    cfg.frame_drop_probability = 0.0;
    cfg.n_mlc = -1;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("n_mlc"), Error);
}

TEST_CASE("generated trips satisfy the trip invariants") {
    SynthConfig cfg;
    cfg.n_mlc = 2;
    cfg.n_dlc = 2;
    const GeneratedTrip gen = generate_trip(cfg, default_intrinsics(), 13, "T1");
    CHECK(validate_trip(gen.trip).empty());
}

TEST_CASE("a generated trip survives the trace file round trip field for field") {
    SynthConfig cfg;
    cfg.n_mlc = 1;
    cfg.n_dlc = 1;
    const GeneratedTrip gen = generate_trip(cfg, default_intrinsics(), 17, "T7");

    testutil::TempDir dir("synth_trip_io");
    save_trip(gen.trip, dir.path() / "t.trace");
    const Trip back = load_trip(dir.path() / "t.trace");
    REQUIRE(back.samples.size() == gen.trip.samples.size());
    CHECK(back.trip_id == gen.trip.trip_id);
    CHECK(back.sample_rate == gen.trip.sample_rate);
    CHECK(back.cam_to_rear == gen.trip.cam_to_rear);
    CHECK(back.lane_width_true == gen.trip.lane_width_true);
    for (std::size_t i = 0; i < back.samples.size(); ++i) {
        CHECK(back.samples[i].t == gen.trip.samples[i].t);
        CHECK(back.samples[i].speed == gen.trip.samples[i].speed);
        CHECK(back.samples[i].lane_offset == gen.trip.samples[i].lane_offset);
        CHECK(back.samples[i].dist_to_next_onramp == gen.trip.samples[i].dist_to_next_onramp);
        CHECK(back.samples[i].lead_range == gen.trip.samples[i].lead_range);
        CHECK(back.samples[i].lead_range_rate == gen.trip.samples[i].lead_range_rate);
        CHECK(back.samples[i].right_targets == gen.trip.samples[i].right_targets);
    }
}
