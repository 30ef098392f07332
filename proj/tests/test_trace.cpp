#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <random>

#include "helpers.hpp"
#include "lca/error.hpp"
#include "lca/trace.hpp"

using namespace lca;

namespace {

Trip sample_trip() {
    Trip trip;
    trip.trip_id = "T42";
    trip.sample_rate = 10.0;
    trip.cam_to_rear = 5.25;
    trip.vehicle_width = 2.55;
    trip.lane_width_true = 3.5;
    for (int i = 0; i < 25; ++i) {
        TraceSample s;
        s.t = i / 10.0;
        s.speed = 26.0 + 0.01 * i;
        s.lane_offset = 0.01 * i - 0.05;
        s.lane_width = 3.5;
        s.daytime = i % 2 == 0;
        s.road_class = i < 20 ? RoadClass::highway : RoadClass::other;
        if (i % 3 == 0) s.dist_to_next_onramp = 250.0 - i;
        if (i % 4 == 0) {
            s.lead_range = 48.0 + 0.1 * i;
            s.lead_range_rate = -2.5;
        }
        if (i % 5 == 0) s.right_targets = {12.5, -3.25, 0.125};
        trip.samples.push_back(s);
    }
    return trip;
}

}  // namespace

TEST_CASE("mph conversion") {
    CHECK(mph_to_mps(55.0) == doctest::Approx(24.5872).epsilon(1e-12));
    CHECK(mph_to_mps(63.0) == doctest::Approx(28.16352).epsilon(1e-12));
    CHECK(mph_to_mps(0.0) == 0.0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> speed(-100.0, 100.0);
    for (int i = 0; i < 200; ++i) {
        const double a = speed(rng), b = speed(rng);
        CHECK(mph_to_mps(a + b) == doctest::Approx(mph_to_mps(a) + mph_to_mps(b)).epsilon(1e-12));
    }
}

TEST_CASE("save/load round trip is exact") {
    testutil::TempDir dir("trace");
    const Trip trip = sample_trip();
    const auto path = dir.path() / "trip.trace";
    save_trip(trip, path);
    const Trip back = load_trip(path);

    REQUIRE(back.samples.size() == trip.samples.size());
    CHECK(back.trip_id == trip.trip_id);
    CHECK(back.sample_rate == trip.sample_rate);
    CHECK(back.cam_to_rear == trip.cam_to_rear);
    CHECK(back.vehicle_width == trip.vehicle_width);
    CHECK(back.lane_width_true == trip.lane_width_true);
    for (std::size_t i = 0; i < trip.samples.size(); ++i) {
        const TraceSample& a = trip.samples[i];
        const TraceSample& b = back.samples[i];
        CHECK(a.t == b.t);
        CHECK(a.speed == b.speed);
        CHECK(a.lane_offset == b.lane_offset);
        CHECK(a.lane_width == b.lane_width);
        CHECK(a.daytime == b.daytime);
        CHECK(a.road_class == b.road_class);
        CHECK(a.dist_to_next_onramp == b.dist_to_next_onramp);
        CHECK(a.lead_range == b.lead_range);
        CHECK(a.lead_range_rate == b.lead_range_rate);
        CHECK(a.right_targets == b.right_targets);
    }

    // a second save is byte-identical
    const auto path2 = dir.path() / "trip2.trace";
    save_trip(back, path2);
    CHECK(testutil::read_file(path) == testutil::read_file(path2));
}

TEST_CASE("load rejects decreasing timestamps") {
    testutil::TempDir dir("trace_bad");
    const auto path = dir.path() / "bad.trace";
    {
        std::ofstream f(path);
        f << "trip trip_id=T1 sample_rate=10 cam_to_rear=5 vehicle_width=2.5 lane_width_true=3.5\n";
        f << "sample t=0.2 speed=26 lane_offset=0 lane_width=3.5 daytime=1 road_class=highway\n";
        f << "sample t=0.1 speed=26 lane_offset=0 lane_width=3.5 daytime=1 road_class=highway\n";
    }
    CHECK_THROWS_WITH_AS(load_trip(path), doctest::Contains("timestamps not increasing"), Error);
}

TEST_CASE("parse errors carry line numbers") {
    testutil::TempDir dir("trace_parse");
    const auto path = dir.path() / "bad.trace";
    {
        std::ofstream f(path);
        f << "trip trip_id=T1 sample_rate=10 cam_to_rear=5 vehicle_width=2.5 lane_width_true=3.5\n";
        f << "sample t=0 speed=26 lane_offset=0 lane_width=3.5 daytime=1 road_class=highway\n";
        f << "sample t=0.1 speed=oops lane_offset=0 lane_width=3.5 daytime=1 road_class=highway\n";
    }
    CHECK_THROWS_WITH_AS(load_trip(path), doctest::Contains("line 3"), Error);
}

TEST_CASE("validate_trip reports violations as data") {
    Trip trip = sample_trip();
    CHECK(validate_trip(trip).empty());

    trip.samples[7].lane_width = 0.0;
    trip.samples[13].speed = -1.0;
    const std::vector<Violation> v = validate_trip(trip);
    REQUIRE(v.size() == 2);
    CHECK(v[0].sample_index == 7);
    CHECK(v[0].field == "lane_width");
    CHECK(v[1].sample_index == 13);
    CHECK(v[1].message == "speed >= 0 violated");
}

TEST_CASE("validate_trip is total on odd input") {
    Trip trip;  // everything defaulted / empty
    const std::vector<Violation> v = validate_trip(trip);
    CHECK(!v.empty());

    trip.trip_id = "x";
    trip.sample_rate = -1;
    trip.samples.resize(3);
    CHECK(!validate_trip(trip).empty());
}

TEST_CASE("lead_range present must be positive") {
    Trip trip = sample_trip();
    trip.samples[4].lead_range = 0.0;
    const std::vector<Violation> v = validate_trip(trip);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "lead_range");
}

TEST_CASE("camera intrinsics file round trip") {
    testutil::TempDir dir("cam");
    CameraIntrinsics cam;
    cam.fx = 721.5;
    cam.fy = 719.25;
    cam.skew = 0.125;
    cam.cx = 640.5;
    cam.cy = 359.5;
    cam.k1 = -0.08;
    cam.k2 = 0.004;
    cam.k3 = -1e-4;
    cam.p1 = 2e-4;
    cam.p2 = -1.5e-4;
    const auto path = dir.path() / "camera.cam";
    save_camera(cam, path);
    const CameraIntrinsics back = load_camera(path);
    CHECK(back.fx == cam.fx);
    CHECK(back.fy == cam.fy);
    CHECK(back.skew == cam.skew);
    CHECK(back.cx == cam.cx);
    CHECK(back.cy == cam.cy);
    CHECK(back.k1 == cam.k1);
    CHECK(back.k2 == cam.k2);
    CHECK(back.k3 == cam.k3);
    CHECK(back.p1 == cam.p1);
    CHECK(back.p2 == cam.p2);
}
