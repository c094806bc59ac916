#include <cmath>

#include "doctest.h"
#include "mrexplore/config.hpp"
#include "mrexplore/geometry.hpp"
#include "mrexplore/rng.hpp"

using namespace mrx;

TEST_CASE("point to segment distance") {
  const Vec3 a{0, 0, 0}, b{2, 0, 0};
  CHECK(point_segment_distance({1, 1, 0}, a, b) == doctest::Approx(1.0));
  CHECK(point_segment_distance({-3, 4, 0}, a, b) == doctest::Approx(5.0));
  CHECK(point_segment_distance({1, 1, 1}, a, a) == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("segment to segment distance") {
  CHECK(segment_segment_distance({0, 0, 0}, {1, 0, 0}, {0, 1, 1}, {1, 1, 1}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(segment_segment_distance({0, -1, 0}, {0, 1, 0}, {-1, 0, 0}, {1, 0, 0}) == doctest::Approx(0.0));
  CHECK(segment_segment_distance({0, 0, 0}, {1, 0, 0}, {3, 0, 0}, {4, 0, 0}) == doctest::Approx(2.0));
}

TEST_CASE("polyline distance with a single vertex") {
  const std::vector<Vec3> one{{1, 1, 0}};
  CHECK(point_polyline_distance({4, 5, 0}, one) == doctest::Approx(5.0));
  const std::vector<Vec3> l{{0, 0, 0}, {2, 0, 0}, {2, 2, 0}};
  CHECK(point_polyline_distance({3, 1, 0}, l) == doctest::Approx(1.0));
}

TEST_CASE("polygon containment and simplicity") {
  const Polygon square({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
  CHECK(square.is_simple());
  CHECK(square.contains(2, 2));
  CHECK(square.contains(4, 2));
  CHECK(square.contains(0, 0));
  CHECK_FALSE(square.contains(5, 2));

  const Polygon bowtie({{0, 0}, {4, 4}, {4, 0}, {0, 4}});
  CHECK_FALSE(bowtie.is_simple());
  CHECK_FALSE(Polygon({{0, 0}, {1, 1}}).is_simple());
  CHECK_FALSE(Polygon({{0, 0}, {1, 1}, {2, 2}}).is_simple());
}

TEST_CASE("angle wrapping") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
}

TEST_CASE("plane fit recovers a tilted plane") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) pts.push_back({double(i), double(j), 0.5 * i + 1.0});
  const auto f = fit_plane(pts);
  CHECK_FALSE(f.degenerate);
  CHECK(f.gx == doctest::Approx(0.5));
  CHECK(f.gy == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(f.slope == doctest::Approx(std::atan(0.5)));
  CHECK(f.roughness == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(f.height_at(2, 2) == doctest::Approx(2.0));

  const std::vector<Vec3> line{{0, 0, 0}, {1, 1, 0}, {2, 2, 0}};
  CHECK(fit_plane(line).degenerate);
}

TEST_CASE("rng streams are reproducible and restorable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng s1 = Rng::stream(7, 1), s2 = Rng::stream(7, 2);
  CHECK_FALSE(s1 == s2);
  const auto saved = a.state();
  const double next = a.uniform();
  Rng c;
  c.set_state(saved);
  CHECK(c.uniform() == next);
  for (int i = 0; i < 1000; ++i) {
    const auto v = a.below(7);
    CHECK(v < 7);
    const double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("config overrides and validation") {
  MissionConfig c;
  c.apply_overrides("# comment\n\nsensor_range=4\nloss_probability = 0.3\nmode=coverage\n");
  CHECK(c.sensor_range == 4.0);
  CHECK(c.loss_probability == 0.3);
  CHECK(c.mode == MissionMode::kCoverage);
  CHECK(c.goal_distance() == 4.0);
  CHECK(c.safety() == doctest::Approx(0.75));
  CHECK_THROWS_AS(c.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("sensor_range", "abc"), ConfigError);

  MissionConfig bad;
  bad.goal_conflict_distance = 10.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  MissionConfig bad2;
  bad2.safety_distance = 0.1;
  CHECK_THROWS_AS(bad2.validate(), ConfigError);

  MissionConfig round;
  round.apply_overrides(c.to_text());
  CHECK(round.to_text() == c.to_text());
}

TEST_CASE("polygon text round trip") {
  const auto p = parse_polygon("0,0;4,0;4,3");
  REQUIRE(p.vertices().size() == 3);
  CHECK(p.vertices()[2] == Vec2{4, 3});
  CHECK(parse_polygon(format_polygon(p)).vertices() == p.vertices());
  CHECK_THROWS(parse_polygon("0,0;4"));
}
