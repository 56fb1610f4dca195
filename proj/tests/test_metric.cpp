#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "chainkit/metric.hpp"

using namespace chainkit;
using Catch::Matchers::WithinAbs;

namespace {

// Brute-force closed ball mass by direct summation over all points.
double brute_ball_mass(const MetricSpace& s, const ProbMeasure& m, std::size_t x, double eps) {
  double acc = 0.0;
  for (std::size_t u = 0; u < s.size(); ++u)
    if (s(x, u) <= eps) acc += m[u];
  return acc;
}

}  // namespace

TEST_CASE("single point and two point spaces are valid", "[metric]") {
  const auto one = build_metric_space({{0.0}});
  CHECK(one.size() == 1);
  CHECK(diameter(one) == 0.0);

  const auto two = build_metric_space({{0.0, 1.0}, {1.0, 0.0}});
  CHECK(two.size() == 2);
  CHECK(diameter(two) == 1.0);
}

TEST_CASE("diameter of a three point path", "[metric]") {
  const auto s = build_metric_space({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
  CHECK(diameter(s) == 2.0);
}

TEST_CASE("triangle violation reports its witness", "[metric]") {
  try {
    build_metric_space({{0, 1, 3}, {1, 0, 1}, {3, 1, 0}});
    FAIL("expected a triangle violation");
  } catch (const TriangleViolationError& e) {
    CHECK(e.code() == ErrorCode::TriangleViolation);
    CHECK(e.i() == 0);
    CHECK(e.j() == 1);
    CHECK(e.k() == 2);
  }
}

TEST_CASE("distance validation errors", "[metric]") {
  auto code_of = [](const Matrix& d) {
    try {
      build_metric_space(d);
    } catch (const Error& e) {
      return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::ParseError;
  };
  CHECK(code_of({{0, 1}, {2, 0}}) == ErrorCode::AsymmetricDistance);
  CHECK(code_of({{0, -1}, {-1, 0}}) == ErrorCode::NegativeDistance);
  CHECK(code_of({{0, 0}, {0, 0}}) == ErrorCode::ZeroOffDiagonal);
  CHECK(code_of({{1, 1}, {1, 0}}) == ErrorCode::NonZeroDiagonal);
  CHECK(code_of({{0, 1}, {1}}) == ErrorCode::NotSquare);
  CHECK(code_of({{0, NAN}, {NAN, 0}}) == ErrorCode::NonFiniteDistance);
}

TEST_CASE("probability measure validation", "[metric]") {
  CHECK_THROWS_AS(ProbMeasure({0.5, 0.0, 0.5}), Error);
  CHECK_THROWS_AS(ProbMeasure({0.5, 0.6}), Error);
  const auto m = ProbMeasure::from_unnormalized({1.0, 3.0});
  CHECK_THAT(m[0], WithinAbs(0.25, 1e-15));
  CHECK_THAT(m[1], WithinAbs(0.75, 1e-15));
}

TEST_CASE("ball mass examples", "[metric]") {
  const auto two = build_metric_space({{0, 1}, {1, 0}});
  const auto u2 = ProbMeasure::uniform(2);
  CHECK(ball_mass(two, u2, 0, 0.0) == 0.5);
  CHECK(ball_mass(two, u2, 0, 1.0) == 1.0);

  const auto path = build_metric_space({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
  const ProbMeasure m({0.25, 0.5, 0.25});
  CHECK(ball_mass(path, m, 1, 0.5) == 0.5);
  CHECK_THROWS_AS(ball_mass(path, m, 1, -0.1), Error);
}

TEST_CASE("ball mass is monotone, right-continuous and matches direct summation", "[metric][property]") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SpaceFamilySpec spec;
    spec.kind = FamilyKind::RandomEuclidean;
    spec.n = 15;
    spec.dim = 2;
    spec.seed = seed;
    spec.measure = MeasureKind::Random;
    const auto g = generate_space(spec);
    for (std::size_t x = 0; x < g.space.size(); ++x) {
      double prev = 0.0;
      for (int i = 0; i <= 50; ++i) {
        const double eps = g.space.diameter() * i / 50.0;
        const double mass = ball_mass(g.space, g.measure, x, eps);
        CHECK(mass >= prev);
        CHECK_THAT(mass, WithinAbs(brute_ball_mass(g.space, g.measure, x, eps), 1e-12));
        prev = mass;
      }
      // At each distance the ball already contains the point at that distance.
      for (std::size_t u = 0; u < g.space.size(); ++u)
        CHECK(ball_mass(g.space, g.measure, x, g.space(x, u)) ==
              ball_mass(g.space, g.measure, x, std::nextafter(g.space(x, u), 1e300)));
    }
  }
}

TEST_CASE("ball profile steps match ball mass", "[metric]") {
  const auto path = build_metric_space({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
  const ProbMeasure m({0.25, 0.5, 0.25});
  const auto b = ball_profile(path, m, 0);
  REQUIRE(b.radius.size() == b.mass.size());
  for (std::size_t i = 0; i < b.radius.size(); ++i) CHECK(b.mass[i] == ball_mass(path, m, 0, b.radius[i]));
  CHECK(b.mass.back() == 1.0);
}

TEST_CASE("generated families", "[metric]") {
  SpaceFamilySpec path;
  path.kind = FamilyKind::Path;
  path.n = 2;
  path.step = 1.0;
  const auto p = generate_space(path);
  CHECK(p.space.size() == 2);
  CHECK(p.space(0, 1) == 1.0);
  CHECK(p.measure[0] == 0.5);

  SpaceFamilySpec tree;
  tree.kind = FamilyKind::UltrametricTree;
  tree.depth = 3;
  tree.branching = 2;
  const auto t = generate_space(tree);
  REQUIRE(t.space.size() == 8);
  for (std::size_t x = 0; x < 8; ++x)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t z = 0; z < 8; ++z)
        CHECK(t.space(x, z) <= std::max(t.space(x, y), t.space(y, z)));

  tree.depth = 1;
  CHECK(generate_space(tree).space.size() == 2);

  SpaceFamilySpec grid;
  grid.kind = FamilyKind::Grid2d;
  grid.rows = 2;
  grid.cols = 3;
  const auto gsp = generate_space(grid);
  CHECK(gsp.space.size() == 6);
  CHECK_THAT(gsp.space(0, 5), WithinAbs(std::sqrt(5.0), 1e-15));
}

TEST_CASE("random euclidean generation is deterministic", "[metric]") {
  SpaceFamilySpec spec;
  spec.kind = FamilyKind::RandomEuclidean;
  spec.n = 10;
  spec.dim = 2;
  spec.seed = 7;
  spec.measure = MeasureKind::Random;
  const auto a = generate_space(spec);
  const auto b = generate_space(spec);
  CHECK(a.space.to_matrix() == b.space.to_matrix());
  CHECK(a.measure.weights() == b.measure.weights());
  spec.seed = 8;
  CHECK(generate_space(spec).space.to_matrix() != a.space.to_matrix());
}

TEST_CASE("restriction and scaling", "[metric]") {
  const auto path = build_metric_space({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
  const std::vector<std::size_t> ends{0, 2};
  const auto sub = path.restrict_to(ends);
  CHECK(sub.size() == 2);
  CHECK(sub(0, 1) == 2.0);
  const auto big = path.scaled(3.0);
  CHECK(big(0, 2) == 6.0);
  CHECK(big.diameter() == 6.0);
}
