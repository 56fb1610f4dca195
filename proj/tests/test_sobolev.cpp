#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chainkit/sobolev.hpp"

using namespace chainkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MetricSpace two_point() { return build_metric_space({{0, 1}, {1, 0}}); }

GeneratedSpace sample_space(FamilyKind kind, std::uint64_t seed, std::size_t n = 16) {
  SpaceFamilySpec spec;
  spec.kind = kind;
  spec.n = n;
  spec.rows = 4;
  spec.cols = 4;
  spec.depth = 2;
  spec.branching = 4;
  spec.dim = 2;
  spec.seed = seed;
  spec.measure = MeasureKind::Random;
  return generate_space(spec);
}

const std::vector<FamilyKind> kFamilies{FamilyKind::Path, FamilyKind::Grid2d, FamilyKind::UltrametricTree,
                                        FamilyKind::RandomEuclidean};

}  // namespace

TEST_CASE("energy", "[sobolev]") {
  const auto s = two_point();
  const auto m = ProbMeasure::uniform(2);
  const auto cm = build_chaining_measure(s, m, OrliczFn::power(2.0), 4.0);
  CHECK(energy(Vector{0.0, 1.0}, cm, s, OrliczFn::power(2.0)) == 0.5);
  CHECK(energy(Vector{2.0, 2.0}, cm, s, OrliczFn::power(2.0)) == 0.0);
}

TEST_CASE("energy of Lipschitz functions", "[sobolev][property]") {
  const auto g = sample_space(FamilyKind::RandomEuclidean, 4);
  const auto fn = OrliczFn::power(2.0);
  const auto cm = build_chaining_measure(g.space, g.measure, fn, 4.0);
  double off_diagonal = 0.0;
  for (const auto& p : cm.pairs)
    if (p.u != p.v) off_diagonal += p.weight;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto f = generate_function(g.space, FnGenerator::LipschitzCone, seed).f;
    // Rescale to exactly 1-Lipschitz.
    double L = 0.0;
    for (std::size_t s = 0; s < f.size(); ++s)
      for (std::size_t t = s + 1; t < f.size(); ++t) L = std::max(L, std::abs(f[s] - f[t]) / g.space(s, t));
    for (auto& v : f) v /= L;
    CHECK(energy(f, cm, g.space, fn) <= fn(1.0) * off_diagonal * (1.0 + 1e-12));
  }
}

TEST_CASE("lipschitz cone functions respect their slope", "[sobolev]") {
  const auto g = sample_space(FamilyKind::Grid2d, 2);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto f = generate_function(g.space, FnGenerator::LipschitzCone, seed).f;
    for (std::size_t s = 0; s < f.size(); ++s)
      for (std::size_t t = 0; t < f.size(); ++t) CHECK(std::abs(f[s] - f[t]) <= 2.0 * g.space(s, t) + 1e-12);
  }
}

TEST_CASE("energy is monotone in phi", "[sobolev][property]") {
  const auto g = sample_space(FamilyKind::Path, 6);
  const auto cm = build_chaining_measure(g.space, g.measure, OrliczFn::power(2.0), 4.0);
  // x^2 <= x^3 + x pointwise.
  const auto small = OrliczFn::power(2.0);
  const auto big = OrliczFn::custom("x3+x", [](double x) { return x * x * x + x; });
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto f = generate_function(g.space, FnGenerator::GaussianIid, seed).f;
    CHECK(energy(f, cm, g.space, small) <= energy(f, cm, g.space, big));
  }
}

TEST_CASE("two point pointwise bound", "[sobolev]") {
  const auto s = two_point();
  const auto m = ProbMeasure::uniform(2);
  const auto setup = make_setup(s, m, OrliczFn::power(2.0), 4.0, 1.0, 1.0);
  const Vector f{0.0, 1.0};
  const double e = energy(f, setup.cm, s, setup.fn);
  const auto c = check_thm_1_2(f, 0, setup, m, e);
  CHECK(c.lhs == 0.5);
  CHECK_THAT(c.rhs, WithinRel(32.0 / 3.0 * std::sqrt(2.0) + 16.0 / 3.0 * std::sqrt(2.0) * 0.5, 1e-14));
  CHECK_THAT(c.rhs, WithinAbs(18.86, 0.01));
  CHECK(c.pass);

  const auto flat = check_thm_1_2(Vector{1.0, 1.0}, 1, setup, m, 0.0);
  CHECK(flat.lhs == 0.0);
  CHECK(flat.pass);
}

TEST_CASE("two point oscillation bounds", "[sobolev]") {
  const auto s = two_point();
  const auto m = ProbMeasure::uniform(2);
  const Vector f{0.0, 1.0};

  const auto id = make_setup(s, m, OrliczFn::identity(), 2.0, 0.0, 1.0);
  const double ei = energy(f, id.cm, s, id.fn);
  CHECK(ei == 0.5);
  const auto c11 = check_cor_1_1(f, id, ei);
  CHECK(c11.lhs == 1.0);
  CHECK(c11.rhs == 8.0);
  const auto r12 = check_remark_1_2(f, id, ei);
  CHECK(r12.rhs == 8.0);
  CHECK(r12.pass);

  const auto young = make_setup(s, m, OrliczFn::power(2.0), 4.0, 1.0, 1.0);
  const auto c12 = check_cor_1_2(f, young, energy(f, young.cm, s, young.fn));
  CHECK(c12.lhs == 1.0);
  CHECK_THAT(c12.rhs, WithinRel(32.0 * std::sqrt(2.0) * (2.0 / 3.0 + 1.0 / 6.0), 1e-14));
  CHECK_THAT(c12.rhs, WithinAbs(37.7, 0.05));
  CHECK(c12.witness["a_term_matches"] == true);
  CHECK(c12.witness["b_term_dominated"] == true);

  const auto flat = check_cor_1_1(Vector{3.0, 3.0}, young, 0.0);
  CHECK_THAT(flat.slack, WithinRel(2.0 * 32.0 / 3.0 * std::sqrt(2.0), 1e-14));
  CHECK_THAT(check_cor_1_2(Vector{3.0, 3.0}, young, 0.0).rhs, WithinRel(64.0 / 3.0 * std::sqrt(2.0), 1e-14));

  CHECK_THROWS_AS(check_cor_1_2(f, make_setup(s, m, OrliczFn::power(2.0), 3.0, 1.0, 1.0), 0.5), Error);
  const auto concave = OrliczFn::piecewise({{1.0, 2.0}, {2.0, 3.0}});
  CHECK_THROWS_AS(check_cor_1_2(f, make_setup(s, m, concave, 4.0, 1.0, 1.0), 0.5), Error);
  CHECK_THROWS_AS(make_setup(s, m, OrliczFn::identity(), 2.0, 1.0, 1.0), Error);
}

TEST_CASE("two point companion bounds", "[sobolev]") {
  const auto s = two_point();
  const auto m = ProbMeasure::uniform(2);
  const auto fn = OrliczFn::power(2.0);
  const auto setup = make_setup(s, m, fn, 4.0, 1.0, 1.0);
  const auto psi = verify_psi(fn, {fn, 0.0, 1.0});
  const Vector f{0.0, 1.0};
  const double e = energy(f, setup.cm, s, fn);
  const double K = 16.0 * std::sqrt(2.0);
  const auto c = check_thm_2_1(f, psi, setup, m, e);
  CHECK_THAT(c.lhs, WithinRel(std::pow(0.5 / K, 2.0), 1e-14));
  CHECK_THAT(c.lhs, WithinAbs(4.9e-4, 1e-5));
  CHECK(c.rhs == 0.5);
  CHECK(c.pass);
  const auto r = check_remark_2_1(f, psi, setup, e);
  CHECK_THAT(r.lhs, WithinRel(std::pow(1.0 / (2.0 * K), 2.0), 1e-14));
  CHECK(r.pass);
  CHECK(check_thm_2_1(Vector{1.0, 1.0}, psi, setup, m, 0.0).lhs == 0.0);

  CHECK_THROWS_AS(verify_psi(OrliczFn::identity(), {OrliczFn::power(2.0), 0.0, 1.0}), Error);
  const auto waived = waive_psi({OrliczFn::power(2.0), 0.0, 1.0});
  CHECK(check_thm_2_1(f, waived, setup, m, e).witness["psi_check_waived"] == true);
}

TEST_CASE("two point power bound", "[sobolev]") {
  const auto s = two_point();
  const auto m = ProbMeasure::uniform(2);
  const auto pc = power_constants(2.0);
  const auto setup = make_setup(s, m, OrliczFn::power(2.0), pc.R, pc.a, pc.b);
  const Vector f{0.0, 1.0};
  const double e = energy(f, setup.cm, s, setup.fn);
  CHECK(e == 0.5);
  const auto c = check_prop_2_1(f, setup, 2.0, e);
  CHECK(c.lhs == 1.0);
  const double Kp = std::pow(5.0, 1.25) * std::sqrt(2.0);
  CHECK_THAT(c.rhs, WithinRel(std::pow(2.0 * Kp, 2.0) * 0.5, 1e-13));
  CHECK_THAT(c.rhs, WithinAbs(223.6, 0.1));
  CHECK(c.pass);
  CHECK_THROWS_AS(check_prop_2_1(f, make_setup(s, m, OrliczFn::power(2.0), 4.0, 1.0, 1.0), 2.0, e), Error);
}

TEST_CASE("suite holds across families", "[sobolev][property]") {
  for (auto kind : kFamilies)
    for (const auto& fn : {OrliczFn::identity(), OrliczFn::power(1.5), OrliczFn::power(3.0)}) {
      SuiteConfig cfg;
      cfg.trials = 90;
      cfg.seed = 5;
      cfg.R = 3.0;
      const auto report = random_function_suite(sample_space(kind, 3).space, sample_space(kind, 3).measure, fn, cfg);
      CHECK(total_violations(report) == 0);
      CHECK(report.at("pointwise_sobolev").checks == 90);
      CHECK(report.count("young_oscillation_bound") == 1);
      CHECK(report.count("identity_oscillation_bound") == 1);
      CHECK(report.count("power_oscillation_bound_p1.5") == 1);
      CHECK((report.count("psi_deviation_bound") == 1) == fn.is_power());
    }
  // A non-Young phi in the growth class (0, 1) at R = 2.
  const auto concave = OrliczFn::custom("sqrt", [](double x) { return std::sqrt(x); });
  SuiteConfig cfg;
  cfg.trials = 60;
  cfg.R = 2.0;
  cfg.a = 2.0;
  CHECK_THROWS_AS(random_function_suite(two_point(), ProbMeasure::uniform(2), concave, cfg), Error);
  cfg.a = 0.0;
  cfg.b = 1.0;
  cfg.R = 3.0;
  const auto g = sample_space(FamilyKind::Path, 1);
  const auto r = random_function_suite(g.space, g.measure, concave, cfg);
  CHECK(r.count("young_oscillation_bound") == 0);
}

TEST_CASE("suite edge cases", "[sobolev]") {
  SuiteConfig cfg;
  cfg.trials = 0;
  CHECK(random_function_suite(two_point(), ProbMeasure::uniform(2), OrliczFn::power(2.0), cfg).empty());
  cfg.trials = 10;
  CHECK_THROWS_AS(random_function_suite(build_metric_space({{0.0}}), ProbMeasure::uniform(1), OrliczFn::power(2.0), cfg),
                  Error);
}

TEST_CASE("suite reports are deterministic and thread independent", "[sobolev]") {
  const auto g = sample_space(FamilyKind::Grid2d, 8);
  SuiteConfig cfg;
  cfg.trials = 200;
  cfg.seed = 77;
  const auto a = suite_to_json(random_function_suite(g.space, g.measure, OrliczFn::power(2.0), cfg)).dump();
  const auto b = suite_to_json(random_function_suite(g.space, g.measure, OrliczFn::power(2.0), cfg)).dump();
  cfg.threads = 4;
  const auto c = suite_to_json(random_function_suite(g.space, g.measure, OrliczFn::power(2.0), cfg)).dump();
  CHECK(a == b);
  CHECK(a == c);
  cfg.seed = 78;
  CHECK(suite_to_json(random_function_suite(g.space, g.measure, OrliczFn::power(2.0), cfg)).dump() != a);
}

TEST_CASE("adding a constant changes no certificate", "[sobolev][property]") {
  const auto g = sample_space(FamilyKind::RandomEuclidean, 12);
  const auto setup = make_setup(g.space, g.measure, OrliczFn::power(2.0), 4.0, 1.0, 1.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto f = generate_function(g.space, FnGenerator::UniformBox, seed).f;
    auto h = f;
    for (auto& v : h) v += 123.25;
    const double ef = energy(f, setup.cm, g.space, setup.fn);
    const double eh = energy(h, setup.cm, g.space, setup.fn);
    CHECK_THAT(eh, WithinRel(ef, 1e-9));
    const auto a = check_thm_1_2_all(f, setup, g.measure, ef);
    const auto b = check_thm_1_2_all(h, setup, g.measure, eh);
    CHECK(a.pass == b.pass);
    CHECK_THAT(b.lhs, WithinAbs(a.lhs, 1e-9));
    CHECK_THAT(check_cor_1_1(h, setup, eh).lhs, WithinAbs(check_cor_1_1(f, setup, ef).lhs, 1e-9));
  }
}

TEST_CASE("bounds are equivariant under distance scaling", "[sobolev][property]") {
  const auto g = sample_space(FamilyKind::Path, 3, 12);
  const double lam = 2.5;
  const auto scaled = g.space.scaled(lam);
  const auto base = make_setup(g.space, g.measure, OrliczFn::identity(), 2.0, 0.0, 1.0);
  const auto big = make_setup(scaled, g.measure, OrliczFn::identity(), 2.0, 0.0, 1.0);
  CHECK_THAT(big.prof.S, WithinRel(lam * base.prof.S, 1e-13));
  CHECK_THAT(big.prof.Sbar, WithinRel(lam * base.prof.Sbar, 1e-13));
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto f = generate_function(g.space, FnGenerator::GaussianIid, seed).f;
    auto h = f;
    for (auto& v : h) v *= lam;
    // |lam f(u) - lam f(v)| / (lam d) = |f(u) - f(v)| / d, so both sides scale by lam.
    const auto a = check_remark_1_2(f, base, energy(f, base.cm, g.space, base.fn));
    const auto b = check_remark_1_2(h, big, energy(h, big.cm, scaled, big.fn));
    CHECK(a.pass == b.pass);
    CHECK_THAT(b.lhs, WithinRel(lam * a.lhs, 1e-12));
  }
}
