// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chainkit/app.hpp"

using namespace chainkit;

namespace {

constexpr std::uint64_t kFleetSeed = 20240607;

unsigned worker_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return std::clamp(hw, 1u, 8u);
}

double rel_err(double x, double ref) { return std::abs(x - ref) / std::max(1.0, std::abs(ref)); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limit_s) {
    out.pass = false;
    out.detail += " (over time limit)";
  }
  if (!out.pass) ++failures;
  char timing[64];
  std::snprintf(timing, sizeof timing, "%.2fs/%.0fs", secs, limit_s);
  std::cout << (out.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << title << "  [" << timing << "]  "
            << out.detail << std::endl;
}

std::string tally_summary(const TallyMap& m) {
  std::ostringstream s;
  s << m.size() << " kinds, " << [&] {
    std::size_t n = 0;
    for (const auto& [_, t] : m) n += t.checks;
    return n;
  }() << " checks, " << total_violations(m) << " violations";
  for (const auto& [name, t] : m)
    if (t.violations && t.worst) s << "; " << name << " worst " << to_json(*t.worst).dump();
  return s.str();
}

bool tally_has(const TallyMap& m, std::initializer_list<const char*> names) {
  return std::all_of(names.begin(), names.end(), [&](const char* n) { return m.count(n) && m.at(n).checks > 0; });
}

Outcome constants_reproduction() {
  const auto c = constants_AB(4.0);
  const double e1 = rel_err(c.A, 32.0 / 3.0);
  const double e2 = rel_err(c.B, 16.0 / 3.0);
  const double e3 = rel_err(c.A + c.B, 16.0);
  const double e4 = rel_err(2.0 * chaining_coefficient(1.0, 1.0, 4.0), 32.0);
  // (A + B)(R) = 2R^2 / (R - 2) is smallest at R = 4.
  double grid_min = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 20000; ++i) {
    const auto g = constants_AB(2.0 + 0.001 * i);
    grid_min = std::min(grid_min, g.A + g.B);
  }
  const double worst = std::max({e1, e2, e3, e4});
  std::ostringstream d;
  d << "A(4)=" << c.A << " B(4)=" << c.B << " A+B=" << c.A + c.B << " 2(A+B)=" << 2.0 * (c.A + c.B)
    << " max rel err " << worst << ", grid min A+B " << grid_min;
  return {worst <= 1e-12 && grid_min >= 16.0 * (1.0 - 1e-12), d.str()};
}

Outcome power_optimum() {
  bool ok = true;
  std::ostringstream d;
  double worst_identity = 0.0, worst_membership = 0.0, worst_gap = std::numeric_limits<double>::infinity();
  for (double p : {1.1, 1.5, 2.0, 3.0, 5.0, 10.0}) {
    const auto pc = power_constants(p);
    const auto ab = constants_AB(pc.R);
    const double identity = rel_err(pc.a * ab.A + pc.b * ab.B, pc.Kcoef);
    const double membership = std::abs(power_membership_value(p, pc.a, pc.b) - 1.0);
    // Feasible (a, b) sit on the boundary b = (a q)^{-(p-1)} / p; search R in (2, 20] and a geometrically.
    double best = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 900; ++i) {
      const double R = 2.0 + 18.0 * i / 900.0;
      const auto c = constants_AB(R);
      for (int j = 0; j <= 600; ++j) {
        const double a = pc.a * std::pow(10.0, -3.0 + 6.0 * j / 600.0);
        const double b = std::pow(a * pc.q, -(p - 1.0)) / p;
        best = std::min(best, a * c.A + b * c.B);
      }
    }
    worst_identity = std::max(worst_identity, identity);
    worst_membership = std::max(worst_membership, membership);
    worst_gap = std::min(worst_gap, best / pc.Kcoef - 1.0);
    ok = ok && identity <= 1e-9 && membership <= 1e-12 && best >= pc.Kcoef * (1.0 - 1e-6);
  }
  const auto p2 = power_constants(2.0);
  const double kp2 = rel_err(p2.Kcoef, std::pow(5.0, 1.25));
  ok = ok && kp2 <= 1e-12;
  d << "max identity rel err " << worst_identity << ", max |membership - 1| " << worst_membership
    << ", min grid/Kcoef - 1 " << worst_gap << ", Kcoef_2 vs 5^(5/4) " << kp2;
  return {ok, d.str()};
}

Outcome lemma_suite(const std::vector<FleetMember>& fleet) {
  const auto r = run_lemma_fleet(fleet, default_lemma_configs(), kFleetSeed, worker_threads());
  const bool covered = tally_has(r.totals, {"radius_lipschitz", "radius_sum", "pairwise_radius_bound",
                                            "chained_radius_bound", "weighted_chain_sum", "telescoping", "nu_total",
                                            "normalizer_bound", "operator_properties", "nu_decomposition"});
  return {covered && total_violations(r.totals) == 0,
          std::to_string(r.spaces) + " spaces x " + std::to_string(r.configurations) + " parameter sets, " +
              tally_summary(r.totals)};
}

Outcome sobolev_suite(const std::vector<FleetMember>& fleet) {
  const auto totals = run_sobolev_fleet(fleet, 1000, kFleetSeed, worker_threads());
  const bool covered =
      tally_has(totals, {"pointwise_sobolev", "oscillation_bound", "young_oscillation_bound", "psi_deviation_bound",
                         "psi_oscillation_bound", "identity_oscillation_bound", "power_oscillation_bound_p1.5",
                         "power_oscillation_bound_p2", "power_oscillation_bound_p3"});
  return {covered && total_violations(totals) == 0, tally_summary(totals)};
}

Outcome process_suite(const std::vector<FleetMember>& fleet) {
  McConfig mc;
  mc.trials = 10000;
  mc.seed = kFleetSeed;
  const auto totals = run_process_fleet(fleet, mc, worker_threads());
  const bool covered = tally_has(totals, {"expected_sup_bound", "expected_oscillation_bound",
                                          "expected_psi_oscillation_bound", "net_oscillation_bound",
                                          "moment_oscillation_bound"});

  // Two points at unit deviation: the range is |Z| for a standard normal Z.
  const auto two = build_metric_space({{0.0, 1.0}, {1.0, 0.0}});
  const auto model = gaussian_from_metric(two, ModelKind::BrownianPath, ModelParams{{}, {0.0, 1.0}, {}});
  const auto est = estimate_sup_range(sample_paths(model, 100000, kFleetSeed, worker_threads()));
  const double target = std::sqrt(2.0 / std::acos(-1.0));
  const bool anchor = std::abs(est.mean - target) <= 3.0 * est.stderr;

  std::ostringstream d;
  d << tally_summary(totals) << "; E|Z| estimate " << est.mean << " +- " << est.stderr << " vs " << target;
  return {covered && anchor && total_violations(totals) == 0, d.str()};
}

Outcome determinism() {
  const std::string space = std::string(CHAINKIT_DATA_DIR) + "/grid_4x5.json";
  std::vector<RunConfig> configs;
  {
    RunConfig c;
    c.subcommand = "lemmas";
    c.fleet = R"({"count": 24, "max_points": 20})";
    c.seed = 7;
    configs.push_back(c);
  }
  {
    RunConfig c;
    c.subcommand = "verify-sobolev";
    c.space = space;
    c.trials = 300;
    c.seed = 11;
    configs.push_back(c);
  }
  {
    RunConfig c;
    c.subcommand = "verify-process";
    c.space = space;
    c.trials = 4000;
    c.seed = 13;
    c.subset_frac = 0.5;
    configs.push_back(c);
  }
  {
    RunConfig c;
    c.subcommand = "profile";
    c.space = space;
    c.orlicz = "power:1.5";
    configs.push_back(c);
  }
  std::size_t compared = 0;
  for (const auto& base : configs) {
    std::vector<std::string> outputs;
    for (unsigned threads : {1u, 1u, 3u, 8u}) {
      auto c = base;
      c.threads = threads;
      const auto rec = dispatch(c);
      outputs.push_back(render_report(rec, Format::Json) + render_report(rec, Format::Csv));
    }
    for (const auto& o : outputs) {
      if (o != outputs.front())
        return {false, base.subcommand + " report differs across repeats or thread counts"};
      ++compared;
    }
  }
  return {true, std::to_string(configs.size()) + " subcommands, " + std::to_string(compared) +
                    " reports byte-identical across repeats and 1/3/8 threads"};
}

}  // namespace

int main() {
  std::cout << "chainkit acceptance, " << worker_threads() << " worker threads" << std::endl;
  const auto fleet = generate_fleet(FleetConfig{200, 40, kFleetSeed});

  report(1, "constants reproduction", 1.0, constants_reproduction);
  report(2, "power optimum", 10.0, power_optimum);
  report(3, "exact lemma suite", 120.0, [&] { return lemma_suite(fleet); });
  report(4, "functional inequality suite", 300.0, [&] { return sobolev_suite(fleet); });
  report(5, "process suite", 600.0, [&] { return process_suite(fleet); });
  report(6, "determinism", 120.0, determinism);

  std::cout << (failures ? "FAILED " : "ALL PASSED ") << "(" << 6 - failures << "/6)" << std::endl;
  return failures ? 1 : 0;
}
