#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "chainkit/certificate.hpp"
#include "chainkit/chaining.hpp"
#include "chainkit/majorant.hpp"
#include "chainkit/metric.hpp"
#include "chainkit/orlicz.hpp"
#include "chainkit/parallel.hpp"
#include "chainkit/process.hpp"
#include "chainkit/rng.hpp"
#include "chainkit/sobolev.hpp"

namespace chainkit {

struct FleetConfig {
  std::size_t count = 200;
  std::size_t max_points = 40;
  std::uint64_t seed = 0;
};

struct FleetMember {
  std::size_t index;
  SpaceFamilySpec spec;
  GeneratedSpace g;
};

/// Seeded mix of path, grid2d, ultrametric-tree and random-euclidean spaces
/// with 2..max_points points; about half carry random (non-uniform) measures.
inline std::vector<FleetMember> generate_fleet(const FleetConfig& config) {
  if (config.max_points < 2) throw Error(ErrorCode::InvalidSpec, "fleet spaces need at least two points");
  std::vector<FleetMember> fleet;
  fleet.reserve(config.count);
  for (std::size_t i = 0; i < config.count; ++i) {
    Engine rng = make_engine(config.seed, i);
    auto uniform_int = [&](std::size_t lo, std::size_t hi) {
      return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::uniform_real_distribution<double> scale(0.25, 4.0);

    SpaceFamilySpec spec;
    spec.seed = derive_seed(config.seed, 1000003 + i);
    spec.measure = uniform_int(0, 1) ? MeasureKind::Random : MeasureKind::Uniform;
    spec.step = scale(rng);
    switch (i % 4) {
      case 0:
        spec.kind = FamilyKind::Path;
        spec.n = uniform_int(2, config.max_points);
        break;
      case 1: {
        spec.kind = FamilyKind::Grid2d;
        spec.rows = uniform_int(1, std::min<std::size_t>(6, config.max_points / 2));
        spec.cols = uniform_int(2, std::max<std::size_t>(2, config.max_points / spec.rows));
        break;
      }
      case 2: {
        spec.kind = FamilyKind::UltrametricTree;
        // (branching, depth) pairs with branching^depth leaves.
        std::vector<std::pair<std::size_t, std::size_t>> shapes;
        for (std::size_t b = 2; b <= config.max_points; ++b)
          for (std::size_t d = 1, leaves = b; leaves <= config.max_points; ++d, leaves *= b) shapes.emplace_back(b, d);
        const auto [b, d] = shapes[uniform_int(0, shapes.size() - 1)];
        spec.branching = b;
        spec.depth = d;
        spec.ratio = std::uniform_real_distribution<double>(1.0, 3.0)(rng);
        break;
      }
      default:
        spec.kind = FamilyKind::RandomEuclidean;
        spec.n = uniform_int(2, config.max_points);
        spec.dim = uniform_int(1, 3);
        break;
    }
    fleet.push_back(FleetMember{i, spec, generate_space(spec)});
  }
  return fleet;
}

inline Json member_context(const FleetMember& fm) {
  return Json{{"space", fm.index}, {"family", to_string(fm.spec.kind)}, {"n", fm.g.space.size()}};
}

/// One parameter choice for the exact lemma suite.
struct LemmaConfig {
  OrliczFn fn;
  double R;
};

/// phi in {identity, x^1.5, x^2, x^3} crossed with R in {3, 4, 8}, plus
/// identity at R = 2.
inline std::vector<LemmaConfig> default_lemma_configs() {
  std::vector<LemmaConfig> out;
  const std::vector<OrliczFn> fns{OrliczFn::identity(), OrliczFn::power(1.5), OrliczFn::power(2.0),
                                  OrliczFn::power(3.0)};
  for (const auto& fn : fns)
    for (double R : {3.0, 4.0, 8.0}) out.push_back({fn, R});
  out.push_back({OrliczFn::identity(), 2.0});
  return out;
}

inline constexpr double kLipschitzTolerance = 1e-12;
inline constexpr double kIdentityTolerance = 1e-9;
inline constexpr double kOperatorTolerance = 1e-12;

/// All exact lemmas for one (space, measure, phi, R). Returns one tally per lemma.
inline TallyMap run_lemma_suite(const MetricSpace& space, const ProbMeasure& m, const OrliczFn& fn, double R,
                                std::uint64_t seed, std::size_t telescoping_trials = 3) {
  TallyMap out;
  const auto prof = profile(space, m, fn);
  const auto radii = radii_table(space, m, fn, R, &prof.balls);
  const std::size_t n = space.size();
  const int top = radii.kmax + 1;

  // Radii are 1-Lipschitz at every level, including the first vanishing one.
  for (int k = radii.k0; k <= top; ++k) {
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = s + 1; t < n; ++t) {
        auto c = certify("radius_lipschitz", std::abs(radii(k, s) - radii(k, t)), space(s, t),
                         Json{{"k", k}, {"s", s}, {"t", t}});
        c.pass = c.slack >= -kLipschitzTolerance;
        out["radius_lipschitz"].add(c);
      }
  }

  for (const auto& c : radius_sum_check(prof, radii)) out["radius_sum"].add(c);

  const OperatorLadder ladder(space, m, radii);

  // Operator properties: stochastic rows, nonnegative entries, the base level
  // averages against m, levels past kmax are the identity.
  for (int k = radii.k0; k <= top + 1; ++k) {
    const auto& op = ladder.at(k);
    double err = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      double row = 0.0;
      for (std::size_t u = 0; u < n; ++u) {
        row += op(x, u);
        if (op(x, u) < 0) err = std::max(err, -op(x, u));
        if (k == radii.k0) err = std::max(err, std::abs(op(x, u) - m[u]));
        if (k > radii.kmax) err = std::max(err, std::abs(op(x, u) - (x == u ? 1.0 : 0.0)));
      }
      err = std::max(err, std::abs(row - 1.0));
    }
    auto c = certify("operator_properties", err, 0.0, Json{{"k", k}});
    c.pass = err <= kOperatorTolerance;
    out["operator_properties"].add(c);
  }

  for (int i = radii.k0; i <= top; ++i)
    for (int j = radii.k0; j <= top; ++j) out["pairwise_radius_bound"].add(check_pairwise_radius_bound(ladder, radii, i, j));

  for (const auto& c : check_lemma_2_2_all(ladder, radii, top)) out["chained_radius_bound"].add(c);

  if (R > 2.0)
    for (int mlevel = radii.k0 + 1; mlevel <= top; ++mlevel)
      for (const auto& c : check_weighted_chain_sum(radii, mlevel)) out["weighted_chain_sum"].add(c);

  Engine rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t trial = 0; trial < telescoping_trials; ++trial) {
    Vector f(n);
    for (auto& v : f) v = z(rng);
    double scale = 0.0;
    for (double v : f) scale = std::max(scale, std::abs(v));
    const double residual = check_telescoping(ladder, m, f, top);
    auto c = certify("telescoping", residual, 0.0, Json{{"m", top}, {"trial", trial}});
    c.pass = residual <= kIdentityTolerance * std::max(1.0, scale);
    out["telescoping"].add(c);
  }

  if (n >= 2) {
    const auto cm = build_chaining_measure(space, m, radii);
    const double total = cm.total();
    auto c = certify("nu_total", std::abs(total - 1.0), 0.0, Json{{"total", total}});
    c.pass = std::abs(total - 1.0) <= kIdentityTolerance;
    out["nu_total"].add(c);
    out["normalizer_bound"].add(check_M_bound(cm, prof));
    const double derr = nu_decomposition_error(cm, space, m, radii);
    auto d = certify("nu_decomposition", derr, 0.0);
    d.pass = derr <= kIdentityTolerance;
    out["nu_decomposition"].add(d);
  }
  return out;
}

/// One CSV-able row per (space, lemma, parameter set).
struct LemmaRow {
  std::size_t space;
  std::string family;
  std::size_t n;
  std::string phi;
  double R;
  std::string lemma;
  std::size_t checks;
  std::size_t violations;
  double min_slack;
};

struct LemmaFleetReport {
  TallyMap totals;
  std::vector<LemmaRow> rows;
  std::size_t spaces = 0;
  std::size_t configurations = 0;
};

inline LemmaFleetReport run_lemma_fleet(const std::vector<FleetMember>& fleet, const std::vector<LemmaConfig>& configs,
                                        std::uint64_t seed, unsigned threads = 1) {
  std::vector<std::vector<TallyMap>> results(fleet.size(), std::vector<TallyMap>(configs.size()));
  parallel_for(fleet.size() * configs.size(), threads, [&](std::size_t job) {
    const auto& fm = fleet[job / configs.size()];
    const auto& cfg = configs[job % configs.size()];
    results[job / configs.size()][job % configs.size()] =
        run_lemma_suite(fm.g.space, fm.g.measure, cfg.fn, cfg.R, derive_seed(seed, job));
  });
  LemmaFleetReport report;
  report.spaces = fleet.size();
  report.configurations = configs.size();
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const Json ctx = member_context(fleet[i]);
    for (std::size_t c = 0; c < configs.size(); ++c) {
      for (auto& [lemma, tally] : results[i][c]) {
        report.rows.push_back({fleet[i].index, std::string(to_string(fleet[i].spec.kind)), fleet[i].g.space.size(),
                               configs[c].fn.name(), configs[c].R, lemma, tally.checks, tally.violations,
                               tally.min_slack});
        if (tally.worst) {
          for (const auto& [k, v] : ctx.items()) tally.worst->witness[k] = v;
          tally.worst->witness["phi"] = configs[c].fn.name();
          tally.worst->witness["R"] = configs[c].R;
        }
        report.totals[lemma].merge(tally);
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Functional inequalities over the fleet

inline const std::vector<OrliczFn>& fleet_orlicz_functions() {
  static const std::vector<OrliczFn> fns{OrliczFn::identity(), OrliczFn::power(1.5), OrliczFn::power(2.0),
                                         OrliczFn::power(3.0)};
  return fns;
}

/// Space i uses phi = fleet_orlicz_functions()[i % 4] and R in {3, 4, 8} by i % 3.
inline TallyMap run_sobolev_fleet(const std::vector<FleetMember>& fleet, std::size_t trials, std::uint64_t seed,
                                  unsigned threads = 1) {
  std::vector<TallyMap> results(fleet.size());
  parallel_for(fleet.size(), threads, [&](std::size_t i) {
    const auto& fm = fleet[i];
    SuiteConfig cfg;
    cfg.trials = trials;
    cfg.seed = derive_seed(seed, fm.index);
    cfg.R = std::array<double, 3>{3.0, 4.0, 8.0}[fm.index % 3];
    const auto& fn = fleet_orlicz_functions()[fm.index % fleet_orlicz_functions().size()];
    results[i] = random_function_suite(fm.g.space, fm.g.measure, fn, cfg);
    const Json ctx = member_context(fm);
    for (auto& [_, t] : results[i])
      if (t.worst)
        for (const auto& [k, v] : ctx.items()) t.worst->witness[k] = v;
  });
  TallyMap totals;
  for (const auto& r : results) merge_into(totals, r);
  return totals;
}

// ---------------------------------------------------------------------------
// Process bounds over the fleet

/// Model scaled to the largest scale admissible for phi_p; constant models keep scale 1.
inline GaussianProcessModel scaled_for_power(const GaussianProcessModel& model, const MetricSpace& space, double p) {
  const double lam = max_admissible_scale(model, space, p);
  return model.with_scale(std::isfinite(lam) ? lam : 1.0);
}

inline std::vector<std::size_t> random_half_subset(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Engine rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::max<std::size_t>(1, n / 2));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Every process bound on one space with its natural Gaussian model.
inline TallyMap run_process_suite(const GeneratedSpace& g, const McConfig& mc, std::uint64_t subset_seed,
                                  const std::vector<double>& powers = {1.5, 2.0, 3.0}) {
  TallyMap out;
  const auto base = natural_model(g);
  const auto& space = g.space;
  const auto& m = g.measure;

  const auto model2 = scaled_for_power(base, space, 2.0);
  out["expected_sup_bound"].add(verify_thm_1_1(space, m, model2, mc, 2.0));
  out["expected_oscillation_bound"].add(verify_thm_3_1(space, m, model2, OrliczFn::power(2.0), 1.0, 1.0, 4.0, mc));

  for (double p : powers) {
    const auto fn = OrliczFn::power(p);
    const auto model = scaled_for_power(base, space, p);
    const auto psi = verify_psi(fn, PsiParams{fn, 0.0, 1.0});
    const Json ctx{{"p", p}};
    out["expected_psi_oscillation_bound"].add(verify_thm_3_2(space, m, model, fn, psi, 1.0, 1.0, 4.0, mc), &ctx);
    out["moment_oscillation_bound"].add(verify_remark_3_2(space, m, model, p, mc), &ctx);
  }

  const auto model1 = scaled_for_power(base, space, 1.0);
  out["net_oscillation_bound"].add(verify_remark_3_1(space, m, model1, OrliczFn::identity(), 0.0, 1.0, 2.0,
                                                     random_half_subset(space.size(), subset_seed), mc));
  return out;
}

inline TallyMap run_process_fleet(const std::vector<FleetMember>& fleet, const McConfig& mc, unsigned threads = 1) {
  std::vector<TallyMap> results(fleet.size());
  parallel_for(fleet.size(), threads, [&](std::size_t i) {
    const auto& fm = fleet[i];
    McConfig local = mc;
    local.seed = derive_seed(mc.seed, fm.index);
    local.threads = 1;
    results[i] = run_process_suite(fm.g, local, derive_seed(mc.seed ^ 0x5eed, fm.index));
    const Json ctx = member_context(fm);
    for (auto& [_, t] : results[i])
      if (t.worst)
        for (const auto& [k, v] : ctx.items()) t.worst->witness[k] = v;
  });
  TallyMap totals;
  for (const auto& r : results) merge_into(totals, r);
  return totals;
}

}  // namespace chainkit
