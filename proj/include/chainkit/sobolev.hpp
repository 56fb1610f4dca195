#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "chainkit/certificate.hpp"
#include "chainkit/chaining.hpp"
#include "chainkit/majorant.hpp"
#include "chainkit/metric.hpp"
#include "chainkit/orlicz.hpp"
#include "chainkit/parallel.hpp"
#include "chainkit/rng.hpp"

namespace chainkit {

/// int phi(|f(u) - f(v)| / d(u, v)) d nu, with 0/0 = 0 on the diagonal.
inline double energy(std::span<const double> f, const ChainingMeasure& cm, const MetricSpace& space,
                     const OrliczFn& fn) {
  double e = 0.0;
  for (const auto& p : cm.pairs) {
    if (p.u == p.v) continue;
    e += p.weight * fn(std::abs(f[p.u] - f[p.v]) / space(p.u, p.v));
  }
  return e;
}

/// Everything needed to evaluate the functional inequalities for one
/// (phi, R, a, b) choice on one space.
struct SobolevSetup {
  OrliczFn fn;
  double R;
  double a;
  double b;
  MajorantProfile prof;
  RadiiTable radii;
  ChainingMeasure cm;
};

inline SobolevSetup make_setup(const MetricSpace& space, const ProbMeasure& m, OrliczFn fn, double R, double a,
                               double b) {
  chaining_coefficient(a, b, R);  // rejects a > 0 at R = 2
  auto prof = profile(space, m, fn);
  auto radii = radii_table(space, m, fn, R, &prof.balls);
  auto cm = build_chaining_measure(space, m, radii);
  return SobolevSetup{std::move(fn), R, a, b, std::move(prof), std::move(radii), std::move(cm)};
}

namespace detail {

inline double range_of(std::span<const double> f) {
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  return *hi - *lo;
}

inline Json setup_witness(const SobolevSetup& s) {
  return Json{{"phi", s.fn.name()}, {"R", s.R}, {"a", s.a}, {"b", s.b}};
}

}  // namespace detail

/// |f(t) - int f dm| <= a A sigma(t) + b B Sbar energy(f).
inline BoundCertificate check_thm_1_2(std::span<const double> f, std::size_t t, const SobolevSetup& s,
                                      const ProbMeasure& m, double e) {
  const auto c = constants_AB(s.R);
  const double lhs = std::abs(f[t] - m.integrate(f));
  const double rhs = a_term(s.a, c) * s.prof.sigma[t] + s.b * c.B * s.prof.Sbar * e;
  auto w = detail::setup_witness(s);
  w["point"] = t;
  return certify("pointwise_sobolev", lhs, rhs, std::move(w));
}

/// Worst point of check_thm_1_2 over all t.
inline BoundCertificate check_thm_1_2_all(std::span<const double> f, const SobolevSetup& s, const ProbMeasure& m,
                                          double e) {
  const auto c = constants_AB(s.R);
  const double mean = m.integrate(f);
  const double a_coef = a_term(s.a, c);
  const double b_part = s.b * c.B * s.prof.Sbar * e;
  std::size_t worst = 0;
  double worst_score = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < f.size(); ++t) {
    const double rhs = a_coef * s.prof.sigma[t] + b_part;
    const double score = (rhs - std::abs(f[t] - mean)) / std::max(1.0, std::abs(rhs));
    if (score < worst_score) {
      worst_score = score;
      worst = t;
    }
  }
  return check_thm_1_2(f, worst, s, m, e);
}

/// sup |f(s) - f(t)| <= 2aA S + 2bB Sbar energy(f).
inline BoundCertificate check_cor_1_1(std::span<const double> f, const SobolevSetup& s, double e) {
  const auto c = constants_AB(s.R);
  const double rhs = 2.0 * a_term(s.a, c) * s.prof.S + 2.0 * s.b * c.B * s.prof.Sbar * e;
  return certify("oscillation_bound", detail::range_of(f), rhs, detail::setup_witness(s));
}

/// sup |f(s) - f(t)| <= 32 S (2/3 + energy/3), for Young phi with R = 4, a = b = 1.
inline BoundCertificate check_cor_1_2(std::span<const double> f, const SobolevSetup& s, double e) {
  if (!s.fn.is_young()) throw Error(ErrorCode::NotYoung, "the Young-function bound needs a Young function");
  if (s.R != 4.0) throw Error(ErrorCode::InvalidR, "the Young-function bound is stated for R = 4");
  const double S = s.prof.S;
  auto w = detail::setup_witness(s);
  // Coefficients of the general bound at R = 4 against the folded form.
  const auto c = constants_AB(4.0);
  w["a_term_matches"] = std::abs(2.0 * c.A * S - 32.0 * S * 2.0 / 3.0) <= 1e-12 * std::max(1.0, 32.0 * S);
  w["b_term_dominated"] = 2.0 * c.B * s.prof.Sbar <= 32.0 * S / 3.0 + slack_tolerance(32.0 * S / 3.0);
  return certify("young_oscillation_bound", detail::range_of(f), 32.0 * S * (2.0 / 3.0 + e / 3.0), std::move(w));
}

/// sup |f(s) - f(t)| <= 8 Sbar int |f(u) - f(v)| / d(u, v) d nu, with nu built
/// for phi = identity and R = 2.
inline BoundCertificate check_remark_1_2(std::span<const double> f, const SobolevSetup& s, double e) {
  if (s.fn.kind() != OrliczFn::Kind::Identity || s.R != 2.0)
    throw Error(ErrorCode::InvalidSpec, "the identity bound needs phi = identity and R = 2");
  return certify("identity_oscillation_bound", detail::range_of(f), 8.0 * s.prof.Sbar * e,
                 detail::setup_witness(s));
}

/// A psi condition that was either verified on the default grid or waived by the caller.
struct CheckedPsi {
  PsiParams params;
  bool waived = false;
  ConditionReport report;
};

inline CheckedPsi verify_psi(const OrliczFn& fn, PsiParams params) {
  CheckedPsi out{std::move(params), false, {}};
  out.report = check_psi_condition(fn, out.params);
  if (!out.report.pass)
    throw Error(ErrorCode::NotVerifiedPsi, "psi condition fails at x=" + std::to_string(out.report.witness_x) +
                                               ", y=" + std::to_string(out.report.witness_y));
  return out;
}

inline CheckedPsi waive_psi(PsiParams params) { return CheckedPsi{std::move(params), true, {}}; }

namespace detail {

inline Json psi_witness(const SobolevSetup& s, const CheckedPsi& psi, double K) {
  auto w = setup_witness(s);
  w["psi"] = psi.params.psi.name();
  w["alpha"] = psi.params.alpha;
  w["beta"] = psi.params.beta;
  w["psi_check_waived"] = psi.waived;
  w["K"] = K;
  return w;
}

inline double chaining_K(const SobolevSetup& s) {
  const double K = chaining_constant_K(s.a, s.b, s.R, s.prof.S);
  if (!(K > 0)) throw Error(ErrorCode::DegenerateK, "K vanishes; the space has a single point");
  return K;
}

}  // namespace detail

/// sup_t psi(|f(t) - int f dm| / K) <= alpha + beta energy(f), K = (aA + bB) S.
inline BoundCertificate check_thm_2_1(std::span<const double> f, const CheckedPsi& psi, const SobolevSetup& s,
                                      const ProbMeasure& m, double e) {
  const double K = detail::chaining_K(s);
  const double mean = m.integrate(f);
  double dev = 0.0;
  for (double v : f) dev = std::max(dev, std::abs(v - mean));
  return certify("psi_deviation_bound", psi.params.psi(dev / K), psi.params.alpha + psi.params.beta * e,
                 detail::psi_witness(s, psi, K));
}

/// sup_{s,t} psi(|f(s) - f(t)| / (2K)) <= alpha + beta energy(f).
inline BoundCertificate check_remark_2_1(std::span<const double> f, const CheckedPsi& psi, const SobolevSetup& s,
                                         double e) {
  const double K = detail::chaining_K(s);
  return certify("psi_oscillation_bound", psi.params.psi(detail::range_of(f) / (2.0 * K)),
                 psi.params.alpha + psi.params.beta * e, detail::psi_witness(s, psi, K));
}

/// sup |f(s) - f(t)|^p <= (2 K_p)^p int (|f(u) - f(v)| / d(u, v))^p d nu_p, with
/// nu_p built for phi_p at R = R_p.
inline BoundCertificate check_prop_2_1(std::span<const double> f, const SobolevSetup& s, double p, double e) {
  const auto pc = power_constants(p);
  if (!s.fn.is_power() || s.fn.power_exponent() != p)
    throw Error(ErrorCode::InvalidSpec, "the power bound needs phi = x^p");
  if (std::abs(s.R - pc.R) > 1e-12 * pc.R) throw Error(ErrorCode::InvalidR, "the power bound needs R = R_p");
  const double Kp = pc.Kcoef * s.prof.S;
  auto w = detail::setup_witness(s);
  w["p"] = p;
  w["Kp"] = Kp;
  return certify("power_oscillation_bound", std::pow(detail::range_of(f), p), std::pow(2.0 * Kp, p) * e,
                 std::move(w));
}

// ---------------------------------------------------------------------------
// Random function suite

enum class FnGenerator { UniformBox, GaussianIid, LipschitzCone };

inline std::string_view to_string(FnGenerator g) {
  switch (g) {
    case FnGenerator::UniformBox: return "uniform-box";
    case FnGenerator::GaussianIid: return "gaussian-iid";
    case FnGenerator::LipschitzCone: return "lipschitz-cone";
  }
  return "?";
}

struct FnSample {
  Vector f;
  FnGenerator generator;
  std::uint64_t seed;
};

/// lipschitz-cone draws f(t) = min_j (g_j + L d(t, a_j)) over 1 to 3 random
/// anchors a_j, which is exactly L-Lipschitz.
inline FnSample generate_function(const MetricSpace& space, FnGenerator gen, std::uint64_t seed) {
  Engine rng(seed);
  const std::size_t n = space.size();
  FnSample s{Vector(n), gen, seed};
  switch (gen) {
    case FnGenerator::UniformBox: {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (auto& v : s.f) v = u(rng);
      break;
    }
    case FnGenerator::GaussianIid: {
      std::normal_distribution<double> z(0.0, 1.0);
      for (auto& v : s.f) v = z(rng);
      break;
    }
    case FnGenerator::LipschitzCone: {
      std::uniform_int_distribution<std::size_t> anchor(0, n - 1);
      std::uniform_int_distribution<int> count(1, 3);
      std::uniform_real_distribution<double> slope(0.5, 2.0);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double L = slope(rng);
      const int J = count(rng);
      std::fill(s.f.begin(), s.f.end(), std::numeric_limits<double>::infinity());
      for (int j = 0; j < J; ++j) {
        const std::size_t a = anchor(rng);
        const double g = unit(rng) * L * space.diameter();
        for (std::size_t t = 0; t < n; ++t) s.f[t] = std::min(s.f[t], g + L * space(t, a));
      }
      break;
    }
  }
  return s;
}

struct SuiteConfig {
  std::size_t trials = 1000;
  std::vector<FnGenerator> generators{FnGenerator::UniformBox, FnGenerator::GaussianIid, FnGenerator::LipschitzCone};
  std::uint64_t seed = 0;
  double R = 4.0;
  double a = 1.0;
  double b = 1.0;
  std::optional<PsiParams> psi;       // defaults to psi = phi, alpha = 0, beta = 1 for power phi
  bool waive_psi_check = false;
  std::vector<double> powers{1.5, 2.0, 3.0};
  bool include_identity_bound = true;
  unsigned threads = 1;
};

using SuiteReport = TallyMap;

inline Json suite_to_json(const SuiteReport& r) { return to_json(r, "trials"); }

/// Runs every applicable functional inequality on `config.trials` random
/// functions. Trial i uses generator i mod |generators| and seed
/// derive_seed(config.seed, i), so the report is independent of threading.
inline SuiteReport random_function_suite(const MetricSpace& space, const ProbMeasure& m, const OrliczFn& fn,
                                         const SuiteConfig& config) {
  SuiteReport report;
  if (config.trials == 0 || config.generators.empty()) return report;
  if (space.size() < 2) throw Error(ErrorCode::DegenerateSpace, "functional inequalities need two or more points");

  const auto main = make_setup(space, m, fn, config.R, config.a, config.b);
  std::optional<SobolevSetup> young;
  if (fn.is_young() && !(config.R == 4.0 && config.a == 1.0 && config.b == 1.0))
    young = make_setup(space, m, fn, 4.0, 1.0, 1.0);
  const SobolevSetup* young_setup = fn.is_young() ? (young ? &*young : &main) : nullptr;

  std::optional<CheckedPsi> psi;
  if (config.psi || fn.is_power()) {
    PsiParams params = config.psi.value_or(PsiParams{fn, 0.0, 1.0});
    psi = config.waive_psi_check ? waive_psi(std::move(params)) : verify_psi(fn, std::move(params));
  }

  std::optional<SobolevSetup> identity;
  if (config.include_identity_bound) identity = make_setup(space, m, OrliczFn::identity(), 2.0, 0.0, 1.0);

  std::vector<SobolevSetup> power_setups;
  for (double p : config.powers) {
    const auto pc = power_constants(p);
    power_setups.push_back(make_setup(space, m, OrliczFn::power(p), pc.R, pc.a, pc.b));
  }

  std::vector<SuiteReport> per_trial(config.trials);
  parallel_for(config.trials, config.threads, [&](std::size_t i) {
    const auto gen = config.generators[i % config.generators.size()];
    const auto sample = generate_function(space, gen, derive_seed(config.seed, i));
    const Json tw{{"trial", Json{{"index", i}, {"generator", to_string(gen)}, {"seed", sample.seed}}}};
    auto& out = per_trial[i];
    const std::span<const double> f = sample.f;

    const double e = energy(f, main.cm, space, main.fn);
    out["pointwise_sobolev"].add(check_thm_1_2_all(f, main, m, e), &tw);
    out["oscillation_bound"].add(check_cor_1_1(f, main, e), &tw);
    if (psi) {
      out["psi_deviation_bound"].add(check_thm_2_1(f, *psi, main, m, e), &tw);
      out["psi_oscillation_bound"].add(check_remark_2_1(f, *psi, main, e), &tw);
    }
    if (young_setup) {
      const double ey = young_setup == &main ? e : energy(f, young_setup->cm, space, young_setup->fn);
      out["young_oscillation_bound"].add(check_cor_1_2(f, *young_setup, ey), &tw);
    }
    if (identity)
      out["identity_oscillation_bound"].add(check_remark_1_2(f, *identity, energy(f, identity->cm, space, identity->fn)),
                                            &tw);
    for (std::size_t j = 0; j < power_setups.size(); ++j) {
      const auto& ps = power_setups[j];
      const double ep = energy(f, ps.cm, space, ps.fn);
      out["power_oscillation_bound_p" + ps.fn.name().substr(5)].add(check_prop_2_1(f, ps, config.powers[j], ep), &tw);
    }
  });
  for (const auto& r : per_trial) merge_into(report, r);
  return report;
}

}  // namespace chainkit
