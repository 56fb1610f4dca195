#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "chainkit/certificate.hpp"
#include "chainkit/error.hpp"
#include "chainkit/majorant.hpp"
#include "chainkit/metric.hpp"
#include "chainkit/orlicz.hpp"
#include "chainkit/parallel.hpp"
#include "chainkit/rng.hpp"
#include "chainkit/sobolev.hpp"

namespace chainkit {

/// E|Z|^p for a standard normal Z.
inline double gaussian_abs_moment(double p) {
  return std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
}

/// Centered Gaussian process X = scale * F z with z standard normal.
/// cov = F F^T is the unscaled covariance.
struct GaussianProcessModel {
  Matrix cov;
  Matrix factor;  // n x rank
  double scale = 1.0;

  std::size_t size() const noexcept { return factor.size(); }
  std::size_t rank() const noexcept { return factor.empty() ? 0 : factor.front().size(); }

  /// sqrt(E (X_s - X_t)^2) at the current scale.
  double deviation(std::size_t s, std::size_t t) const {
    double acc = 0.0;
    for (std::size_t c = 0; c < rank(); ++c) {
      const double d = factor[s][c] - factor[t][c];
      acc += d * d;
    }
    return scale * std::sqrt(acc);
  }

  GaussianProcessModel with_scale(double s) const {
    GaussianProcessModel out = *this;
    out.scale = s;
    return out;
  }

  GaussianProcessModel restrict_to(std::span<const std::size_t> points) const {
    GaussianProcessModel out;
    out.scale = scale;
    for (auto a : points) {
      out.factor.push_back(factor[a]);
      Vector row;
      for (auto b : points) row.push_back(cov[a][b]);
      out.cov.push_back(std::move(row));
    }
    return out;
  }
};

inline constexpr double kPivotTolerance = 1e-10;

/// Rank-revealing square root of a symmetric PSD matrix by diagonal
/// pivoting. Stops once the largest remaining pivot is below
/// kPivotTolerance * max(1, max diagonal); rejects inputs whose residual is
/// not negligible.
inline Matrix psd_square_root(const Matrix& cov) {
  const std::size_t n = cov.size();
  for (const auto& row : cov)
    if (row.size() != n) throw Error(ErrorCode::NotPSD, "covariance is not square");
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(cov[i][j])) throw Error(ErrorCode::NotPSD, "covariance has non-finite entries");
      if (std::abs(cov[i][j] - cov[j][i]) > 1e-12 * std::max(1.0, std::abs(cov[i][j])))
        throw Error(ErrorCode::NotPSD, "covariance is not symmetric");
    }
    max_diag = std::max(max_diag, cov[i][i]);
  }
  const double tol = kPivotTolerance * std::max(1.0, max_diag);

  Matrix residual = cov;
  Matrix L(n);  // columns appended per pivot
  std::vector<bool> used(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t piv = n;
    double best = tol;
    for (std::size_t i = 0; i < n; ++i)
      if (!used[i] && residual[i][i] > best) {
        best = residual[i][i];
        piv = i;
      }
    if (piv == n) break;
    used[piv] = true;
    const double root = std::sqrt(residual[piv][piv]);
    Vector col(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) col[i] = used[i] && i != piv ? 0.0 : residual[i][piv] / root;
    for (std::size_t i = 0; i < n; ++i) {
      L[i].push_back(col[i]);
      for (std::size_t j = 0; j < n; ++j) residual[i][j] -= col[i] * col[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(residual[i][j]) > 1e-8 * std::max(1.0, max_diag))
        throw Error(ErrorCode::NotPSD, "covariance is not positive semidefinite");
  return L;
}

enum class ModelKind { EmbedEuclidean, BrownianPath, CustomCov };

struct ModelParams {
  Matrix coords;     // embed-euclidean
  Vector positions;  // brownian-path; defaults to 0..n-1
  Matrix cov;        // custom-cov
};

inline Matrix gram(const Matrix& factor) {
  const std::size_t n = factor.size();
  Matrix cov(n, Vector(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < factor[i].size(); ++c) cov[i][j] += factor[i][c] * factor[j][c];
  return cov;
}

inline GaussianProcessModel gaussian_from_metric(const MetricSpace& space, ModelKind kind, const ModelParams& params) {
  const std::size_t n = space.size();
  GaussianProcessModel model;
  switch (kind) {
    case ModelKind::EmbedEuclidean: {
      // X_t = <g, point_t>, so the factor is the coordinate matrix itself.
      if (params.coords.size() != n) throw Error(ErrorCode::DimensionMismatch, "need one coordinate row per point");
      model.factor = params.coords;
      model.cov = gram(model.factor);
      break;
    }
    case ModelKind::BrownianPath: {
      Vector pos = params.positions;
      if (pos.empty())
        for (std::size_t i = 0; i < n; ++i) pos.push_back(static_cast<double>(i));
      if (pos.size() != n) throw Error(ErrorCode::DimensionMismatch, "need one position per point");
      for (double p : pos)
        if (!(p >= 0)) throw Error(ErrorCode::InvalidSpec, "Brownian positions must be nonnegative");
      model.cov.assign(n, Vector(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) model.cov[i][j] = std::min(pos[i], pos[j]);
      model.factor = psd_square_root(model.cov);
      break;
    }
    case ModelKind::CustomCov: {
      if (params.cov.size() != n) throw Error(ErrorCode::DimensionMismatch, "covariance size differs from space");
      model.cov = params.cov;
      model.factor = psd_square_root(model.cov);
      break;
    }
  }
  return model;
}

/// Default model for a generated space: the coordinate embedding when the
/// family has coordinates, Brownian motion along a path, and the tree
/// covariance D(T) - d(s, t) for an ultrametric.
inline GaussianProcessModel natural_model(const GeneratedSpace& g) {
  ModelParams params;
  if (!g.coords.empty()) {
    params.coords = g.coords;
    return gaussian_from_metric(g.space, ModelKind::EmbedEuclidean, params);
  }
  if (g.kind == FamilyKind::Path) {
    params.positions = g.positions;
    return gaussian_from_metric(g.space, ModelKind::BrownianPath, params);
  }
  if (g.kind == FamilyKind::UltrametricTree) {
    const std::size_t n = g.space.size();
    params.cov.assign(n, Vector(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) params.cov[i][j] = g.space.diameter() - g.space(i, j);
    return gaussian_from_metric(g.space, ModelKind::CustomCov, params);
  }
  throw Error(ErrorCode::InvalidSpec, "no default process model for this space; pass an explicit model");
}

/// Largest scale making E phi_p(|X_s - X_t| / d(s, t)) <= 1 for all pairs,
/// computed for the unscaled model. Infinite when every deviation vanishes.
inline double max_admissible_scale(const GaussianProcessModel& model, const MetricSpace& space, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::DomainError, "p must be >= 1");
  const auto unit = model.with_scale(1.0);
  const double cp_root = std::pow(gaussian_abs_moment(p), 1.0 / p);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < space.size(); ++s)
    for (std::size_t t = s + 1; t < space.size(); ++t) {
      const double dev = unit.deviation(s, t);
      if (dev > 0) best = std::min(best, space(s, t) / (cp_root * dev));
    }
  return best;
}

// ---------------------------------------------------------------------------
// Sampling

/// Row-major trials x n sample matrix.
struct PathBatch {
  std::size_t trials = 0;
  std::size_t n = 0;
  std::vector<double> values;

  std::span<const double> path(std::size_t i) const { return {values.data() + i * n, n}; }
};

/// Trial i draws z from an engine seeded with derive_seed(seed, i).
inline PathBatch sample_paths(const GaussianProcessModel& model, std::size_t trials, std::uint64_t seed,
                              unsigned threads = 1) {
  PathBatch batch{trials, model.size(), std::vector<double>(trials * model.size(), 0.0)};
  const std::size_t r = model.rank();
  parallel_for(trials, threads, [&](std::size_t i) {
    Engine rng = make_engine(seed, i);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(r);
    for (auto& v : z) v = normal(rng);
    double* out = batch.values.data() + i * batch.n;
    for (std::size_t t = 0; t < batch.n; ++t) {
      double s = 0.0;
      for (std::size_t c = 0; c < r; ++c) s += model.factor[t][c] * z[c];
      out[t] = model.scale * s;
    }
  });
  return batch;
}

struct MomentEstimate {
  double p;
  double estimate;  // (E Y^p)^{1/p}
  double stderr;
};

struct SupEstimate {
  double mean = 0.0;
  double stderr = 0.0;
  std::size_t trials = 0;
  std::optional<MomentEstimate> p_moment;
};

/// Mean and standard error of the sample mean, summed in trial order. An
/// empty sample gives (0, 0).
inline std::pair<double, double> mean_and_stderr(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n == 0) return {0.0, 0.0};
  if (n < 2) throw Error(ErrorCode::DomainError, "need at least two trials");
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

/// Per-path range max_t X - min_t X restricted to `points` (all points when empty).
inline Vector path_ranges(const PathBatch& batch, std::span<const std::size_t> points = {}) {
  Vector out(batch.trials);
  for (std::size_t i = 0; i < batch.trials; ++i) {
    const auto x = batch.path(i);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    if (points.empty()) {
      for (double v : x) lo = std::min(lo, v), hi = std::max(hi, v);
    } else {
      for (auto t : points) lo = std::min(lo, x[t]), hi = std::max(hi, x[t]);
    }
    out[i] = batch.n ? hi - lo : 0.0;
  }
  return out;
}

/// Estimates E sup_{s,t} |X(s) - X(t)|, and optionally (E sup^p)^{1/p} with a
/// delta-method standard error.
inline SupEstimate estimate_sup_range(const PathBatch& batch, std::optional<double> p = std::nullopt,
                                      std::span<const std::size_t> points = {}) {
  const Vector ranges = path_ranges(batch, points);
  SupEstimate est;
  est.trials = batch.trials;
  std::tie(est.mean, est.stderr) = mean_and_stderr(ranges);
  if (p) {
    Vector powered(ranges.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) powered[i] = std::pow(ranges[i], *p);
    const auto [mp, sp] = mean_and_stderr(powered);
    const double value = std::pow(mp, 1.0 / *p);
    const double se = mp > 0 ? sp * value / (*p * mp) : 0.0;
    est.p_moment = MomentEstimate{*p, value, se};
  }
  return est;
}

// ---------------------------------------------------------------------------
// Increment condition

enum class IncrementMode { AnalyticPower, MonteCarlo };

struct McConfig {
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct IncrementReport {
  IncrementMode mode;
  double max_value = 0.0;  // max over pairs of E phi(|dX| / d)
  double stderr = 0.0;     // Monte Carlo only
  std::size_t s = 0, t = 0;
  bool pass = true;
};

/// Analytic: c_p (scale * dev / d)^p for phi = x^p. Monte Carlo: the pair
/// estimate must not exceed 1 by more than three standard errors.
inline IncrementReport check_increment_condition(const GaussianProcessModel& model, const MetricSpace& space,
                                                 const OrliczFn& fn, IncrementMode mode, const McConfig& mc = {}) {
  IncrementReport rep{mode};
  const std::size_t n = space.size();
  if (mode == IncrementMode::AnalyticPower) {
    if (!fn.is_power()) throw Error(ErrorCode::InvalidSpec, "analytic increment check needs a power function");
    const double p = fn.power_exponent();
    const double cp = gaussian_abs_moment(p);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = s + 1; t < n; ++t) {
        const double v = cp * std::pow(model.deviation(s, t) / space(s, t), p);
        if (v > rep.max_value) rep = IncrementReport{mode, v, 0.0, s, t, true};
      }
    rep.pass = rep.max_value <= 1.0 + 1e-12;
    return rep;
  }
  const auto batch = sample_paths(model, mc.trials, mc.seed, mc.threads);
  double worst_excess = -std::numeric_limits<double>::infinity();
  Vector values(batch.trials);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t) {
      for (std::size_t i = 0; i < batch.trials; ++i) {
        const auto x = batch.path(i);
        values[i] = fn(std::abs(x[s] - x[t]) / space(s, t));
      }
      const auto [mean, se] = mean_and_stderr(values);
      const double excess = mean - 3.0 * se;
      if (excess > worst_excess) {
        worst_excess = excess;
        rep.max_value = mean;
        rep.stderr = se;
        rep.s = s;
        rep.t = t;
      }
    }
  rep.pass = n < 2 || worst_excess <= 1.0;
  return rep;
}

inline IncrementReport require_increment_condition(const GaussianProcessModel& model, const MetricSpace& space,
                                                   const OrliczFn& fn, const McConfig& mc) {
  if (mc.trials < 2) throw Error(ErrorCode::DomainError, "Monte Carlo bounds need at least two trials");
  const auto mode = fn.is_power() ? IncrementMode::AnalyticPower : IncrementMode::MonteCarlo;
  auto rep = check_increment_condition(model, space, fn, mode, mc);
  if (!rep.pass)
    throw Error(ErrorCode::IncrementConditionUnmet,
                "E phi(|X(s)-X(t)|/d(s,t)) = " + std::to_string(rep.max_value) + " > 1 at pair (" +
                    std::to_string(rep.s) + "," + std::to_string(rep.t) + ")");
  return rep;
}

// ---------------------------------------------------------------------------
// Process bounds

namespace detail {

inline Json mc_witness(const SupEstimate& est, const McConfig& mc, double bound) {
  return Json{{"mean", est.mean},   {"stderr", est.stderr}, {"trials", est.trials},
              {"seed", mc.seed},    {"ratio", bound > 0 ? est.mean / bound : 0.0}};
}

}  // namespace detail

/// E sup |X(s) - X(t)| <= 32 S for a model satisfying the phi_p increment condition.
inline BoundCertificate verify_thm_1_1(const MetricSpace& space, const ProbMeasure& m,
                                       const GaussianProcessModel& model, const McConfig& mc, double p = 2.0) {
  const auto fn = OrliczFn::power(p);
  require_increment_condition(model, space, fn, mc);
  const double bound = 32.0 * profile(space, m, fn).S;
  const auto est = estimate_sup_range(sample_paths(model, mc.trials, mc.seed, mc.threads));
  auto w = detail::mc_witness(est, mc, bound);
  w["p"] = p;
  return certify("expected_sup_bound", est.mean + 3.0 * est.stderr, bound, std::move(w));
}

/// E sup |X(s) - X(t)| <= 2aA S + 2bB Sbar for Young phi in the growth class (a, b).
inline BoundCertificate verify_thm_3_1(const MetricSpace& space, const ProbMeasure& m,
                                       const GaussianProcessModel& model, const OrliczFn& fn, double a, double b,
                                       double R, const McConfig& mc) {
  if (!fn.is_young()) throw Error(ErrorCode::NotYoung, "this bound needs a Young function");
  const auto c = constants_AB(R);
  const double at = a_term(a, c);
  require_increment_condition(model, space, fn, mc);
  const auto prof = profile(space, m, fn);
  const double bound = 2.0 * at * prof.S + 2.0 * b * c.B * prof.Sbar;
  const auto est = estimate_sup_range(sample_paths(model, mc.trials, mc.seed, mc.threads));
  auto w = detail::mc_witness(est, mc, bound);
  w["phi"] = fn.name();
  w["a"] = a;
  w["b"] = b;
  w["R"] = R;
  return certify("expected_oscillation_bound", est.mean + 3.0 * est.stderr, bound, std::move(w));
}

/// E sup psi(|X(s) - X(t)| / (2K)) <= alpha + beta with K = (aA + bB) S.
inline BoundCertificate verify_thm_3_2(const MetricSpace& space, const ProbMeasure& m,
                                       const GaussianProcessModel& model, const OrliczFn& fn, const CheckedPsi& psi,
                                       double a, double b, double R, const McConfig& mc) {
  require_increment_condition(model, space, fn, mc);
  const auto prof = profile(space, m, fn);
  const double K = chaining_constant_K(a, b, R, prof.S);
  if (!(K > 0)) throw Error(ErrorCode::DegenerateK, "K vanishes; the space has a single point");
  const Vector ranges = path_ranges(sample_paths(model, mc.trials, mc.seed, mc.threads));
  Vector values(ranges.size());
  // psi is increasing, so the sup over pairs is psi of the range.
  for (std::size_t i = 0; i < ranges.size(); ++i) values[i] = psi.params.psi(ranges[i] / (2.0 * K));
  const auto [mean, se] = mean_and_stderr(values);
  const double bound = psi.params.alpha + psi.params.beta;
  Json w{{"mean", mean},        {"stderr", se}, {"trials", ranges.size()}, {"seed", mc.seed}, {"K", K},
         {"psi", psi.params.psi.name()}, {"psi_check_waived", psi.waived}, {"phi", fn.name()},
         {"a", a}, {"b", b}, {"R", R}};
  return certify("expected_psi_oscillation_bound", mean + 3.0 * se, bound, std::move(w));
}

/// (E sup |X(s) - X(t)|^p)^{1/p} <= 2 K_p.
inline BoundCertificate verify_remark_3_2(const MetricSpace& space, const ProbMeasure& m,
                                          const GaussianProcessModel& model, double p, const McConfig& mc) {
  const auto fn = OrliczFn::power(p);
  require_increment_condition(model, space, fn, mc);
  const auto pc = power_constants(p);
  const double bound = 2.0 * pc.Kcoef * profile(space, m, fn).S;
  const auto est = estimate_sup_range(sample_paths(model, mc.trials, mc.seed, mc.threads), p);
  auto w = detail::mc_witness(est, mc, bound);
  w["p"] = p;
  w["moment"] = est.p_moment->estimate;
  w["moment_stderr"] = est.p_moment->stderr;
  return certify("moment_oscillation_bound", est.p_moment->estimate + 3.0 * est.p_moment->stderr, bound,
                 std::move(w));
}

// ---------------------------------------------------------------------------
// Nets

struct NetProjection {
  std::vector<std::size_t> subset;  // F, as point indices of T
  std::vector<std::size_t> map;     // t -> point of F (index into T)
  ProbMeasure pushforward;          // on F, in subset order
  double worst_approx_ratio = 0.0;  // max d(f(t), x) / (2 d(t, x)) over t != x
  bool two_approximating = true;
  bool ball_mass_dominated = true;
};

/// Nearest-point map onto F (ties to the lowest index) with the pushforward of m.
inline NetProjection net_projection(const MetricSpace& space, const ProbMeasure& m, std::vector<std::size_t> subset) {
  if (subset.empty()) throw Error(ErrorCode::EmptySubset, "net must contain at least one point");
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  const std::size_t n = space.size();
  for (auto x : subset)
    if (x >= n) throw Error(ErrorCode::DimensionMismatch, "net point out of range");

  std::vector<std::size_t> map(n), slot(n);
  Vector pushed(subset.size(), 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < subset.size(); ++j)
      if (space(t, subset[j]) < space(t, subset[best])) best = j;
    map[t] = subset[best];
    slot[t] = best;
    pushed[best] += m[t];
  }
  NetProjection out{subset, map, ProbMeasure::from_unnormalized(pushed)};

  for (std::size_t t = 0; t < n; ++t)
    for (auto x : subset) {
      const double lhs = space(map[t], x);
      const double rhs = 2.0 * space(t, x);
      if (lhs > rhs * (1.0 + 1e-12)) out.two_approximating = false;
      if (rhs > 0) out.worst_approx_ratio = std::max(out.worst_approx_ratio, lhs / rhs);
    }

  // m(B(x, eps)) <= mu_F(B_F(x, 2 eps)); the left side only jumps at d(x, t).
  const auto sub = space.restrict_to(subset);
  for (std::size_t j = 0; j < subset.size(); ++j) {
    for (std::size_t t = 0; t < n; ++t) {
      const double eps = space(subset[j], t);
      const double lhs = ball_mass(space, m, subset[j], eps);
      const double rhs = ball_mass(sub, out.pushforward, j, 2.0 * eps);
      if (lhs > rhs + 1e-12) out.ball_mass_dominated = false;
    }
  }
  return out;
}

/// E sup_{s,t in F} |X(s) - X(t)| <= 4K with K = (aA + bB) S computed on all of T.
inline BoundCertificate verify_remark_3_1(const MetricSpace& space, const ProbMeasure& m,
                                          const GaussianProcessModel& model, const OrliczFn& fn, double a, double b,
                                          double R, std::vector<std::size_t> subset, const McConfig& mc) {
  const auto net = net_projection(space, m, std::move(subset));
  const auto sub_space = space.restrict_to(net.subset);
  const auto sub_model = model.restrict_to(net.subset);
  require_increment_condition(sub_model, sub_space, fn, mc);

  const double S = profile(space, m, fn).S;
  const double K = chaining_constant_K(a, b, R, S);
  const double S_net = sub_space.size() > 1 ? profile(sub_space, net.pushforward, fn).S : 0.0;
  const double bound = 4.0 * K;
  const auto est = estimate_sup_range(sample_paths(sub_model, mc.trials, mc.seed, mc.threads));
  auto w = detail::mc_witness(est, mc, bound);
  w["phi"] = fn.name();
  w["a"] = a;
  w["b"] = b;
  w["R"] = R;
  w["K"] = K;
  w["net_size"] = net.subset.size();
  w["S_net"] = S_net;
  w["net_majorant_dominated"] = S_net <= 2.0 * S + slack_tolerance(2.0 * S);
  w["two_approximating"] = net.two_approximating;
  w["ball_mass_dominated"] = net.ball_mass_dominated;
  auto cert = certify("net_oscillation_bound", est.mean + 3.0 * est.stderr, bound, std::move(w));
  cert.pass = cert.pass && net.two_approximating && net.ball_mass_dominated &&
              cert.witness["net_majorant_dominated"].get<bool>();
  return cert;
}

}  // namespace chainkit
