#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "chainkit/certificate.hpp"
#include "chainkit/error.hpp"
#include "chainkit/metric.hpp"
#include "chainkit/orlicz.hpp"

namespace chainkit {

/// sigma(x) = integral over [0, D(T)] of phi^{-1}(1 / m(B(x, eps))) d eps,
/// evaluated exactly: the integrand is a right-continuous step function
/// that only changes at the distances from x.
inline double sigma_at(const BallProfile& balls, double diam, const OrliczFn& fn) {
  double sigma = 0.0;
  for (std::size_t j = 0; j < balls.radius.size(); ++j) {
    const double right = j + 1 < balls.radius.size() ? balls.radius[j + 1] : diam;
    const double length = right - balls.radius[j];
    if (length > 0) sigma += fn.inverse(1.0 / balls.mass[j]) * length;
  }
  return sigma;
}

inline double sigma_at(const MetricSpace& space, const ProbMeasure& m, const OrliczFn& fn, std::size_t x) {
  return sigma_at(ball_profile(space, m, x), space.diameter(), fn);
}

struct MajorantProfile {
  Vector sigma;
  double S = 0.0;     // max sigma
  double Sbar = 0.0;  // m-average of sigma
  std::vector<BallProfile> balls;
};

inline MajorantProfile profile(const MetricSpace& space, const ProbMeasure& m, const OrliczFn& fn) {
  MajorantProfile out;
  const std::size_t n = space.size();
  out.sigma.resize(n);
  out.balls.reserve(n);
  for (std::size_t x = 0; x < n; ++x) {
    out.balls.push_back(ball_profile(space, m, x));
    out.sigma[x] = sigma_at(out.balls.back(), space.diameter(), fn);
  }
  out.S = *std::max_element(out.sigma.begin(), out.sigma.end());
  out.Sbar = m.integrate(out.sigma);
  return out;
}

/// Integer power of R; exponents may be negative.
inline double rpow(double R, int k) { return std::pow(R, static_cast<double>(k)); }

/// The k0 with R^k0 <= phi^{-1}(1) < R^(k0+1).
inline int base_level_k0(const OrliczFn& fn, double R) {
  if (!(R >= 2.0)) throw Error(ErrorCode::InvalidR, "R must be >= 2");
  const double v = fn.inverse(1.0);
  int k = static_cast<int>(std::floor(std::log(v) / std::log(R)));
  while (rpow(R, k) > v) --k;
  while (rpow(R, k + 1) <= v) ++k;
  return k;
}

/// Smallest listed radius whose ball mass reaches `threshold`.
inline double smallest_radius_with_mass(const BallProfile& balls, double threshold) {
  for (std::size_t j = 0; j < balls.radius.size(); ++j)
    if (balls.mass[j] >= threshold) return balls.radius[j];
  return balls.radius.back();
}

/// r_k(x): D(T) at the base level, otherwise the least eps with
/// m(B(x, eps)) >= 1 / phi(R^k).
inline double radius_at(const MetricSpace& space, const ProbMeasure& m, const OrliczFn& fn, double R, int k,
                        std::size_t x) {
  const int k0 = base_level_k0(fn, R);
  if (k < k0) throw Error(ErrorCode::LevelBelowBase, "level " + std::to_string(k) + " is below k0");
  if (k == k0) return space.diameter();
  return smallest_radius_with_mass(ball_profile(space, m, x), 1.0 / fn(rpow(R, k)));
}

/// Chaining radii for levels k0..kmax; every level above kmax is identically zero.
struct RadiiTable {
  int k0 = 0;
  int kmax = 0;
  double R = 4.0;
  std::vector<Vector> levels;  // levels[k - k0][x]

  std::size_t size() const noexcept { return levels.empty() ? 0 : levels.front().size(); }

  /// r_k as a vector; zeros above kmax.
  Vector at(int k) const {
    if (k < k0) throw Error(ErrorCode::LevelBelowBase, "level " + std::to_string(k) + " is below k0");
    if (k > kmax) return Vector(size(), 0.0);
    return levels[static_cast<std::size_t>(k - k0)];
  }

  double operator()(int k, std::size_t x) const {
    if (k < k0) throw Error(ErrorCode::LevelBelowBase, "level " + std::to_string(k) + " is below k0");
    return k > kmax ? 0.0 : levels[static_cast<std::size_t>(k - k0)][x];
  }
};

inline RadiiTable radii_table(const MetricSpace& space, const ProbMeasure& m, const OrliczFn& fn, double R,
                              const std::vector<BallProfile>* balls_hint = nullptr) {
  RadiiTable table;
  table.R = R;
  table.k0 = base_level_k0(fn, R);
  table.kmax = table.k0;
  const std::size_t n = space.size();
  std::vector<BallProfile> local;
  if (!balls_hint) {
    local.reserve(n);
    for (std::size_t x = 0; x < n; ++x) local.push_back(ball_profile(space, m, x));
    balls_hint = &local;
  }
  table.levels.emplace_back(n, space.diameter());
  if (space.diameter() == 0) return table;

  for (int k = table.k0 + 1;; ++k) {
    const double threshold = 1.0 / fn(rpow(R, k));
    Vector r(n);
    bool any_positive = false;
    for (std::size_t x = 0; x < n; ++x) {
      r[x] = smallest_radius_with_mass((*balls_hint)[x], threshold);
      any_positive = any_positive || r[x] > 0;
    }
    if (!any_positive) break;
    if (k - table.k0 > 4096) throw Error(ErrorCode::DomainError, "radii do not vanish; phi grows too slowly");
    table.levels.push_back(std::move(r));
    table.kmax = k;
  }
  return table;
}

/// Per-point check of sum_k r_k(x) R^k <= R/(R-1) sigma(x).
inline std::vector<BoundCertificate> radius_sum_check(const MajorantProfile& prof, const RadiiTable& radii) {
  std::vector<BoundCertificate> out;
  const double R = radii.R;
  for (std::size_t x = 0; x < prof.sigma.size(); ++x) {
    double lhs = 0.0;
    for (int k = radii.k0; k <= radii.kmax; ++k) lhs += radii(k, x) * rpow(R, k);
    out.push_back(certify("radius_sum", lhs, R / (R - 1.0) * prof.sigma[x], Json{{"point", x}, {"R", R}}));
  }
  return out;
}

}  // namespace chainkit
