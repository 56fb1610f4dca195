#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "chainkit/error.hpp"

namespace chainkit {

/// An increasing continuous function phi: [0, inf) -> [0, inf) with phi(0) = 0.
///
/// Identity and power kinds have closed forms in both directions. Piecewise
/// kinds interpolate linearly between knots and extend the last segment past
/// the final knot. Custom kinds carry arbitrary callables; without an inverse
/// they are inverted by bisection to relative tolerance kInverseRelTol.
class OrliczFn {
 public:
  enum class Kind { Identity, Power, Piecewise, Custom };
  using Knot = std::pair<double, double>;
  using Callable = std::function<double(double)>;

  static constexpr double kInverseRelTol = 1e-12;

  static OrliczFn identity() { return OrliczFn(Kind::Identity); }

  static OrliczFn power(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorCode::DomainError, "power exponent must be >= 1");
    OrliczFn f(Kind::Power);
    f.p_ = p;
    return f;
  }

  /// Knots must be strictly increasing in both coordinates; (0,0) is
  /// prepended when absent.
  static OrliczFn piecewise(std::vector<Knot> knots) {
    if (knots.empty()) throw Error(ErrorCode::InvalidSpec, "piecewise function needs at least one knot");
    if (knots.front() != Knot{0.0, 0.0}) knots.insert(knots.begin(), Knot{0.0, 0.0});
    if (knots.size() < 2) throw Error(ErrorCode::InvalidSpec, "piecewise function needs a knot besides the origin");
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (!(knots[i].first > knots[i - 1].first) || !(knots[i].second > knots[i - 1].second))
        throw Error(ErrorCode::InvalidSpec, "piecewise knots must be strictly increasing in x and y");
      if (!std::isfinite(knots[i].first) || !std::isfinite(knots[i].second))
        throw Error(ErrorCode::InvalidSpec, "piecewise knots must be finite");
    }
    OrliczFn f(Kind::Piecewise);
    f.young_ = true;
    double prev_slope = 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
      const double slope = (knots[i].second - knots[i - 1].second) / (knots[i].first - knots[i - 1].first);
      if (slope < prev_slope) f.young_ = false;
      prev_slope = slope;
    }
    f.knots_ = std::move(knots);
    return f;
  }

  /// `young` is the caller's claim of convexity; monotonicity and phi(0) = 0
  /// are checked on a geometric grid over [0, 1e6].
  static OrliczFn custom(std::string name, Callable phi, Callable inverse = {}, bool young = false) {
    if (!phi) throw Error(ErrorCode::InvalidSpec, "custom function needs an evaluator");
    if (phi(0.0) != 0.0) throw Error(ErrorCode::InvalidSpec, "custom function must vanish at 0");
    double prev = 0.0;
    for (double x = 1e-6; x <= 1e6; x *= 1.25) {
      const double v = phi(x);
      if (!(v > prev)) throw Error(ErrorCode::InvalidSpec, "custom function is not strictly increasing");
      prev = v;
    }
    OrliczFn f(Kind::Custom);
    f.name_ = std::move(name);
    f.phi_ = std::move(phi);
    f.inv_ = std::move(inverse);
    f.young_ = young;
    return f;
  }

  Kind kind() const noexcept { return kind_; }
  double exponent() const noexcept { return p_; }
  const std::vector<Knot>& knots() const noexcept { return knots_; }
  bool is_young() const noexcept { return young_; }
  bool is_power() const noexcept { return kind_ == Kind::Identity || kind_ == Kind::Power; }

  /// Exponent for identity/power kinds (identity is power 1).
  double power_exponent() const noexcept { return kind_ == Kind::Identity ? 1.0 : p_; }

  std::string name() const {
    switch (kind_) {
      case Kind::Identity: return "identity";
      case Kind::Power: {
        std::string s = std::to_string(p_);
        s.erase(s.find_last_not_of('0') + 1);
        if (s.back() == '.') s.pop_back();
        return "power" + s;
      }
      case Kind::Piecewise: return "piecewise";
      case Kind::Custom: return name_;
    }
    return "?";
  }

  double operator()(double x) const { return eval(x); }

  double eval(double x) const {
    if (x < 0 || std::isnan(x)) throw Error(ErrorCode::DomainError, "Orlicz function evaluated at negative argument");
    switch (kind_) {
      case Kind::Identity: return x;
      case Kind::Power: return p_ == 2.0 ? x * x : std::pow(x, p_);
      case Kind::Piecewise: return piecewise_eval(x);
      case Kind::Custom: return phi_(x);
    }
    return 0.0;
  }

  double inverse(double y) const {
    if (y < 0 || std::isnan(y)) throw Error(ErrorCode::DomainError, "Orlicz inverse at negative argument");
    if (y == 0) return 0.0;
    if (std::isinf(y)) return y;
    switch (kind_) {
      case Kind::Identity: return y;
      case Kind::Power: return p_ == 2.0 ? std::sqrt(y) : std::pow(y, 1.0 / p_);
      case Kind::Piecewise: return piecewise_inverse(y);
      case Kind::Custom: return inv_ ? inv_(y) : bisect_inverse(y);
    }
    return 0.0;
  }

 private:
  explicit OrliczFn(Kind k) : kind_(k), young_(k == Kind::Identity || k == Kind::Power) {}

  double piecewise_eval(double x) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                               [](double v, const Knot& k) { return v < k.first; });
    const std::size_t hi = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - knots_.begin(), 1), knots_.size() - 1);
    const auto& [x0, y0] = knots_[hi - 1];
    const auto& [x1, y1] = knots_[hi];
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
  }

  double piecewise_inverse(double y) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), y,
                               [](double v, const Knot& k) { return v < k.second; });
    const std::size_t hi = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - knots_.begin(), 1), knots_.size() - 1);
    const auto& [x0, y0] = knots_[hi - 1];
    const auto& [x1, y1] = knots_[hi];
    return x0 + (x1 - x0) * (y - y0) / (y1 - y0);
  }

  double bisect_inverse(double y) const {
    double lo = 0.0, hi = 1.0;
    while (phi_(hi) < y) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw Error(ErrorCode::DomainError, "inverse bracket overflowed");
    }
    while (hi - lo > kInverseRelTol * hi) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (phi_(mid) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  Kind kind_;
  bool young_ = false;
  double p_ = 1.0;
  std::vector<Knot> knots_;
  std::string name_;
  Callable phi_;
  Callable inv_;
};

// ---------------------------------------------------------------------------
// Growth conditions

/// Claimed (a, b) with x <= a + b phi(xy)/phi(y) for x >= 0, y >= phi^{-1}(1).
struct GrowthParams {
  double a = 1.0;
  double b = 1.0;
};

/// Claimed (psi, alpha, beta) with psi(x) <= alpha + beta phi(xy)/phi(y) for all x, y.
struct PsiParams {
  OrliczFn psi = OrliczFn::identity();
  double alpha = 0.0;
  double beta = 1.0;
};

/// Result of a grid falsification search. `max_violation` is lhs - rhs
/// divided by max(1, |rhs|) at the worst grid point.
struct ConditionReport {
  bool pass = true;
  double max_violation = -std::numeric_limits<double>::infinity();
  double witness_x = 0.0;
  double witness_y = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  std::size_t points = 0;
};

inline constexpr double kConditionTolerance = 1e-9;

inline std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0) || !(hi >= lo) || count == 0) throw Error(ErrorCode::DomainError, "invalid geometric grid bounds");
  std::vector<double> g(count);
  if (count == 1) return {lo};
  const double ratio = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) g[i] = lo * std::exp(ratio * static_cast<double>(i));
  g.back() = hi;
  return g;
}

/// 0 followed by 199 geometric points up to 1e3.
inline std::vector<double> default_x_grid() {
  auto g = geometric_grid(1e-4, 1e3, 199);
  g.insert(g.begin(), 0.0);
  return g;
}

/// 200 geometric points from `lower` to 1e3 (or to 10 * lower when lower is larger).
inline std::vector<double> default_y_grid(double lower) {
  return geometric_grid(lower, std::max(1e3, 10.0 * lower), 200);
}

namespace detail {

template <typename Lhs>
ConditionReport check_ratio_condition(const OrliczFn& fn, Lhs&& lhs_of, double a, double b,
                                      const std::vector<double>& x_grid, const std::vector<double>& y_grid) {
  ConditionReport report;
  for (double y : y_grid) {
    const double phi_y = fn(y);
    if (!(phi_y > 0)) continue;
    for (double x : x_grid) {
      const double lhs = lhs_of(x);
      const double rhs = a + b * fn(x * y) / phi_y;
      const double v = (lhs - rhs) / std::max(1.0, std::abs(rhs));
      ++report.points;
      if (v > report.max_violation) {
        report.max_violation = v;
        report.witness_x = x;
        report.witness_y = y;
        report.lhs = lhs;
        report.rhs = rhs;
      }
    }
  }
  report.pass = report.max_violation <= kConditionTolerance;
  return report;
}

}  // namespace detail

/// Falsification search for membership of fn in the growth class (a, b).
/// Grid values of y below phi^{-1}(1) are ignored.
inline ConditionReport check_growth_condition(const OrliczFn& fn, const GrowthParams& params,
                                              const std::vector<double>& x_grid, const std::vector<double>& y_grid) {
  const double lower = fn.inverse(1.0);
  std::vector<double> ys;
  std::copy_if(y_grid.begin(), y_grid.end(), std::back_inserter(ys), [&](double y) { return y >= lower; });
  return detail::check_ratio_condition(fn, [](double x) { return x; }, params.a, params.b, x_grid, ys);
}

inline ConditionReport check_growth_condition(const OrliczFn& fn, const GrowthParams& params) {
  return check_growth_condition(fn, params, default_x_grid(), default_y_grid(fn.inverse(1.0)));
}

/// Falsification search for psi(x) <= alpha + beta phi(xy)/phi(y). The
/// y = 0 column is skipped: the ratio there is 0/0 and the condition is
/// meant as the y -> 0 limit.
inline ConditionReport check_psi_condition(const OrliczFn& fn, const PsiParams& params,
                                           const std::vector<double>& x_grid, const std::vector<double>& y_grid) {
  return detail::check_ratio_condition(fn, [&](double x) { return params.psi(x); }, params.alpha, params.beta,
                                       x_grid, y_grid);
}

inline ConditionReport check_psi_condition(const OrliczFn& fn, const PsiParams& params) {
  return check_psi_condition(fn, params, default_x_grid(), geometric_grid(1e-4, 1e3, 200));
}

// ---------------------------------------------------------------------------
// Closed-form constants

struct ChainingConstants {
  double R;
  double A;  // +inf at R = 2
  double B;
  bool a_finite() const noexcept { return std::isfinite(A); }
};

inline ChainingConstants constants_AB(double R) {
  if (!(R >= 2.0) || !std::isfinite(R)) throw Error(ErrorCode::InvalidR, "R must be >= 2");
  const double B = R * R / (R - 1.0);
  const double A = R == 2.0 ? std::numeric_limits<double>::infinity() : R * R * R / ((R - 1.0) * (R - 2.0));
  return {R, A, B};
}

/// a * A(R) with the 0 * inf = 0 convention; a > 0 at R = 2 is rejected.
inline double a_term(double a, const ChainingConstants& c) {
  if (a == 0.0) return 0.0;
  if (!c.a_finite()) throw Error(ErrorCode::InvalidR, "R = 2 is only usable with a = 0");
  return a * c.A;
}

/// aA + bB, the coefficient of S in the chaining constant K.
inline double chaining_coefficient(double a, double b, double R) {
  const auto c = constants_AB(R);
  return a_term(a, c) + b * c.B;
}

inline double chaining_constant_K(double a, double b, double R, double S) {
  return chaining_coefficient(a, b, R) * S;
}

/// Optimal (R, a, b) and the resulting coefficient K_p / S for phi(x) = x^p.
struct PowerConstants {
  double p;
  double q;  // +inf for p = 1
  double R;
  double a;
  double b;
  double Kcoef;
};

inline PowerConstants power_constants(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorCode::DomainError, "p must be >= 1");
  if (p == 1.0) return {1.0, std::numeric_limits<double>::infinity(), 2.0, 0.0, 1.0, 4.0};
  const double q = p / (p - 1.0);
  const double base = 3.0 * q - q / p;
  PowerConstants c{};
  c.p = p;
  c.q = q;
  c.R = 2.0 + (std::sqrt(base) + 1.0) / q;
  c.a = std::pow(base, -1.0 / (2.0 * p)) / q;
  c.b = std::pow(base, 1.0 / (2.0 * q)) / p;
  c.Kcoef = 2.0 * ((3.0 * p - 1.0) / p) * std::pow(base, 1.0 / (2.0 * q));
  return c;
}

/// (aq)^{1/q} (bp)^{1/p}; power phi_p is in the growth class (a, b) iff this is >= 1.
inline double power_membership_value(double p, double a, double b) {
  if (!(p > 1.0)) throw Error(ErrorCode::DomainError, "membership value needs p > 1");
  const double q = p / (p - 1.0);
  return std::pow(a * q, 1.0 / q) * std::pow(b * p, 1.0 / p);
}

inline bool power_membership_criterion(double p, double a, double b) {
  if (!(p >= 1.0)) throw Error(ErrorCode::DomainError, "p must be >= 1");
  if (a < 0 || b < 0) throw Error(ErrorCode::DomainError, "a and b must be nonnegative");
  if (p == 1.0) return b >= 1.0;
  return power_membership_value(p, a, b) >= 1.0;
}

}  // namespace chainkit
