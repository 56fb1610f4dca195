#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "chainkit/certificate.hpp"
#include "chainkit/error.hpp"
#include "chainkit/majorant.hpp"
#include "chainkit/metric.hpp"

namespace chainkit {

/// Row-stochastic matrix of S_k: (S_k f)(x) is the m-average of f over B(x, r_k(x)).
struct AveragingOperator {
  int k = 0;
  std::size_t n = 0;
  std::vector<double> P;  // row-major n x n

  double operator()(std::size_t x, std::size_t u) const noexcept { return P[x * n + u]; }

  Vector apply(std::span<const double> f) const {
    if (f.size() != n) throw Error(ErrorCode::DimensionMismatch, "operator and vector sizes differ");
    Vector out(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      const double* row = P.data() + x * n;
      double s = 0.0;
      for (std::size_t u = 0; u < n; ++u) s += row[u] * f[u];
      out[x] = s;
    }
    return out;
  }

  static AveragingOperator identity(std::size_t n, int k) {
    AveragingOperator op{k, n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) op.P[i * n + i] = 1.0;
    return op;
  }
};

inline AveragingOperator averaging_operator(const MetricSpace& space, const ProbMeasure& m, const RadiiTable& radii,
                                            int k) {
  if (k < radii.k0) throw Error(ErrorCode::LevelBelowBase, "level " + std::to_string(k) + " is below k0");
  const std::size_t n = space.size();
  if (k > radii.kmax) return AveragingOperator::identity(n, k);
  AveragingOperator op{k, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t x = 0; x < n; ++x) {
    const double r = radii(k, x);
    const double mass = ball_mass(space, m, x, r);
    const auto row = space.row(x);
    for (std::size_t u = 0; u < n; ++u)
      if (row[u] <= r) op.P[x * n + u] = m[u] / mass;
  }
  return op;
}

/// Applies ops to f right to left: compose_chain({S_m, ..., S_{k+1}}, f) = S_m ... S_{k+1} f.
inline Vector compose_chain(std::span<const AveragingOperator> ops, std::span<const double> f) {
  Vector v(f.begin(), f.end());
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) v = it->apply(v);
  return v;
}

/// S_k for every level k0..kmax+1; level kmax+1 is the identity and so is
/// every level above it.
class OperatorLadder {
 public:
  OperatorLadder(const MetricSpace& space, const ProbMeasure& m, const RadiiTable& radii)
      : k0_(radii.k0), kmax_(radii.kmax) {
    for (int k = k0_; k <= kmax_ + 1; ++k) ops_.push_back(averaging_operator(space, m, radii, k));
  }

  int k0() const noexcept { return k0_; }
  int kmax() const noexcept { return kmax_; }

  const AveragingOperator& at(int k) const {
    if (k < k0_) throw Error(ErrorCode::LevelBelowBase, "level " + std::to_string(k) + " is below k0");
    return ops_[static_cast<std::size_t>(std::min(k, kmax_ + 1) - k0_)];
  }

  /// {S_hi, S_{hi-1}, ..., S_lo} in composition order.
  std::vector<AveragingOperator> chain(int hi, int lo) const {
    std::vector<AveragingOperator> out;
    for (int k = hi; k >= lo; --k) out.push_back(at(k));
    return out;
  }

 private:
  int k0_, kmax_;
  std::vector<AveragingOperator> ops_;
};

inline Vector add_scaled(Vector a, std::span<const double> b, double s) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
  return a;
}

/// S_i r_j <= r_i + r_j entrywise.
inline BoundCertificate check_pairwise_radius_bound(const OperatorLadder& ladder, const RadiiTable& radii, int i,
                                                    int j) {
  const Vector rj = radii.at(j);
  const Vector lhs = ladder.at(i).apply(rj);
  const Vector rhs = add_scaled(radii.at(i), rj, 1.0);
  return certify_entrywise("pairwise_radius_bound", lhs, rhs, Json{{"i", i}, {"j", j}});
}

inline BoundCertificate check_pairwise_radius_bound(const MetricSpace& space, const ProbMeasure& m,
                                                    const RadiiTable& radii, int i, int j) {
  return check_pairwise_radius_bound(OperatorLadder(space, m, radii), radii, i, j);
}

/// Right side of the chained radius bound: sum_{i=k}^{mlevel} 2^{i-k} r_i.
inline Vector chained_radius_bound(const RadiiTable& radii, int k, int mlevel) {
  Vector rhs(radii.size(), 0.0);
  for (int i = k; i <= mlevel; ++i) rhs = add_scaled(std::move(rhs), radii.at(i), std::ldexp(1.0, i - k));
  return rhs;
}

/// S_mlevel ... S_{k+1} r_k <= sum_{i=k}^{mlevel} 2^{i-k} r_i entrywise.
inline BoundCertificate check_lemma_2_2(const OperatorLadder& ladder, const RadiiTable& radii, int k, int mlevel) {
  if (k < radii.k0 || mlevel <= k) throw Error(ErrorCode::InvalidLevels, "need mlevel > k >= k0");
  const auto ops = ladder.chain(mlevel, k + 1);
  const Vector lhs = compose_chain(ops, radii.at(k));
  return certify_entrywise("chained_radius_bound", lhs, chained_radius_bound(radii, k, mlevel),
                           Json{{"k", k}, {"m", mlevel}});
}

inline BoundCertificate check_lemma_2_2(const MetricSpace& space, const ProbMeasure& m, const RadiiTable& radii, int k,
                                        int mlevel) {
  return check_lemma_2_2(OperatorLadder(space, m, radii), radii, k, mlevel);
}

/// Every (k, m) with k0 <= k < m <= top, sharing partial products across m.
inline std::vector<BoundCertificate> check_lemma_2_2_all(const OperatorLadder& ladder, const RadiiTable& radii,
                                                         int top) {
  std::vector<BoundCertificate> out;
  for (int k = radii.k0; k < top; ++k) {
    Vector v = radii.at(k);
    for (int mlevel = k + 1; mlevel <= top; ++mlevel) {
      v = ladder.at(mlevel).apply(v);
      out.push_back(certify_entrywise("chained_radius_bound", v, chained_radius_bound(radii, k, mlevel),
                                      Json{{"k", k}, {"m", mlevel}}));
    }
  }
  return out;
}

/// For R > 2 and every point:
/// sum_{k=k0}^{m-1} (sum_{i=k}^{m} 2^{i-k} r_i) R^k <= R/(R-2) sum_{i>=k0} r_i R^i.
inline std::vector<BoundCertificate> check_weighted_chain_sum(const RadiiTable& radii, int mlevel) {
  const double R = radii.R;
  if (!(R > 2.0)) throw Error(ErrorCode::InvalidR, "weighted chain sum needs R > 2");
  std::vector<BoundCertificate> out;
  for (std::size_t x = 0; x < radii.size(); ++x) {
    double lhs = 0.0;
    for (int k = radii.k0; k < mlevel; ++k) {
      double inner = 0.0;
      for (int i = k; i <= mlevel; ++i) inner += std::ldexp(1.0, i - k) * radii(i, x);
      lhs += inner * rpow(R, k);
    }
    double tail = 0.0;
    for (int i = radii.k0; i <= radii.kmax; ++i) tail += radii(i, x) * rpow(R, i);
    out.push_back(certify("weighted_chain_sum", lhs, R / (R - 2.0) * tail, Json{{"point", x}, {"m", mlevel}, {"R", R}}));
  }
  return out;
}

/// max_t |(f(t) - int f dm) - sum_{k=k0}^{mlevel-1} [S_mlevel ... S_{k+1} (I - S_k) f](t)|.
inline double check_telescoping(const OperatorLadder& ladder, const ProbMeasure& m, std::span<const double> f,
                                int mlevel) {
  if (mlevel <= ladder.kmax()) throw Error(ErrorCode::InvalidLevels, "telescoping needs mlevel > kmax");
  const std::size_t n = f.size();
  const double mean = m.integrate(f);
  Vector total(n, 0.0);
  for (int k = ladder.k0(); k < mlevel; ++k) {
    Vector term = add_scaled(Vector(f.begin(), f.end()), ladder.at(k).apply(f), -1.0);
    for (int j = k + 1; j <= mlevel; ++j) term = ladder.at(j).apply(term);
    total = add_scaled(std::move(total), term, 1.0);
  }
  double residual = 0.0;
  for (std::size_t t = 0; t < n; ++t) residual = std::max(residual, std::abs((f[t] - mean) - total[t]));
  return residual;
}

inline double check_telescoping(const MetricSpace& space, const ProbMeasure& m, const RadiiTable& radii,
                                std::span<const double> f, int mlevel) {
  return check_telescoping(OperatorLadder(space, m, radii), m, f, mlevel);
}

// ---------------------------------------------------------------------------
// Chaining measure

struct PairWeight {
  std::size_t u;
  std::size_t v;
  double weight;
};

struct ChainingLevel {
  int k;
  double weight;  // total nu-mass carried by this level
  std::vector<PairWeight> pairs;
};

/// Probability measure nu on T x T and its normalizer M. Pairs are
/// aggregated over levels (k ascending, then u, then v) and sorted by (u, v).
struct ChainingMeasure {
  double M = 0.0;
  double R = 4.0;
  std::vector<PairWeight> pairs;
  std::vector<ChainingLevel> levels;

  double total() const noexcept {
    double s = 0.0;
    for (const auto& p : pairs) s += p.weight;
    return s;
  }
};

inline ChainingMeasure build_chaining_measure(const MetricSpace& space, const ProbMeasure& m,
                                              const RadiiTable& radii) {
  const std::size_t n = space.size();
  if (n < 2 || space.diameter() == 0)
    throw Error(ErrorCode::DegenerateSpace, "the chaining measure needs at least two points");
  const double R = radii.R;

  ChainingMeasure cm;
  cm.R = R;
  for (int k = radii.k0; k <= radii.kmax; ++k)
    for (std::size_t u = 0; u < n; ++u) cm.M += m[u] * radii(k, u) * rpow(R, k);

  std::vector<double> dense(n * n, 0.0);
  for (int k = radii.k0; k <= radii.kmax; ++k) {
    ChainingLevel level{k, 0.0, {}};
    for (std::size_t u = 0; u < n; ++u) {
      const double r = radii(k, u);
      if (r == 0) continue;
      const double head = m[u] * r * rpow(R, k) / cm.M;
      const double mass = ball_mass(space, m, u, r);
      const auto row = space.row(u);
      for (std::size_t v = 0; v < n; ++v) {
        if (row[v] > r) continue;
        const double w = head * m[v] / mass;
        level.pairs.push_back({u, v, w});
        level.weight += w;
        dense[u * n + v] += w;
      }
    }
    cm.levels.push_back(std::move(level));
  }
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (dense[u * n + v] > 0) cm.pairs.push_back({u, v, dense[u * n + v]});
  return cm;
}

inline ChainingMeasure build_chaining_measure(const MetricSpace& space, const ProbMeasure& m, const OrliczFn& fn,
                                              double R) {
  return build_chaining_measure(space, m, radii_table(space, m, fn, R));
}

/// M <= R/(R-1) * Sbar.
inline BoundCertificate check_M_bound(const ChainingMeasure& cm, const MajorantProfile& prof) {
  return certify("normalizer_bound", cm.M, cm.R / (cm.R - 1.0) * prof.Sbar, Json{{"R", cm.R}});
}

/// Largest deviation of the per-level structure of nu from its definition:
/// level k puts mass proportional to m(u) r_k(u) R^k on u, spread over
/// B_k(u) proportionally to m. Also compares the aggregate with the level sum.
inline double nu_decomposition_error(const ChainingMeasure& cm, const MetricSpace& space, const ProbMeasure& m,
                                     const RadiiTable& radii) {
  const std::size_t n = space.size();
  double err = 0.0;
  std::vector<double> aggregate(n * n, 0.0);
  for (const auto& level : cm.levels) {
    std::vector<double> head(n, 0.0);
    for (const auto& p : level.pairs) {
      head[p.u] += p.weight;
      aggregate[p.u * n + p.v] += p.weight;
    }
    for (std::size_t u = 0; u < n; ++u) {
      const double r = radii(level.k, u);
      const double expected = m[u] * r * rpow(cm.R, level.k) / cm.M;
      err = std::max(err, std::abs(head[u] - expected));
    }
    for (const auto& p : level.pairs) {
      const double r = radii(level.k, p.u);
      const double conditional = p.weight / head[p.u];
      err = std::max(err, std::abs(conditional - m[p.v] / ball_mass(space, m, p.u, r)));
      if (space(p.u, p.v) > r) err = std::max(err, p.weight);
    }
  }
  for (const auto& p : cm.pairs) err = std::max(err, std::abs(aggregate[p.u * n + p.v] - p.weight));
  return err;
}

}  // namespace chainkit
