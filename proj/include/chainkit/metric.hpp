#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chainkit/error.hpp"
#include "chainkit/rng.hpp"

namespace chainkit {

using Vector = std::vector<double>;
using Matrix = std::vector<std::vector<double>>;

/// Finite metric space with a validated, dense distance matrix.
///
/// Immutable after construction. Only build_metric_space creates instances,
/// so every MetricSpace in circulation satisfies the metric axioms.
class MetricSpace {
 public:
  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return dist_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {dist_.data() + i * n_, n_}; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  double diameter() const noexcept { return diameter_; }

  Matrix to_matrix() const {
    Matrix m(n_, Vector(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) m[i][j] = (*this)(i, j);
    return m;
  }

  /// Sub-space on the given point indices (in the given order).
  MetricSpace restrict_to(std::span<const std::size_t> points) const {
    MetricSpace out;
    out.n_ = points.size();
    out.dist_.resize(out.n_ * out.n_);
    for (std::size_t a = 0; a < out.n_; ++a)
      for (std::size_t b = 0; b < out.n_; ++b) out.dist_[a * out.n_ + b] = (*this)(points[a], points[b]);
    if (!labels_.empty())
      for (auto p : points) out.labels_.push_back(labels_[p]);
    out.diameter_ = out.n_ ? *std::max_element(out.dist_.begin(), out.dist_.end()) : 0.0;
    return out;
  }

  /// Same space with every distance multiplied by `factor` > 0.
  MetricSpace scaled(double factor) const {
    MetricSpace out = *this;
    for (auto& d : out.dist_) d *= factor;
    out.diameter_ *= factor;
    return out;
  }

 private:
  friend MetricSpace build_metric_space(const Matrix& dist, std::vector<std::string> labels);
  MetricSpace() = default;

  std::size_t n_ = 0;
  std::vector<double> dist_;
  std::vector<std::string> labels_;
  double diameter_ = 0.0;
};

/// Relative slack allowed in the triangle inequality for floating-point inputs.
inline constexpr double kTriangleRelTol = 1e-12;

inline MetricSpace build_metric_space(const Matrix& dist, std::vector<std::string> labels = {}) {
  const std::size_t n = dist.size();
  if (n == 0) throw Error(ErrorCode::NotSquare, "distance matrix is empty");
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i].size() != n)
      throw Error(ErrorCode::NotSquare, "row " + std::to_string(i) + " has " + std::to_string(dist[i].size()) +
                                            " entries, expected " + std::to_string(n));
  }
  if (!labels.empty() && labels.size() != n)
    throw Error(ErrorCode::InvalidSpec, "label count does not match point count");

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dist[i][j];
      const auto where = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
      if (!std::isfinite(d)) throw Error(ErrorCode::NonFiniteDistance, "entry " + where + " is not finite");
      if (d < 0) throw Error(ErrorCode::NegativeDistance, "entry " + where + " is negative");
      if (i == j && d != 0) throw Error(ErrorCode::NonZeroDiagonal, "diagonal entry " + where + " is nonzero");
      if (d != dist[j][i]) throw Error(ErrorCode::AsymmetricDistance, "entry " + where + " differs from its transpose");
      if (i != j && d == 0)
        throw Error(ErrorCode::ZeroOffDiagonal, "points " + std::to_string(i) + " and " + std::to_string(j) +
                                                    " coincide; merge them before building the space");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        const double via = dist[i][j] + dist[j][k];
        if (dist[i][k] > via * (1.0 + kTriangleRelTol)) {
          throw TriangleViolationError(i, j, k,
                                       "d(" + std::to_string(i) + "," + std::to_string(k) + ") exceeds d(" +
                                           std::to_string(i) + "," + std::to_string(j) + ") + d(" +
                                           std::to_string(j) + "," + std::to_string(k) + ")");
        }
      }
    }
  }

  MetricSpace space;
  space.n_ = n;
  space.dist_.reserve(n * n);
  for (const auto& r : dist) space.dist_.insert(space.dist_.end(), r.begin(), r.end());
  space.labels_ = std::move(labels);
  space.diameter_ = *std::max_element(space.dist_.begin(), space.dist_.end());
  return space;
}

inline double diameter(const MetricSpace& space) noexcept { return space.diameter(); }

/// Full-support probability weights on the points of a space.
class ProbMeasure {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Validates positivity and unit mass (within kSumTolerance), then renormalizes.
  explicit ProbMeasure(Vector weights) : w_(std::move(weights)) {
    if (w_.empty()) throw Error(ErrorCode::InvalidMeasure, "measure has no atoms");
    double total = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      if (!std::isfinite(w_[i]) || w_[i] <= 0)
        throw Error(ErrorCode::InvalidMeasure, "weight " + std::to_string(i) + " is not strictly positive");
      total += w_[i];
    }
    if (std::abs(total - 1.0) > kSumTolerance)
      throw Error(ErrorCode::InvalidMeasure, "weights sum to " + std::to_string(total) + ", not 1");
    if (total != 1.0)
      for (auto& x : w_) x /= total;
  }

  static ProbMeasure uniform(std::size_t n) { return ProbMeasure(Vector(n, 1.0 / static_cast<double>(n))); }

  /// Normalizes arbitrary positive weights.
  static ProbMeasure from_unnormalized(Vector weights) {
    double total = 0.0;
    for (double x : weights) total += x;
    if (!(total > 0)) throw Error(ErrorCode::InvalidMeasure, "weights do not have positive total");
    for (auto& x : weights) x /= total;
    return ProbMeasure(std::move(weights));
  }

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const noexcept { return w_[i]; }
  const Vector& weights() const noexcept { return w_; }

  double integrate(std::span<const double> f) const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * f[i];
    return s;
  }

 private:
  Vector w_;
};

/// m(B(x, eps)) for the closed ball. Summed in index order so that a larger
/// ball never gets a smaller floating-point mass than a smaller one.
inline double ball_mass(const MetricSpace& space, const ProbMeasure& m, std::size_t x, double eps) {
  if (eps < 0) throw Error(ErrorCode::DomainError, "ball radius must be nonnegative");
  double mass = 0.0;
  const auto r = space.row(x);
  for (std::size_t y = 0; y < r.size(); ++y) mass += r[y] <= eps ? m[y] : 0.0;
  return mass;
}

/// Sorted distinct distances from x with the closed-ball mass at each.
/// The first entry is always (0, m({x})).
struct BallProfile {
  Vector radius;
  Vector mass;
};

inline BallProfile ball_profile(const MetricSpace& space, const ProbMeasure& m, std::size_t x) {
  BallProfile out;
  const auto r = space.row(x);
  out.radius.assign(r.begin(), r.end());
  std::sort(out.radius.begin(), out.radius.end());
  out.radius.erase(std::unique(out.radius.begin(), out.radius.end()), out.radius.end());
  out.mass.reserve(out.radius.size());
  for (double eps : out.radius) out.mass.push_back(ball_mass(space, m, x, eps));
  return out;
}

// ---------------------------------------------------------------------------
// Test families

enum class FamilyKind { Path, Grid2d, UltrametricTree, RandomEuclidean, Explicit };
enum class MeasureKind { Uniform, Random };

inline std::string_view to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::Path: return "path";
    case FamilyKind::Grid2d: return "grid2d";
    case FamilyKind::UltrametricTree: return "ultrametric-tree";
    case FamilyKind::RandomEuclidean: return "random-euclidean";
    case FamilyKind::Explicit: return "explicit";
  }
  return "?";
}

struct SpaceFamilySpec {
  FamilyKind kind = FamilyKind::Path;
  std::size_t n = 2;          // path, random-euclidean
  std::size_t rows = 2;       // grid2d
  std::size_t cols = 2;       // grid2d
  std::size_t depth = 1;      // ultrametric-tree
  std::size_t branching = 2;  // ultrametric-tree
  std::size_t dim = 2;        // random-euclidean
  double step = 1.0;          // path / grid spacing, tree leaf distance, euclidean box side
  double ratio = 2.0;         // ultrametric-tree: distance growth per level
  Matrix dist;                // explicit
  MeasureKind measure = MeasureKind::Uniform;
  std::uint64_t seed = 0;
};

/// A generated space plus whatever geometry its family carries.
struct GeneratedSpace {
  MetricSpace space;
  ProbMeasure measure;
  FamilyKind kind;
  Matrix coords;    // grid2d, random-euclidean
  Vector positions; // path
};

namespace detail {

inline Matrix euclidean_distances(const Matrix& pts) {
  const std::size_t n = pts.size();
  Matrix d(n, Vector(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < pts[i].size(); ++c) {
        const double diff = pts[i][c] - pts[j][c];
        s += diff * diff;
      }
      d[i][j] = d[j][i] = std::sqrt(s);
    }
  }
  return d;
}

inline std::size_t checked_pow(std::size_t base, std::size_t exp) {
  std::size_t v = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (v > (std::size_t{1} << 20) / base) throw Error(ErrorCode::InvalidSpec, "ultrametric tree too large");
    v *= base;
  }
  return v;
}

}  // namespace detail

inline GeneratedSpace generate_space(const SpaceFamilySpec& spec) {
  Matrix dist;
  Matrix coords;
  Vector positions;
  const auto positive = [](double v, const char* what) {
    if (!(v > 0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidSpec, std::string(what) + " must be positive");
  };

  switch (spec.kind) {
    case FamilyKind::Path: {
      if (spec.n == 0) throw Error(ErrorCode::InvalidSpec, "path needs n >= 1");
      positive(spec.step, "step");
      for (std::size_t i = 0; i < spec.n; ++i) positions.push_back(static_cast<double>(i) * spec.step);
      dist.assign(spec.n, Vector(spec.n, 0.0));
      for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t j = 0; j < spec.n; ++j) dist[i][j] = std::abs(positions[i] - positions[j]);
      break;
    }
    case FamilyKind::Grid2d: {
      if (spec.rows == 0 || spec.cols == 0) throw Error(ErrorCode::InvalidSpec, "grid2d needs rows, cols >= 1");
      positive(spec.step, "step");
      for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.cols; ++c)
          coords.push_back({static_cast<double>(r) * spec.step, static_cast<double>(c) * spec.step});
      dist = detail::euclidean_distances(coords);
      break;
    }
    case FamilyKind::UltrametricTree: {
      if (spec.branching < 2) throw Error(ErrorCode::InvalidSpec, "ultrametric-tree needs branching >= 2");
      positive(spec.step, "step");
      if (!(spec.ratio >= 1.0)) throw Error(ErrorCode::InvalidSpec, "ultrametric-tree needs ratio >= 1");
      const std::size_t leaves = detail::checked_pow(spec.branching, spec.depth);
      dist.assign(leaves, Vector(leaves, 0.0));
      for (std::size_t i = 0; i < leaves; ++i) {
        for (std::size_t j = 0; j < leaves; ++j) {
          if (i == j) continue;
          // Height of the lowest common ancestor: number of base-`branching`
          // digits that must be stripped before the two leaf indices agree.
          std::size_t a = i, b = j, h = 0;
          while (a != b) {
            a /= spec.branching;
            b /= spec.branching;
            ++h;
          }
          dist[i][j] = spec.step * std::pow(spec.ratio, static_cast<double>(h - 1));
        }
      }
      break;
    }
    case FamilyKind::RandomEuclidean: {
      if (spec.n == 0 || spec.dim == 0) throw Error(ErrorCode::InvalidSpec, "random-euclidean needs n, dim >= 1");
      positive(spec.step, "step");
      Engine rng = make_engine(spec.seed, 0);
      std::uniform_real_distribution<double> unit(0.0, spec.step);
      coords.assign(spec.n, Vector(spec.dim));
      for (auto& p : coords)
        for (auto& c : p) c = unit(rng);
      dist = detail::euclidean_distances(coords);
      break;
    }
    case FamilyKind::Explicit: {
      dist = spec.dist;
      break;
    }
  }

  MetricSpace space = build_metric_space(dist);
  const std::size_t n = space.size();
  std::optional<ProbMeasure> measure;
  if (spec.measure == MeasureKind::Uniform) {
    measure = ProbMeasure::uniform(n);
  } else {
    Engine rng = make_engine(spec.seed, 1);
    std::uniform_real_distribution<double> weight(0.05, 1.0);
    Vector w(n);
    for (auto& x : w) x = weight(rng);
    measure = ProbMeasure::from_unnormalized(std::move(w));
  }
  return GeneratedSpace{std::move(space), std::move(*measure), spec.kind, std::move(coords), std::move(positions)};
}

}  // namespace chainkit
