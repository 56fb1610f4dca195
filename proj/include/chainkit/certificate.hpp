#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace chainkit {

using Json = nlohmann::json;

/// Absolute slack tolerance; becomes relative once the right side exceeds 1.
inline constexpr double kSlackTolerance = 1e-9;

inline double slack_tolerance(double rhs) noexcept { return kSlackTolerance * std::max(1.0, std::abs(rhs)); }

/// One checked inequality instance lhs <= rhs.
struct BoundCertificate {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = true;
  Json witness = Json::object();
};

inline BoundCertificate certify(std::string name, double lhs, double rhs, Json witness = Json::object()) {
  BoundCertificate c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.slack = rhs - lhs;
  c.pass = !std::isnan(c.slack) && c.slack >= -slack_tolerance(rhs);
  c.witness = std::move(witness);
  return c;
}

/// Entrywise lhs <= rhs; the certificate reports the entry with the smallest
/// normalized slack and records its index as witness["point"].
inline BoundCertificate certify_entrywise(std::string name, std::span<const double> lhs, std::span<const double> rhs,
                                          Json witness = Json::object()) {
  std::size_t worst = 0;
  double worst_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const double score = (rhs[i] - lhs[i]) / std::max(1.0, std::abs(rhs[i]));
    if (score < worst_score || std::isnan(score)) {
      worst_score = score;
      worst = i;
      if (std::isnan(score)) break;
    }
  }
  if (lhs.empty()) return certify(std::move(name), 0.0, 0.0, std::move(witness));
  witness["point"] = worst;
  return certify(std::move(name), lhs[worst], rhs[worst], std::move(witness));
}

inline Json to_json(const BoundCertificate& c) {
  return Json{{"name", c.name}, {"lhs", c.lhs},   {"rhs", c.rhs},
              {"slack", c.slack}, {"pass", c.pass}, {"witness", c.witness}};
}

/// Running aggregate over certificates of one kind. Keeps the certificate
/// with the smallest normalized slack; the first one wins ties, so merge
/// order fixes the result.
struct CertificateTally {
  std::size_t checks = 0;
  std::size_t violations = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  std::optional<BoundCertificate> worst;
  double worst_score = std::numeric_limits<double>::infinity();

  void add(const BoundCertificate& c, const Json* context = nullptr) {
    ++checks;
    min_slack = std::min(min_slack, c.slack);
    if (!c.pass) ++violations;
    const double score = c.slack / std::max(1.0, std::abs(c.rhs));
    if (!worst || score < worst_score || (std::isnan(score) && !std::isnan(worst_score))) {
      worst_score = score;
      worst = c;
      if (context)
        for (const auto& [k, v] : context->items()) worst->witness[k] = v;
    }
  }

  void merge(const CertificateTally& other) {
    checks += other.checks;
    violations += other.violations;
    min_slack = std::min(min_slack, other.min_slack);
    if (other.worst && (!worst || other.worst_score < worst_score)) {
      worst = other.worst;
      worst_score = other.worst_score;
    }
  }
};

using TallyMap = std::map<std::string, CertificateTally>;

inline std::size_t total_violations(const TallyMap& m) {
  std::size_t v = 0;
  for (const auto& [_, t] : m) v += t.violations;
  return v;
}

inline void merge_into(TallyMap& into, const TallyMap& from) {
  for (const auto& [name, t] : from) into[name].merge(t);
}

inline Json to_json(const CertificateTally& t, const char* count_key = "checks") {
  return Json{{count_key, t.checks},
              {"violations", t.violations},
              {"min_slack", t.checks ? Json(t.min_slack) : Json(nullptr)},
              {"worst_witness", t.worst ? to_json(*t.worst) : Json(nullptr)}};
}

inline Json to_json(const TallyMap& m, const char* count_key = "checks") {
  Json out = Json::object();
  for (const auto& [name, t] : m) out[name] = to_json(t, count_key);
  return out;
}

}  // namespace chainkit
