#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "chainkit/error.hpp"
#include "chainkit/metric.hpp"
#include "chainkit/orlicz.hpp"
#include "chainkit/process.hpp"

namespace chainkit {

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

/// Inline JSON when the text starts with '{', otherwise a file path.
inline Json json_from_text_or_file(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return Json::parse(text);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
  }
  return read_json_file(text);
}

namespace detail {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

inline Matrix get_matrix(const Json& j, const char* key) {
  try {
    return j.at(key).get<Matrix>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Orlicz specs: {"kind": "power", "p": 2} | {"kind": "identity"} |
// {"kind": "piecewise", "knots": [[x, y], ...]}

inline OrliczFn orlicz_from_json(const Json& j) {
  const auto kind = detail::get_or<std::string>(j, "kind", "");
  if (kind == "identity") return OrliczFn::identity();
  if (kind == "power") {
    if (!j.contains("p")) throw Error(ErrorCode::ParseError, "power spec needs 'p'");
    return OrliczFn::power(j.at("p").get<double>());
  }
  if (kind == "piecewise") {
    std::vector<OrliczFn::Knot> knots;
    for (const auto& k : j.at("knots")) {
      if (!k.is_array() || k.size() != 2) throw Error(ErrorCode::ParseError, "each knot must be [x, y]");
      knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    return OrliczFn::piecewise(std::move(knots));
  }
  throw Error(ErrorCode::ParseError, "unknown Orlicz kind '" + kind + "'");
}

inline Json orlicz_to_json(const OrliczFn& fn) {
  switch (fn.kind()) {
    case OrliczFn::Kind::Identity: return Json{{"kind", "identity"}};
    case OrliczFn::Kind::Power: return Json{{"kind", "power"}, {"p", fn.exponent()}};
    case OrliczFn::Kind::Piecewise: {
      Json knots = Json::array();
      for (const auto& [x, y] : fn.knots()) knots.push_back({x, y});
      return Json{{"kind", "piecewise"}, {"knots", knots}};
    }
    case OrliczFn::Kind::Custom: return Json{{"kind", "custom"}, {"name", fn.name()}};
  }
  return Json();
}

/// Accepts inline JSON, a file path, or the shorthands "identity" and "power:P".
inline OrliczFn parse_orlicz(const std::string& text) {
  if (text == "identity") return OrliczFn::identity();
  if (text.rfind("power:", 0) == 0) {
    try {
      return OrliczFn::power(std::stod(text.substr(6)));
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::ParseError, "bad power shorthand '" + text + "'");
    }
  }
  return orlicz_from_json(json_from_text_or_file(text));
}

// ---------------------------------------------------------------------------
// Space files: {"dist": [[...]], "measure": [...]} or {"family": {...}}

inline FamilyKind family_kind_from_string(const std::string& s) {
  if (s == "path") return FamilyKind::Path;
  if (s == "grid2d") return FamilyKind::Grid2d;
  if (s == "ultrametric-tree") return FamilyKind::UltrametricTree;
  if (s == "random-euclidean") return FamilyKind::RandomEuclidean;
  if (s == "explicit") return FamilyKind::Explicit;
  throw Error(ErrorCode::InvalidSpec, "unknown family kind '" + s + "'");
}

inline SpaceFamilySpec family_from_json(const Json& j) {
  using detail::get_or;
  SpaceFamilySpec spec;
  spec.kind = family_kind_from_string(get_or<std::string>(j, "kind", ""));
  spec.n = get_or<std::size_t>(j, "n", spec.n);
  spec.rows = get_or<std::size_t>(j, "rows", spec.rows);
  spec.cols = get_or<std::size_t>(j, "cols", spec.cols);
  spec.depth = get_or<std::size_t>(j, "depth", spec.depth);
  spec.branching = get_or<std::size_t>(j, "branching", spec.branching);
  spec.dim = get_or<std::size_t>(j, "dim", spec.dim);
  spec.step = get_or<double>(j, "step", spec.step);
  spec.ratio = get_or<double>(j, "ratio", spec.ratio);
  spec.seed = get_or<std::uint64_t>(j, "seed", spec.seed);
  const auto measure = get_or<std::string>(j, "measure", "uniform");
  if (measure == "uniform") spec.measure = MeasureKind::Uniform;
  else if (measure == "random") spec.measure = MeasureKind::Random;
  else throw Error(ErrorCode::InvalidSpec, "unknown measure kind '" + measure + "'");
  if (spec.kind == FamilyKind::Explicit) spec.dist = detail::get_matrix(j, "dist");
  return spec;
}

inline Json family_to_json(const SpaceFamilySpec& s) {
  Json j{{"kind", to_string(s.kind)},
         {"measure", s.measure == MeasureKind::Uniform ? "uniform" : "random"},
         {"seed", s.seed}};
  switch (s.kind) {
    case FamilyKind::Path: j["n"] = s.n; j["step"] = s.step; break;
    case FamilyKind::Grid2d: j["rows"] = s.rows; j["cols"] = s.cols; j["step"] = s.step; break;
    case FamilyKind::UltrametricTree:
      j["depth"] = s.depth; j["branching"] = s.branching; j["step"] = s.step; j["ratio"] = s.ratio;
      break;
    case FamilyKind::RandomEuclidean: j["n"] = s.n; j["dim"] = s.dim; j["step"] = s.step; break;
    case FamilyKind::Explicit: j["dist"] = s.dist; break;
  }
  return j;
}

/// Parses a space document; an explicit "measure" overrides the default.
inline GeneratedSpace space_from_json(const Json& j) {
  std::optional<GeneratedSpace> g;
  if (j.contains("family")) {
    g = generate_space(family_from_json(j.at("family")));
  } else if (j.contains("dist")) {
    auto labels = detail::get_or<std::vector<std::string>>(j, "labels", {});
    auto space = build_metric_space(detail::get_matrix(j, "dist"), std::move(labels));
    const auto n = space.size();
    g = GeneratedSpace{std::move(space), ProbMeasure::uniform(n), FamilyKind::Explicit, {}, {}};
    if (j.contains("coords")) g->coords = detail::get_matrix(j, "coords");
    if (j.contains("positions")) g->positions = j.at("positions").get<Vector>();
  } else {
    throw Error(ErrorCode::ParseError, "space document needs 'dist' or 'family'");
  }
  if (j.contains("measure") && j.at("measure").is_array()) {
    auto w = j.at("measure").get<Vector>();
    if (w.size() != g->space.size()) throw Error(ErrorCode::InvalidMeasure, "measure length differs from point count");
    g->measure = ProbMeasure(std::move(w));
  }
  return std::move(*g);
}

inline GeneratedSpace read_space_file(const std::filesystem::path& path) { return space_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Process model specs: {"kind": "auto" | "embed-euclidean" | "brownian-path" |
// "custom-cov", "positions": [...], "cov": [[...]], "scale": "max" | number}

struct ModelSpec {
  std::string kind = "auto";
  ModelParams params;
  std::optional<double> scale;  // empty: the largest admissible scale
};

inline ModelSpec model_spec_from_json(const Json& j) {
  ModelSpec spec;
  spec.kind = detail::get_or<std::string>(j, "kind", "auto");
  if (j.contains("positions")) spec.params.positions = j.at("positions").get<Vector>();
  if (j.contains("cov")) spec.params.cov = detail::get_matrix(j, "cov");
  if (j.contains("coords")) spec.params.coords = detail::get_matrix(j, "coords");
  if (j.contains("scale") && j.at("scale").is_number()) spec.scale = j.at("scale").get<double>();
  return spec;
}

inline ModelSpec parse_model_spec(const std::string& text) {
  if (text.empty() || text == "auto") return ModelSpec{};
  if (text == "embed-euclidean" || text == "brownian-path") return ModelSpec{text, {}, std::nullopt};
  return model_spec_from_json(json_from_text_or_file(text));
}

inline GaussianProcessModel build_model(const GeneratedSpace& g, const ModelSpec& spec) {
  if (spec.kind == "auto") return natural_model(g);
  ModelParams params = spec.params;
  if (spec.kind == "embed-euclidean") {
    if (params.coords.empty()) params.coords = g.coords;
    return gaussian_from_metric(g.space, ModelKind::EmbedEuclidean, params);
  }
  if (spec.kind == "brownian-path") {
    if (params.positions.empty()) params.positions = g.positions;
    return gaussian_from_metric(g.space, ModelKind::BrownianPath, params);
  }
  if (spec.kind == "custom-cov") return gaussian_from_metric(g.space, ModelKind::CustomCov, params);
  throw Error(ErrorCode::InvalidSpec, "unknown model kind '" + spec.kind + "'");
}

}  // namespace chainkit
