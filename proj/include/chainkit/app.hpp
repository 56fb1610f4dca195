#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chainkit/certificate.hpp"
#include "chainkit/chaining.hpp"
#include "chainkit/error.hpp"
#include "chainkit/fleet.hpp"
#include "chainkit/io.hpp"
#include "chainkit/majorant.hpp"
#include "chainkit/orlicz.hpp"
#include "chainkit/parallel.hpp"
#include "chainkit/process.hpp"
#include "chainkit/sobolev.hpp"

#ifndef CHAINKIT_VERSION
#define CHAINKIT_VERSION "0.0.0"
#endif

namespace chainkit {

inline constexpr const char* kToolVersion = CHAINKIT_VERSION;

enum class Format { Json, Csv, Text };

inline Format format_from_string(const std::string& s) {
  if (s == "json") return Format::Json;
  if (s == "csv") return Format::Csv;
  if (s == "text") return Format::Text;
  throw Error(ErrorCode::InvalidSpec, "unknown format '" + s + "' (expected json, csv or text)");
}

inline std::string to_string(Format f) {
  switch (f) {
    case Format::Json: return "json";
    case Format::Csv: return "csv";
    case Format::Text: return "text";
  }
  return "json";
}

struct RunConfig {
  std::string subcommand;
  std::string space;    // space document path (or inline JSON)
  std::string measure;  // weights file, inline JSON array, or empty
  std::string orlicz = "power:2";
  double R = 4.0;
  std::optional<double> p;
  std::string psi;  // empty: psi = phi for power phi
  double alpha = 0.0;
  double beta = 1.0;
  double a = 1.0;
  double b = 1.0;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 0;
  std::string fleet;  // "default" or JSON {count, max_points}
  std::string model = "auto";
  std::optional<double> subset_frac;
  std::string emit_nu;
  std::string record_path;  // replay input
  // Output plumbing; excluded from the digest.
  unsigned threads = 1;
  Format format = Format::Json;
  std::string out;
  std::string record_out;
};

/// Everything that determines the payload. Threads and output paths are left out.
inline Json config_to_json(const RunConfig& c) {
  Json j{{"subcommand", c.subcommand}, {"space", c.space}, {"measure", c.measure}, {"orlicz", c.orlicz},
         {"R", c.R},                   {"psi", c.psi},     {"alpha", c.alpha},     {"beta", c.beta},
         {"a", c.a},                   {"b", c.b},         {"seed", c.seed},       {"fleet", c.fleet},
         {"model", c.model},           {"emit_nu", c.emit_nu}};
  j["p"] = c.p ? Json(*c.p) : Json(nullptr);
  j["trials"] = c.trials ? Json(*c.trials) : Json(nullptr);
  j["subset_frac"] = c.subset_frac ? Json(*c.subset_frac) : Json(nullptr);
  if (!c.record_path.empty()) j["record"] = c.record_path;
  return j;
}

inline RunConfig config_from_json(const Json& j) {
  using detail::get_or;
  RunConfig c;
  c.subcommand = get_or<std::string>(j, "subcommand", "");
  c.space = get_or<std::string>(j, "space", "");
  c.measure = get_or<std::string>(j, "measure", "");
  c.orlicz = get_or<std::string>(j, "orlicz", c.orlicz);
  c.R = get_or<double>(j, "R", c.R);
  c.psi = get_or<std::string>(j, "psi", "");
  c.alpha = get_or<double>(j, "alpha", c.alpha);
  c.beta = get_or<double>(j, "beta", c.beta);
  c.a = get_or<double>(j, "a", c.a);
  c.b = get_or<double>(j, "b", c.b);
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.fleet = get_or<std::string>(j, "fleet", "");
  c.model = get_or<std::string>(j, "model", "auto");
  c.emit_nu = get_or<std::string>(j, "emit_nu", "");
  c.record_path = get_or<std::string>(j, "record", "");
  if (j.contains("p") && !j.at("p").is_null()) c.p = j.at("p").get<double>();
  if (j.contains("trials") && !j.at("trials").is_null()) c.trials = j.at("trials").get<std::size_t>();
  if (j.contains("subset_frac") && !j.at("subset_frac").is_null()) c.subset_frac = j.at("subset_frac").get<double>();
  return c;
}

/// FNV-1a over the canonical config serialization, as 16 hex digits.
inline std::string config_digest(const RunConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Json>> rows;
};

struct RunRecord {
  RunConfig config;
  std::string digest;
  std::string version = kToolVersion;
  std::string started;
  std::string finished;
  Json payload = Json::object();
  TallyMap certificates;
  std::optional<Table> table;  // CSV body when the payload is naturally tabular
  std::vector<std::string> summary;
  std::size_t violations = 0;
};

namespace detail {

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline GeneratedSpace load_space(const RunConfig& c) {
  if (c.space.empty()) throw Error(ErrorCode::InvalidSpec, c.subcommand + " needs --space FILE");
  auto g = space_from_json(json_from_text_or_file(c.space));
  if (c.measure.empty() || c.measure == "uniform") return g;
  Json mj;
  const auto first = c.measure.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && c.measure[first] == '[') {
    try {
      mj = Json::parse(c.measure);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
  } else {
    mj = json_from_text_or_file(c.measure);
  }
  if (mj.is_object()) mj = mj.at("weights");
  auto w = mj.get<Vector>();
  if (w.size() != g.space.size()) throw Error(ErrorCode::InvalidMeasure, "measure length differs from point count");
  g.measure = ProbMeasure(std::move(w));
  return g;
}

inline Json nu_to_json(const ChainingMeasure& cm) {
  Json pairs = Json::array();
  for (const auto& p : cm.pairs) pairs.push_back({p.u, p.v, p.weight});
  Json levels = Json::object();
  for (const auto& level : cm.levels) {
    Json lp = Json::array();
    for (const auto& p : level.pairs) lp.push_back({p.u, p.v, p.weight});
    levels[std::to_string(level.k)] = Json{{"weight", level.weight}, {"pairs", lp}};
  }
  return Json{{"M", cm.M}, {"R", cm.R}, {"pairs", pairs}, {"levels", levels}};
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

inline Table tally_table(const TallyMap& m) {
  Table t{{"certificate", "checks", "violations", "min_slack", "worst_lhs", "worst_rhs"}, {}};
  for (const auto& [name, tally] : m)
    t.rows.push_back({name, tally.checks, tally.violations, tally.checks ? Json(tally.min_slack) : Json(nullptr),
                      tally.worst ? Json(tally.worst->lhs) : Json(nullptr),
                      tally.worst ? Json(tally.worst->rhs) : Json(nullptr)});
  return t;
}

inline void summarize_tallies(RunRecord& r, const TallyMap& m) {
  for (const auto& [name, t] : m)
    r.summary.push_back(name + ": " + std::to_string(t.checks) + " checks, " + std::to_string(t.violations) +
                        " violations, min slack " + num(t.min_slack));
}

inline FleetConfig fleet_from_text(const std::string& text, std::uint64_t seed) {
  FleetConfig fc;
  fc.seed = seed;
  if (text.empty() || text == "default") return fc;
  const Json j = json_from_text_or_file(text);
  fc.count = get_or<std::size_t>(j, "count", fc.count);
  fc.max_points = get_or<std::size_t>(j, "max_points", fc.max_points);
  return fc;
}

// ---------------------------------------------------------------------------
// Subcommands

inline void run_profile(RunRecord& r) {
  const auto& c = r.config;
  const auto g = load_space(c);
  const auto fn = parse_orlicz(c.orlicz);
  const auto prof = profile(g.space, g.measure, fn);
  const auto radii = radii_table(g.space, g.measure, fn, c.R, &prof.balls);
  Json levels = Json::array();
  for (int k = radii.k0; k <= radii.kmax; ++k) levels.push_back(Json{{"k", k}, {"r", radii.at(k)}});
  r.payload = Json{{"phi", orlicz_to_json(fn)}, {"n", g.space.size()}, {"diameter", g.space.diameter()},
                   {"sigma", prof.sigma},       {"S", prof.S},         {"Sbar", prof.Sbar},
                   {"R", c.R},                  {"k0", radii.k0},      {"kmax", radii.kmax},
                   {"radii", levels}};
  for (const auto& cert : radius_sum_check(prof, radii)) r.certificates["radius_sum"].add(cert);

  Table t{{"point", "sigma"}, {}};
  for (int k = radii.k0; k <= radii.kmax; ++k) t.header.push_back("r_" + std::to_string(k));
  for (std::size_t x = 0; x < g.space.size(); ++x) {
    std::vector<Json> row{x, prof.sigma[x]};
    for (int k = radii.k0; k <= radii.kmax; ++k) row.push_back(radii(k, x));
    t.rows.push_back(std::move(row));
  }
  r.table = std::move(t);
  r.summary.push_back("points " + std::to_string(g.space.size()) + ", diameter " + num(g.space.diameter()));
  r.summary.push_back("S = " + num(prof.S) + ", Sbar = " + num(prof.Sbar));
  r.summary.push_back("k0 = " + std::to_string(radii.k0) + ", kmax = " + std::to_string(radii.kmax) + " at R = " +
                      num(c.R));
}

inline void run_chain(RunRecord& r) {
  const auto& c = r.config;
  const auto g = load_space(c);
  const auto fn = parse_orlicz(c.orlicz);
  const auto prof = profile(g.space, g.measure, fn);
  const auto radii = radii_table(g.space, g.measure, fn, c.R, &prof.balls);
  const auto cm = build_chaining_measure(g.space, g.measure, radii);
  r.certificates = run_lemma_suite(g.space, g.measure, fn, c.R, c.seed);
  Json levels = Json::object();
  for (const auto& level : cm.levels)
    levels[std::to_string(level.k)] = Json{{"weight", level.weight}, {"pairs", level.pairs.size()}};
  r.payload = Json{{"phi", orlicz_to_json(fn)}, {"R", c.R},         {"k0", radii.k0},
                   {"kmax", radii.kmax},        {"M", cm.M},        {"M_bound", c.R / (c.R - 1.0) * prof.Sbar},
                   {"nu_total", cm.total()},    {"pairs", cm.pairs.size()}, {"levels", levels},
                   {"certificates", to_json(r.certificates)}};
  if (!c.emit_nu.empty()) write_text_file(c.emit_nu, nu_to_json(cm).dump(2) + "\n");
  r.table = tally_table(r.certificates);
  r.summary.push_back("M = " + num(cm.M) + " (bound " + num(c.R / (c.R - 1.0) * prof.Sbar) + "), nu total " +
                      num(cm.total()));
  summarize_tallies(r, r.certificates);
}

inline void run_lemmas(RunRecord& r) {
  const auto& c = r.config;
  std::vector<FleetMember> fleet;
  Json source;
  if (!c.space.empty()) {
    auto g = load_space(c);
    SpaceFamilySpec spec;
    spec.kind = g.kind;
    fleet.push_back(FleetMember{0, spec, std::move(g)});
    source = Json{{"space", c.space}};
  } else {
    const auto fc = fleet_from_text(c.fleet, c.seed);
    fleet = generate_fleet(fc);
    source = Json{{"fleet", Json{{"count", fc.count}, {"max_points", fc.max_points}, {"seed", fc.seed}}}};
  }
  const auto report = run_lemma_fleet(fleet, default_lemma_configs(), c.seed, c.threads);
  r.certificates = report.totals;
  r.payload = source;
  r.payload["spaces"] = report.spaces;
  r.payload["configurations"] = report.configurations;
  r.payload["rows"] = report.rows.size();
  r.payload["certificates"] = to_json(report.totals);
  Table t{{"space", "family", "n", "phi", "R", "lemma", "checks", "violations", "min_slack"}, {}};
  for (const auto& row : report.rows)
    t.rows.push_back({row.space, row.family, row.n, row.phi, row.R, row.lemma, row.checks, row.violations,
                      row.checks ? Json(row.min_slack) : Json(nullptr)});
  r.table = std::move(t);
  r.summary.push_back(std::to_string(report.spaces) + " spaces x " + std::to_string(report.configurations) +
                      " parameter sets");
  summarize_tallies(r, r.certificates);
}

inline void run_verify_sobolev(RunRecord& r) {
  const auto& c = r.config;
  const auto g = load_space(c);
  const auto fn = parse_orlicz(c.orlicz);
  SuiteConfig sc;
  sc.trials = c.trials.value_or(1000);
  sc.seed = c.seed;
  sc.R = c.R;
  sc.a = c.a;
  sc.b = c.b;
  sc.threads = c.threads;
  if (!c.psi.empty()) sc.psi = PsiParams{parse_orlicz(c.psi), c.alpha, c.beta};
  if (c.p) sc.powers = {*c.p};
  r.certificates = random_function_suite(g.space, g.measure, fn, sc);
  r.payload = Json{{"phi", orlicz_to_json(fn)}, {"R", c.R}, {"a", c.a}, {"b", c.b}, {"trials", sc.trials},
                   {"inequalities", suite_to_json(r.certificates)}};
  r.table = tally_table(r.certificates);
  summarize_tallies(r, r.certificates);
}

inline void run_verify_process(RunRecord& r) {
  const auto& c = r.config;
  const auto g = load_space(c);
  const auto fn = parse_orlicz(c.orlicz);
  const auto spec = parse_model_spec(c.model);
  const auto base = build_model(g, spec);
  McConfig mc;
  mc.trials = c.trials.value_or(10000);
  mc.seed = c.seed;
  mc.threads = c.threads;

  auto model_for = [&](double p) {
    if (spec.scale) return base.with_scale(*spec.scale);
    return scaled_for_power(base, g.space, p);
  };
  if (!fn.is_power() && !spec.scale)
    throw Error(ErrorCode::InvalidSpec, "non-power phi needs an explicit model scale (\"scale\": value)");
  const double phi_p = fn.is_power() ? fn.power_exponent() : 1.0;
  const auto model = model_for(phi_p);

  const auto inc = require_increment_condition(model, g.space, fn, mc);
  Json diagnostics{{"scale", model.scale},
                   {"increment_max", inc.max_value},
                   {"increment_stderr", inc.stderr},
                   {"increment_pair", {inc.s, inc.t}}};

  auto& out = r.certificates;
  if (fn.is_power() && fn.power_exponent() == 2.0) out["expected_sup_bound"].add(verify_thm_1_1(g.space, g.measure, model, mc));
  if (fn.is_young())
    out["expected_oscillation_bound"].add(verify_thm_3_1(g.space, g.measure, model, fn, c.a, c.b, c.R, mc));
  if (!c.psi.empty() || fn.is_power()) {
    const auto psi = verify_psi(fn, c.psi.empty() ? PsiParams{fn, 0.0, 1.0}
                                                  : PsiParams{parse_orlicz(c.psi), c.alpha, c.beta});
    out["expected_psi_oscillation_bound"].add(verify_thm_3_2(g.space, g.measure, model, fn, psi, c.a, c.b, c.R, mc));
  }
  const std::optional<double> moment = c.p ? c.p : (fn.is_power() && phi_p > 1.0 ? std::optional(phi_p) : std::nullopt);
  if (moment) out["moment_oscillation_bound"].add(verify_remark_3_2(g.space, g.measure, model_for(*moment), *moment, mc));
  if (c.subset_frac) {
    if (!(*c.subset_frac > 0.0 && *c.subset_frac <= 1.0))
      throw Error(ErrorCode::InvalidSpec, "--subset-frac must lie in (0, 1]");
    std::vector<std::size_t> idx(g.space.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Engine rng(derive_seed(c.seed, 0x5eed));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto keep = static_cast<std::size_t>(std::ceil(*c.subset_frac * static_cast<double>(idx.size())));
    idx.resize(std::max<std::size_t>(1, keep));
    out["net_oscillation_bound"].add(verify_remark_3_1(g.space, g.measure, model, fn, c.a, c.b, c.R, idx, mc));
  }
  r.payload = Json{{"phi", orlicz_to_json(fn)}, {"R", c.R},       {"a", c.a},
                   {"b", c.b},                  {"trials", mc.trials}, {"model", diagnostics},
                   {"certificates", to_json(out)}};
  r.table = tally_table(out);
  r.summary.push_back("model scale " + num(model.scale) + ", max E phi(|dX|/d) = " + num(inc.max_value));
  summarize_tallies(r, out);
}

inline void run_constants(RunRecord& r) {
  const auto& c = r.config;
  Json j = Json::object();
  Table t{{"quantity", "value"}, {}};
  const auto ab = constants_AB(c.R);
  const double coef = 2.0 * chaining_coefficient(c.a, c.b, c.R);
  j["R"] = c.R;
  j["A"] = ab.A;
  j["B"] = ab.B;
  j["A_plus_B"] = ab.A + ab.B;
  j["a"] = c.a;
  j["b"] = c.b;
  j["oscillation_coefficient"] = coef;
  for (const char* key : {"R", "A", "B", "A_plus_B", "oscillation_coefficient"}) t.rows.push_back({key, j[key]});
  r.summary.push_back("R = " + num(c.R) + ": A = " + num(ab.A) + ", B = " + num(ab.B) + ", A + B = " + num(ab.A + ab.B));
  r.summary.push_back("oscillation coefficient 2(aA + bB) at a = " + num(c.a) + ", b = " + num(c.b) + ": " + num(coef));
  if (c.p) {
    const auto pc = power_constants(*c.p);
    const double membership = *c.p > 1.0 ? power_membership_value(*c.p, pc.a, pc.b) : pc.b;
    j["power"] = Json{{"p", pc.p},         {"q", std::isfinite(pc.q) ? Json(pc.q) : Json(nullptr)},
                      {"R", pc.R},         {"a", pc.a},
                      {"b", pc.b},         {"Kcoef", pc.Kcoef},
                      {"membership", membership}};
    for (const char* key : {"R", "a", "b", "Kcoef", "membership"}) t.rows.push_back({std::string("power_") + key, j["power"][key]});
    r.summary.push_back("p = " + num(pc.p) + ": R_p = " + num(pc.R) + ", a_p = " + num(pc.a) + ", b_p = " + num(pc.b) +
                        ", Kcoef = " + num(pc.Kcoef));
  }
  r.payload = std::move(j);
  r.table = std::move(t);
}

}  // namespace detail

inline RunRecord dispatch(RunConfig config);

namespace detail {

/// Re-executes the config embedded in a record and compares payload bytes.
inline void run_replay(RunRecord& r) {
  const auto& c = r.config;
  if (c.record_path.empty()) throw Error(ErrorCode::InvalidSpec, "replay needs a record file");
  const Json rec = read_json_file(c.record_path);
  if (!rec.contains("config") || !rec.contains("payload"))
    throw Error(ErrorCode::ParseError, c.record_path + " is not a run record");
  const auto version = get_or<std::string>(rec, "version", "");
  const bool version_match = version == kToolVersion;
  if (!version_match)
    std::cerr << "warning: " << to_string(ErrorCode::VersionMismatch) << ": record written by version " << version
              << ", replaying with " << kToolVersion << "\n";

  RunConfig inner = config_from_json(rec.at("config"));
  if (inner.subcommand == "replay") throw Error(ErrorCode::InvalidSpec, "a replay record cannot be replayed");
  const bool seed_altered = c.seed != inner.seed;
  inner.seed = c.seed;
  inner.threads = c.threads;
  const auto again = dispatch(inner);
  const bool identical = again.payload.dump() == rec.at("payload").dump();
  r.certificates = again.certificates;
  r.payload = Json{{"record", c.record_path},
                   {"record_digest", get_or<std::string>(rec, "digest", "")},
                   {"record_version", version},
                   {"version_match", version_match},
                   {"seed", c.seed},
                   {"seed_altered", seed_altered},
                   {"identical", identical},
                   {"replay", identical && !seed_altered},
                   {"payload", again.payload}};
  if (!identical && !seed_altered)
    throw Error(ErrorCode::VersionMismatch, "replay of " + c.record_path + " did not reproduce the recorded payload");
  r.summary.push_back(std::string(identical ? "identical" : "differs from") + " recorded payload" +
                      (seed_altered ? " (seed altered, not a replay)" : ""));
}

}  // namespace detail

/// Runs one subcommand. The record seed for replay is the --seed given on the
/// command line; it defaults to the recorded seed in the front end.
inline RunRecord dispatch(RunConfig config) {
  RunRecord r;
  r.config = std::move(config);
  r.digest = config_digest(r.config);
  r.started = detail::utc_now();
  const auto& sub = r.config.subcommand;
  if (sub == "profile") detail::run_profile(r);
  else if (sub == "chain") detail::run_chain(r);
  else if (sub == "lemmas") detail::run_lemmas(r);
  else if (sub == "verify-sobolev") detail::run_verify_sobolev(r);
  else if (sub == "verify-process") detail::run_verify_process(r);
  else if (sub == "constants") detail::run_constants(r);
  else if (sub == "replay") detail::run_replay(r);
  else throw Error(ErrorCode::InvalidSpec, "unknown subcommand '" + sub + "'");
  r.violations = total_violations(r.certificates);
  r.finished = detail::utc_now();
  return r;
}

/// The report document: stable key order, no timestamps.
inline Json report_json(const RunRecord& r) {
  Json j = Json::object();
  j["tool"] = "chainkit";
  j["version"] = r.version;
  j["digest"] = r.digest;
  j["config"] = config_to_json(r.config);
  j["violations"] = r.violations;
  j["payload"] = r.payload;
  return j;
}

/// The persisted record adds wall-clock timestamps to the report document.
inline Json record_json(const RunRecord& r) {
  Json j = report_json(r);
  j["timestamps"] = Json{{"started", r.started}, {"finished", r.finished}};
  return j;
}

namespace detail {

inline std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  if (v.is_number_float()) return num(v.get<double>());
  return v.dump();
}

}  // namespace detail

inline std::string render_report(const RunRecord& r, Format format) {
  std::ostringstream out;
  switch (format) {
    case Format::Json: out << report_json(r).dump(2) << "\n"; break;
    case Format::Csv: {
      const Table t = r.table.value_or(detail::tally_table(r.certificates));
      for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
      out << "\n";
      for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << detail::csv_cell(row[i]);
        out << "\n";
      }
      break;
    }
    case Format::Text:
      out << "chainkit " << r.version << " " << r.config.subcommand << " (digest " << r.digest << ")\n";
      for (const auto& line : r.summary) out << "  " << line << "\n";
      out << (r.violations ? "FAIL: " + std::to_string(r.violations) + " violations" : std::string("ok")) << "\n";
      break;
  }
  return out.str();
}

/// Writes the rendered report to `path`, or stdout when empty.
inline void write_report(const RunRecord& r, Format format, const std::string& path = {}) {
  const auto text = render_report(r, format);
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw Error(ErrorCode::IoError, "write to stdout failed");
  } else {
    detail::write_text_file(path, text);
  }
}

inline void persist_record(const RunRecord& r, const std::string& path) {
  detail::write_text_file(path, record_json(r).dump(2) + "\n");
}

/// Loads a record and re-executes it; `seed` overrides the recorded seed.
inline RunRecord persist_and_replay(const std::string& record_path, std::optional<std::uint64_t> seed = std::nullopt,
                                    unsigned threads = 1) {
  RunConfig c;
  c.subcommand = "replay";
  c.record_path = record_path;
  c.threads = threads;
  const Json rec = read_json_file(record_path);
  c.seed = seed.value_or(rec.contains("config") ? detail::get_or<std::uint64_t>(rec.at("config"), "seed", 0) : 0);
  return dispatch(c);
}

/// One line per violated certificate kind, with its worst witness.
inline void print_violations(const RunRecord& r, std::ostream& err) {
  for (const auto& [name, t] : r.certificates)
    if (t.violations && t.worst)
      err << "violation: " << name << " (" << t.violations << " of " << t.checks << "): " << to_json(*t.worst).dump()
          << "\n";
}

}  // namespace chainkit
