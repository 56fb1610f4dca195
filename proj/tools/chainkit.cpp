#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "chainkit/app.hpp"

namespace {

struct Options {
  chainkit::RunConfig config;
  std::string format = "json";
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<double> p;
  std::optional<double> subset_frac;
};

void add_space(CLI::App* app, Options& o) {
  app->add_option("--space", o.config.space, "Space document (JSON file or inline JSON)");
  app->add_option("--measure", o.config.measure, "Weights: JSON array, file, or 'uniform'");
}

void add_orlicz(CLI::App* app, Options& o) {
  app->add_option("--orlicz", o.config.orlicz, "identity, power:P, or a JSON spec")->capture_default_str();
  app->add_option("--R", o.config.R, "Level ratio R >= 2")->capture_default_str();
}

void add_growth(CLI::App* app, Options& o) {
  app->add_option("--a", o.config.a, "Growth parameter a")->capture_default_str();
  app->add_option("--b", o.config.b, "Growth parameter b")->capture_default_str();
}

void add_psi(CLI::App* app, Options& o) {
  app->add_option("--psi", o.config.psi, "Companion function psi (defaults to phi for power phi)");
  app->add_option("--alpha", o.config.alpha, "psi parameter alpha")->capture_default_str();
  app->add_option("--beta", o.config.beta, "psi parameter beta")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainkit: majorizing measures, chaining and Sobolev-type bounds on finite metric spaces"};
  app.set_version_flag("--version", std::string("chainkit ") + chainkit::kToolVersion);
  app.require_subcommand(1);

  Options o;
  std::string record_out;
  app.add_option("--format", o.format, "Output format: json, csv or text")
      ->check(CLI::IsMember({"json", "csv", "text"}))
      ->capture_default_str();
  app.add_option("--out", o.config.out, "Write the report here instead of stdout");
  app.add_option("--record", record_out, "Also persist a replayable run record here");
  app.add_option("--threads", o.threads, "Worker threads (default: CHAINKIT_THREADS or 1)");
  app.add_option("--seed", o.seed, "Seed for every randomized step");

  auto* profile = app.add_subcommand("profile", "Majorizing profile: sigma, S, Sbar, k0 and the radii table");
  add_space(profile, o);
  add_orlicz(profile, o);

  auto* chain = app.add_subcommand("chain", "Averaging operators, chaining measure and their checks");
  add_space(chain, o);
  add_orlicz(chain, o);
  chain->add_option("--emit-nu", o.config.emit_nu, "Write the chaining measure as JSON");

  auto* lemmas = app.add_subcommand("lemmas", "Exact lemma suite on a seeded fleet or a single space");
  lemmas->add_option("--fleet", o.config.fleet, "'default' or JSON {\"count\": N, \"max_points\": M}");
  add_space(lemmas, o);

  auto* sobolev = app.add_subcommand("verify-sobolev", "Functional inequalities on random functions");
  add_space(sobolev, o);
  add_orlicz(sobolev, o);
  add_growth(sobolev, o);
  add_psi(sobolev, o);
  sobolev->add_option("--trials", o.trials, "Random functions (default 1000)");
  sobolev->add_option("--p", o.p, "Power exponent for the optimized power bound");

  auto* process = app.add_subcommand("verify-process", "Monte Carlo bounds for Gaussian processes");
  add_space(process, o);
  add_orlicz(process, o);
  add_growth(process, o);
  add_psi(process, o);
  process->add_option("--model", o.config.model, "auto, embed-euclidean, brownian-path, or a JSON model spec")
      ->capture_default_str();
  process->add_option("--trials", o.trials, "Sample paths (default 10000)");
  process->add_option("--p", o.p, "Moment order for the moment bound");
  process->add_option("--subset-frac", o.subset_frac, "Check the net bound on a random subset of this fraction");

  auto* constants = app.add_subcommand("constants", "Chaining constants A, B and the optimized power constants");
  constants->add_option("--R", o.config.R, "Level ratio R >= 2")->capture_default_str();
  add_growth(constants, o);
  constants->add_option("--p", o.p, "Power exponent p >= 1");

  auto* replay = app.add_subcommand("replay", "Re-execute a persisted run record and compare payloads");
  replay->add_option("record", o.config.record_path, "Run record file")->required();

  for (auto* sub : {profile, chain, lemmas, sobolev, process, constants, replay}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto& c = o.config;
  c.subcommand = app.get_subcommands().front()->get_name();
  c.threads = o.threads.value_or(chainkit::default_threads());
  c.trials = o.trials;
  c.p = o.p;
  c.subset_frac = o.subset_frac;

  try {
    c.format = chainkit::format_from_string(o.format);
    chainkit::RunRecord record;
    if (c.subcommand == "replay") {
      record = chainkit::persist_and_replay(c.record_path, o.seed, c.threads);
    } else {
      c.seed = o.seed.value_or(0);
      record = chainkit::dispatch(c);
    }
    record.config.out = c.out;
    chainkit::write_report(record, c.format, c.out);
    if (!record_out.empty()) chainkit::persist_record(record, record_out);
    chainkit::print_violations(record, std::cerr);
    return record.violations == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
  } catch (const chainkit::Error& e) {
    std::cerr << "error: " << chainkit::to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
