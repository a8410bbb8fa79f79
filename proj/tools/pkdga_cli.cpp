// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pkdga/pkdga.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

int exit_code(pkdga_status s) {
  switch (s) {
    case PKDGA_OK: return kExitOk;
    case PKDGA_E_USAGE:
    case PKDGA_E_UNSUPPORTED: return kExitUsage;
    case PKDGA_E_NUMERIC: return kExitNumeric;
    default: return kExitData;
  }
}

struct ConfigDeleter {
  void operator()(pkdga_config* c) const { pkdga_config_free(c); }
};
using ConfigPtr = std::unique_ptr<pkdga_config, ConfigDeleter>;

struct StringsDeleter {
  void operator()(pkdga_strings* s) const { pkdga_strings_free(s); }
};

void log_to_stderr(const char* msg, void*) { std::fprintf(stderr, "%s\n", msg); }

struct Options {
  std::string config;
  std::string out;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  bool full_enumeration = false;
  std::vector<std::string> overrides;  // key=value
  // subcommand specifics
  std::string detector_kind, detector_dga, env, policy, date, dga, eval_detector;
  std::optional<std::size_t> samples, epochs, count;
};

int fail(pkdga_status s) {
  std::fprintf(stderr, "error (%s): %s\n", pkdga_status_name(s), pkdga_last_error());
  return exit_code(s);
}

// Builds the effective config: file, then dedicated flags, then --set.
pkdga_status build_config(const Options& o, ConfigPtr& out) {
  pkdga_config* raw = nullptr;
  pkdga_status s = o.config.empty() ? pkdga_config_new(&raw) : pkdga_config_load(o.config.c_str(), &raw);
  if (s != PKDGA_OK) return s;
  out.reset(raw);
  const auto set = [&](const char* key, const std::string& value) {
    return s == PKDGA_OK ? (s = pkdga_config_set(out.get(), key, value.c_str())) : s;
  };
  if (o.threads) set("run.threads", std::to_string(*o.threads));
  if (o.seed) set("run.seed", std::to_string(*o.seed));
  if (o.full_enumeration) set("train.full_enumeration", "true");
  if (!o.detector_kind.empty()) set("detector.kind", o.detector_kind);
  if (!o.detector_dga.empty()) set("detector.dga", o.detector_dga);
  if (o.samples) {
    set("detector.samples", std::to_string(*o.samples));
    set("eval.samples", std::to_string(*o.samples));
  }
  if (o.epochs) set("train.epochs", std::to_string(*o.epochs));
  if (!o.env.empty()) set("env.detector", o.env);
  if (!o.eval_detector.empty()) set("env.detector", o.eval_detector);
  if (!o.policy.empty()) {
    set("generate.policy", o.policy);
    set("eval.policy", o.policy);
    set("bench.policy", o.policy);
  }
  if (!o.date.empty()) set("generate.date", o.date);
  if (!o.dga.empty()) set("eval.dga", o.dga);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "--set expects key=value, got '%s'\n", kv.c_str());
      return PKDGA_E_USAGE;
    }
    set(kv.substr(0, eq).c_str(), kv.substr(eq + 1));
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PKDGA lab: feedback-trained domain generation against AGD detectors"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Flat key = value config file (a manifest.txt also works)");
  app.add_option("--threads", o.threads, "Worker thread cap; default all cores");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--set", o.overrides, "Config override key=value (repeatable)");
  app.add_flag("--full-enumeration", o.full_enumeration,
               "Enumerate every action per step (dictionaries of at most 8 tokens)");

  const auto with_out = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory")->required();
    return sub;
  };
  auto* prep = with_out(app.add_subcommand("prep", "Clean corpora and baseline DGA samples"));
  prep->add_option("--samples", o.samples, "Names per baseline generator");

  auto* dtrain = with_out(app.add_subcommand("detector-train", "Train a detector on benign + one DGA"));
  dtrain->add_option("--kind", o.detector_kind, "statistics|fanci|wordgraph|lstm|bilstm");
  dtrain->add_option("--dga", o.detector_dga, "kraken|gozi|suppobox");
  dtrain->add_option("--samples", o.samples, "Names per class");

  auto* trn = with_out(app.add_subcommand("train", "Train PKDGA from registration feedback"));
  trn->add_option("--env", o.env, "Detector checkpoint gating registrations")->required();
  trn->add_option("--epochs", o.epochs, "Training epochs");

  auto* gen = app.add_subcommand("generate", "Print generated domain names to stdout");
  std::string gen_dga;
  std::size_t gen_count = 10;
  gen->add_option("--dga", gen_dga, "kraken|gozi|suppobox|pkdga")
      ->required()
      ->check(CLI::IsMember({"kraken", "gozi", "suppobox", "pkdga"}));
  gen->add_option("--count", gen_count, "Number of names");
  gen->add_option("--policy", o.policy, "PKDGA checkpoint");
  gen->add_option("--date", o.date, "Seed date YYYY-MM-DD: print that date's candidate list");

  auto* ev = with_out(app.add_subcommand("eval", "AUC of a detector against one generator"));
  ev->add_option("--detector", o.eval_detector, "Detector checkpoint")->required();
  ev->add_option("--dga", o.dga, "kraken|gozi|suppobox|pkdga");
  ev->add_option("--policy", o.policy, "PKDGA checkpoint for --dga pkdga");
  ev->add_option("--samples", o.samples, "Names per class");

  auto* mat = with_out(app.add_subcommand("matrix", "Anti-detection matrices over DGAs and detectors"));
  auto* game = with_out(app.add_subcommand("game", "Game-based defense: alternate generator and detector"));
  game->add_option("--detector", o.eval_detector, "Recurrent detector checkpoint (default: train one)");
  auto* bench = with_out(app.add_subcommand("bench", "Inference throughput per batch size"));
  bench->add_option("--policy", o.policy, "PKDGA checkpoint (default: untrained)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  ConfigPtr cfg;
  if (auto s = build_config(o, cfg); s != PKDGA_OK) return fail(s);
  pkdga_set_log_callback(log_to_stderr, nullptr);

  pkdga_status s = PKDGA_OK;
  const char* out = o.out.c_str();
  if (*prep) s = pkdga_run_prep(cfg.get(), out);
  else if (*dtrain) s = pkdga_run_detector_train(cfg.get(), out);
  else if (*trn) s = pkdga_run_train(cfg.get(), out);
  else if (*ev) s = pkdga_run_eval(cfg.get(), out);
  else if (*mat) s = pkdga_run_matrix(cfg.get(), out);
  else if (*game) s = pkdga_run_game(cfg.get(), out);
  else if (*bench) s = pkdga_run_bench(cfg.get(), out);
  else if (*gen) {
    pkdga_strings* raw = nullptr;
    s = pkdga_run_generate(cfg.get(), gen_dga.c_str(), gen_count, &raw);
    std::unique_ptr<pkdga_strings, StringsDeleter> names(raw);
    if (s == PKDGA_OK)
      for (std::size_t i = 0; i < pkdga_strings_size(names.get()); ++i)
        std::printf("%s\n", pkdga_strings_at(names.get(), i));
  }
  if (s != PKDGA_OK) return fail(s);
  if (!o.out.empty()) std::fprintf(stderr, "results written to %s\n", out);
  return kExitOk;
}
