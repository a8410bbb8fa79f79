#pragma once

// End-to-end workflows behind the CLI subcommands. Each writes its result
// files under out_dir, preceded by manifest.txt.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "config.hpp"
#include "detectors.hpp"
#include "eval.hpp"
#include "trainer.hpp"

namespace pkdga {

using LogFn = std::function<void(const std::string&)>;

// Default data directory: $PKDGA_DATA_DIR, else the bundled data/ directory.
std::filesystem::path default_data_dir();

struct ResolvedInputs {
  std::filesystem::path benign;
  std::filesystem::path words;
};

// Fills data.* paths in the config so the manifest pins them.
ResolvedInputs resolve_inputs(Config& cfg);

LabResources load_resources(const Config& cfg);
TrainConfig train_config(const Config& cfg);
DetectorHyper detector_hyper(const Config& cfg);

// Cleaned benign list plus one corpus per zero-knowledge generator.
void run_prep(Config cfg, const std::filesystem::path& out_dir, const LogFn& log = {});
// detector.ckpt, detector_eval.tsv, roc.csv
void run_detector_train(Config cfg, const std::filesystem::path& out_dir, const LogFn& log = {});
// policy.ckpt, reward_curve.tsv, samples.txt
void run_train(Config cfg, const std::filesystem::path& out_dir, const LogFn& log = {});
// Names from one generator; pkdga needs generate.policy.
std::vector<std::string> run_generate(Config cfg, const std::string& dga, std::size_t count);
// eval.tsv, roc.csv
void run_eval(Config cfg, const std::filesystem::path& out_dir, const LogFn& log = {});
// matrix.tsv (training x testing per detector), table.tsv, cells.tsv
void run_matrix_workflow(Config cfg, const std::filesystem::path& out_dir, const LogFn& log = {});
// game.tsv, detector.ckpt, policy.ckpt
void run_game(Config cfg, const std::filesystem::path& out_dir, const LogFn& log = {});
// bench.tsv
void run_bench(Config cfg, const std::filesystem::path& out_dir, const LogFn& log = {});

}  // namespace pkdga
