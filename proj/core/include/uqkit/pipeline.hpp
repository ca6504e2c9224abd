#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uqkit/clients.hpp"
#include "uqkit/metrics.hpp"
#include "uqkit/synth.hpp"
#include "uqkit/types.hpp"

namespace uq {

// Declarative configuration for a staged run. Loaded from JSON; every field
// has a usable default so a config file only states what differs.
struct RunConfig {
  // inputs
  std::string dataset_path;
  // Optional JSONL {"prompt_id", "question", "golds": [...]} giving the judge
  // stage its questions and gold answers.
  std::string prompts_path;

  // bundle assembly
  std::string reference_model;
  std::vector<std::string> auxiliary_models;
  int n = 2;  // samples per model
  bool lenient = false;
  // When set, an "au_baseline" score variant is computed from this many
  // reference samples (the single-model protocol the ensemble is compared
  // against at matched budget).
  std::optional<int> au_baseline_samples;

  // similarity
  std::string similarity = "embedding";  // "embedding" | "external"
  std::string external_matrix_path;

  // scoring
  std::optional<double> lambda;  // emit tu_lambda when set

  // judging / evaluation
  double correctness_threshold = 0.5;
  std::vector<double> coverages = {0.9, 0.8};
  BootstrapConfig bootstrap;
  double low_au_fraction = 0.05;

  // endpoints
  EndpointConfig embedding_endpoint;
  EndpointConfig judge_endpoint;

  // run
  std::string output_dir = "uqkit-run";
  std::uint64_t seed = 0;
  int workers = 4;
  bool emit_charts = true;
};

RunConfig load_run_config(const std::string& path);
// Fixed-order JSON rendering; its hash keys the manifest.
std::string config_canonical_json(const RunConfig& config);

struct BudgetCheck {
  bool requested = false;  // an AU baseline comparison is configured
  bool matched = true;
  std::string message;
};

// Budget parity between the AU baseline (n' reference samples) and the
// ensemble (n samples from each of m auxiliary models): warn when n' != n*m.
// Advisory only; nothing blocks on it.
BudgetCheck validate_budget(const RunConfig& config);

struct StageResult {
  std::string stage;
  bool skipped = false;  // inputs unchanged, outputs reused
  std::vector<std::string> outputs;
  std::string note;
};

// Stage names, in pipeline order: ingest, embed, judge, score, evaluate,
// diagnose, report. Each stage reads the freshest upstream artifact in the
// run directory, writes its outputs there, and records an input hash in
// manifest.json; re-running with unchanged inputs is a no-op, and running a
// stage invalidates everything downstream of it.
StageResult run_stage(const RunConfig& config, const std::string& stage);

// Runs the given stages in pipeline order.
std::vector<StageResult> run_pipeline(const RunConfig& config,
                                      const std::vector<std::string>& stages);

// simulate and theory-check sit outside the staged run: they produce inputs,
// not derived artifacts.
StageResult run_simulate(const SynthConfig& config, const std::string& out_dir);

struct TheoryCheckConfig {
  int trials = 10000;
  int max_outcomes = 12;
  int mmd_trials = 1000;
  std::uint64_t seed = 0;
};

StageResult run_theory_check(const TheoryCheckConfig& config, const std::string& out_dir);

// Writes {stage, error_type, message} to error.json in the run directory (a
// machine-readable failure report) and returns the rendered JSON.
std::string write_error_report(const std::string& out_dir, const std::string& stage,
                               const std::exception& error);

}  // namespace uq
