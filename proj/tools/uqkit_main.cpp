// Command-line front end for the staged uncertainty pipeline.
//
// Stage subcommands (ingest, embed, judge, score, evaluate, diagnose, report)
// share a config file plus flag overrides; simulate and theory-check generate
// inputs and verification reports. Failures land in <output-dir>/error.json
// with a nonzero exit.

#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uqkit/pipeline.hpp"

namespace {

struct Overrides {
  std::optional<std::string> dataset;
  std::optional<std::string> prompts;
  std::optional<std::string> reference;
  std::vector<std::string> auxiliary;
  std::optional<int> n;
  bool lenient = false;
  std::optional<int> baseline_samples;
  std::optional<std::string> similarity;
  std::optional<std::string> external_matrix;
  std::optional<double> lambda;
  std::optional<double> threshold;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool no_charts = false;
};

void add_common_flags(CLI::App* cmd, std::string& config_path, Overrides& over) {
  cmd->add_option("-c,--config", config_path, "Run configuration JSON");
  cmd->add_option("--dataset", over.dataset, "Response records JSONL (overrides config)");
  cmd->add_option("--prompts", over.prompts, "Prompt sidecar JSONL with questions and golds");
  cmd->add_option("--reference", over.reference, "Reference model id");
  cmd->add_option("--aux", over.auxiliary, "Auxiliary model id (repeatable)");
  cmd->add_option("--n", over.n, "Samples per model");
  cmd->add_flag("--lenient", over.lenient, "Tolerate ragged sample counts");
  cmd->add_option("--baseline-samples", over.baseline_samples,
                  "Also score a single-model AU baseline over this many reference samples");
  cmd->add_option("--similarity", over.similarity, "Similarity backend: embedding | external");
  cmd->add_option("--external-matrix", over.external_matrix,
                  "Pairwise score JSONL for the external backend");
  cmd->add_option("--lambda", over.lambda, "Weight for the blended uncertainty score");
  cmd->add_option("--threshold", over.threshold, "Correctness threshold (score must exceed it)");
  cmd->add_option("-o,--output-dir", over.output_dir, "Run directory");
  cmd->add_option("--seed", over.seed, "Base RNG seed");
  cmd->add_option("--workers", over.workers, "Worker threads within a stage");
  cmd->add_flag("--no-charts", over.no_charts, "Skip SVG chart output");
}

uq::RunConfig resolve_config(const std::string& config_path, const Overrides& over) {
  uq::RunConfig config;
  if (!config_path.empty()) config = uq::load_run_config(config_path);
  if (over.dataset) config.dataset_path = *over.dataset;
  if (over.prompts) config.prompts_path = *over.prompts;
  if (over.reference) config.reference_model = *over.reference;
  if (!over.auxiliary.empty()) config.auxiliary_models = over.auxiliary;
  if (over.n) config.n = *over.n;
  if (over.lenient) config.lenient = true;
  if (over.baseline_samples) config.au_baseline_samples = *over.baseline_samples;
  if (over.similarity) config.similarity = *over.similarity;
  if (over.external_matrix) config.external_matrix_path = *over.external_matrix;
  if (over.lambda) config.lambda = *over.lambda;
  if (over.threshold) config.correctness_threshold = *over.threshold;
  if (over.output_dir) config.output_dir = *over.output_dir;
  if (over.seed) config.seed = *over.seed;
  if (over.workers) config.workers = *over.workers;
  if (over.no_charts) config.emit_charts = false;
  return config;
}

void print_result(const uq::StageResult& result) {
  if (result.skipped) {
    std::printf("%s: up to date\n", result.stage.c_str());
    return;
  }
  std::string outputs;
  for (const auto& name : result.outputs) {
    if (!outputs.empty()) outputs += ", ";
    outputs += name;
  }
  if (result.note.empty()) {
    std::printf("%s: wrote %s\n", result.stage.c_str(), outputs.c_str());
  } else {
    std::printf("%s: wrote %s (%s)\n", result.stage.c_str(), outputs.c_str(),
                result.note.c_str());
  }
}

int run_stage_command(const std::string& stage, const std::string& config_path,
                      const Overrides& over) {
  uq::RunConfig config;
  try {
    config = resolve_config(config_path, over);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  auto budget = uq::validate_budget(config);
  if (budget.requested && !budget.matched) {
    std::fprintf(stderr, "warning: %s\n", budget.message.c_str());
  }
  try {
    print_result(uq::run_stage(config, stage));
  } catch (const std::exception& e) {
    uq::write_error_report(config.output_dir, stage, e);
    std::fprintf(stderr, "error [%s]: %s\n", stage.c_str(), e.what());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box uncertainty estimation from sampled model responses"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides over;
  const std::vector<std::string> stages = {"ingest", "embed",    "judge", "score",
                                           "evaluate", "diagnose", "report"};
  const std::map<std::string, std::string> stage_help = {
      {"ingest", "Validate the dataset and copy it into the run directory"},
      {"embed", "Fetch embeddings for records that lack them"},
      {"judge", "Score first-sample correctness with the LLM judge"},
      {"score", "Compute per-prompt uncertainty from bundles"},
      {"evaluate", "Ranking and selective-prediction metrics per score variant"},
      {"diagnose", "Stratified, slice, and ensemble-redundancy diagnostics"},
      {"report", "Merge evaluation and diagnostics; render charts"},
  };
  for (const auto& stage : stages) {
    auto* cmd = app.add_subcommand(stage, stage_help.at(stage));
    add_common_flags(cmd, config_path, over);
    cmd->callback([&over, &config_path, stage] {
      std::exit(run_stage_command(stage, config_path, over));
    });
  }

  auto* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic dataset with closed-form ground truth");
  uq::SynthConfig synth;
  std::string synth_out = "synth-run";
  simulate->add_option("--prompts", synth.n_prompts, "Probabilistic prompts to generate");
  simulate->add_option("--clusters", synth.n_clusters, "Semantic clusters per prompt");
  simulate->add_option("--aux-models", synth.n_aux_models, "Auxiliary model count");
  simulate->add_option("--samples", synth.n_samples, "Samples per model");
  simulate->add_option("--dim", synth.embedding_dim, "Embedding dimension");
  simulate->add_option("--accuracy", synth.model_accuracy, "Per-model home-cluster accuracy");
  simulate->add_option("--consistency", synth.intra_model_consistency,
                       "Probability a sample stays in its home cluster");
  simulate->add_option("--redundancy", synth.redundancy_knob,
                       "Probability models succeed or fail together");
  simulate->add_option("--jitter", synth.centroid_jitter, "Embedding noise level");
  simulate->add_option("--confident-failures", synth.planted_confident_failures,
                       "Planted low-AU wrong-answer prompts");
  simulate->add_option("--consistent-correct", synth.planted_consistent_correct,
                       "Planted zero-uncertainty correct prompts");
  simulate->add_flag("--disjoint", synth.disjoint_correct_sets,
                     "Round-robin complementary correctness");
  simulate->add_option("--seed", synth.seed, "RNG seed");
  simulate->add_option("-o,--out", synth_out, "Output directory");
  simulate->callback([&synth, &synth_out] {
    try {
      print_result(uq::run_simulate(synth, synth_out));
    } catch (const std::exception& e) {
      uq::write_error_report(synth_out, "simulate", e);
      std::fprintf(stderr, "error [simulate]: %s\n", e.what());
      std::exit(1);
    }
    std::exit(0);
  });

  auto* theory = app.add_subcommand(
      "theory-check", "Verify the discrepancy bound and distance decomposition numerically");
  uq::TheoryCheckConfig theory_config;
  std::string theory_out = "theory-run";
  theory->add_option("--trials", theory_config.trials, "Random triples for the bound check");
  theory->add_option("--max-outcomes", theory_config.max_outcomes,
                     "Largest support size to draw");
  theory->add_option("--mmd-trials", theory_config.mmd_trials,
                     "Triples for the decomposition check");
  theory->add_option("--seed", theory_config.seed, "RNG seed");
  theory->add_option("-o,--out", theory_out, "Output directory");
  theory->callback([&theory_config, &theory_out] {
    try {
      print_result(uq::run_theory_check(theory_config, theory_out));
    } catch (const std::exception& e) {
      uq::write_error_report(theory_out, "theory-check", e);
      std::fprintf(stderr, "error [theory-check]: %s\n", e.what());
      std::exit(1);
    }
    std::exit(0);
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
