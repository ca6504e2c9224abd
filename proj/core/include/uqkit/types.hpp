#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uq {

// One sampled response from one model for one prompt.
//
// `embedding` is filled by the embed stage (or carried in the input dump);
// `correctness` is a judge score in [0, 1] and is only ever consulted on the
// first sample of a model (sample_index 0).
struct ResponseRecord {
  std::string prompt_id;
  std::string model_id;
  int sample_index = 0;
  std::string text;
  std::optional<std::vector<double>> embedding;
  std::optional<double> correctness;

  bool operator==(const ResponseRecord&) const = default;
};

// Everything known about one prompt: n samples from the reference model and
// n samples from each auxiliary model (lenient mode allows ragged counts).
// The auxiliary map is ordered by model id, which fixes sample ordering for
// similarity matrices and makes downstream sums deterministic.
struct PromptBundle {
  std::string prompt_id;
  std::string reference_model;
  std::vector<ResponseRecord> reference_samples;
  std::map<std::string, std::vector<ResponseRecord>> auxiliary_samples;
  std::string question_text;               // empty when the dump carries none
  std::vector<std::string> gold_answers;   // empty when the dump carries none
};

// Binary correctness of each model's first sample, thresholded.
// entries[i][j] is 1 iff model_ids[j] answered prompt_ids[i] correctly.
struct CorrectnessMatrix {
  std::vector<std::string> prompt_ids;
  std::vector<std::string> model_ids;
  std::vector<std::vector<int>> entries;
};

// Per-prompt uncertainty estimates. tu and eu are absent when the bundle had
// no auxiliary models; tu_lambda is present only when a weighted combination
// was requested. Whenever tu is present, tu == au + eu holds to 1e-12.
struct UncertaintyScores {
  std::string prompt_id;
  double au = 0.0;
  std::optional<double> eu;
  std::optional<double> tu;
  std::optional<double> tu_lambda;
};

}  // namespace uq
