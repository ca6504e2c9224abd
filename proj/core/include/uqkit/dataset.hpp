#pragma once

#include <string>
#include <vector>

#include "uqkit/types.hpp"

namespace uq {

// JSONL wire format for response dumps: one JSON object per line with fields
//   prompt_id (string), model_id (string), sample_index (int), text (string),
//   embedding (array of numbers, optional), correctness (number, optional).
// Unknown fields are ignored on parse. serialize_record/parse_record round-trip
// exactly: text is preserved byte for byte and embedding values survive with
// full double precision.

ResponseRecord parse_record(const std::string& line);
std::string serialize_record(const ResponseRecord& record);

std::vector<ResponseRecord> read_records(const std::string& path);
void write_records(const std::string& path, const std::vector<ResponseRecord>& records);

// Checks uniqueness of (prompt_id, model_id, sample_index), consistent
// embedding dimensions, and correctness in [0, 1]. Throws ParseError or
// EmptyDataset with offending coordinates in the message.
void validate_records(const std::vector<ResponseRecord>& records);

enum class BundleMode {
  // Every requested model must supply at least n samples per prompt.
  strict,
  // Ragged dumps are tolerated: models contribute the samples they have
  // (at least one), and prompts without reference samples are skipped.
  lenient,
};

// Groups records into per-prompt bundles for one reference model and a fixed
// auxiliary set. Samples are ordered by sample_index and truncated to n per
// model. Deterministic given the record list and n.
std::vector<PromptBundle> assemble_bundles(const std::vector<ResponseRecord>& records,
                                           const std::string& reference_model,
                                           const std::vector<std::string>& auxiliary_models,
                                           int n,
                                           BundleMode mode = BundleMode::strict);

// Thresholds each model's first sample into a 0/1 matrix (correct iff the
// judge score strictly exceeds `threshold`). Column order is the reference
// model first, then auxiliaries in bundle (lexicographic) order.
CorrectnessMatrix correctness_matrix(const std::vector<PromptBundle>& bundles,
                                     double threshold = 0.5);

}  // namespace uq
