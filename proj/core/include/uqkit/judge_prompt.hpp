#pragma once

#include <string>
#include <vector>

namespace uq {

// Bumping this invalidates cached judge verdicts; do it whenever the template
// text changes.
inline constexpr const char* kJudgePromptVersion = "judge-v1";

// Gold answers rendered the way the judge expects them:
// "<answer 1> foo; <answer 2> bar".
std::string format_gold_answers(const std::vector<std::string>& golds);

// Instantiates the fixed judge prompt: instruction block, five frozen
// few-shot examples, then the target question, golds, and answer verbatim.
// Pure string assembly; identical inputs give identical bytes.
std::string build_judge_prompt(const std::string& question,
                               const std::vector<std::string>& golds,
                               const std::string& answer);

}  // namespace uq
