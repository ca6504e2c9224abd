#include "uqkit/judge_prompt.hpp"

#include "uqkit/error.hpp"

namespace uq {

namespace {

const char* kPreamble =
    "I want you to act as a judge for how well a model did answering a user-defined task.\n"
    "\n"
    "You will be provided with a user-defined task that was given to the model, its golden "
    "answer(s), and the model's answer. The context of the task may not be given here. Your "
    "task is to judge how correct the model's answer is based on the golden answer(s), "
    "without seeing the context of the task, and then give a correctness score. The "
    "correctness score should be one of the below numbers: 0.0 (totally wrong), 0.1, 0.2, "
    "..., 1.0 (totally right). You should also add a brief justification regarding how the "
    "model's answer conforms to or contradicts the golden answer(s). Your response must "
    "follow the format:\n"
    "{\n"
    "  \"correctness_score\": your_score,\n"
    "  \"justification\": your_justification\n"
    "}\n"
    "\n"
    "Note that each one of the golden answers is considered correct. Thus if the model's "
    "answer matches any one of the golden answers, it should be considered correct.\n";

struct FewShot {
  const char* task;
  const char* golds;
  const char* answer;
  const char* score;
  const char* justification;
};

// Held fixed forever; the response cache is keyed on the template version.
const FewShot kExamples[] = {
    {"Sandy bought 1 million Safe Moon tokens. She has 4 siblings. She wants to keep half "
     "of them to herself and divide the remaining tokens among her siblings. After "
     "splitting it up, how many more tokens will she have than any of her siblings?",
     "<answer 1> 375000",
     "Sandy will have more tokens than any sibling by 3/8 million.",
     "1.0",
     "The model's answer of 3/8 million equals 375,000, which matches the gold answer "
     "exactly."},
    {"What is the capital city of Australia?",
     "<answer 1> Canberra",
     "The capital of Australia is Sydney.",
     "0.0",
     "The golden answer is Canberra; Sydney is a different city, so the model's answer "
     "contradicts the golden answer."},
    {"Who wrote the novel Frankenstein?",
     "<answer 1> Mary Shelley; <answer 2> Mary Wollstonecraft Shelley",
     "Frankenstein was written by Mary Wollstonecraft Shelley in 1818.",
     "1.0",
     "The model's answer matches the second golden answer; the added publication year does "
     "not contradict it."},
    {"Name the three primary colors in the RGB color model.",
     "<answer 1> red, green, and blue",
     "The primary colors are red and blue.",
     "0.6",
     "The model names two of the three colors in the golden answer and omits green, so it "
     "is only partially correct."},
    {"What are the first and last names of the scientist who proposed the theory of "
     "general relativity?",
     "<answer 1> Albert Einstein",
     "Einstein.",
     "0.8",
     "The model identifies the correct scientist but gives only the last name, while the "
     "task asks for both names."},
};

void append_example(std::string& out, int number, const FewShot& example) {
  out += "---\n\nExample " + std::to_string(number) + ":\n\n";
  out += "User-defined task --- " + std::string(example.task) + "\n\n";
  out += "Golden Answer(s) --- " + std::string(example.golds) + "\n\n";
  out += "Model's Answer --- " + std::string(example.answer) + "\n\n";
  out += "Model Output:\n{\n  \"correctness_score\": " + std::string(example.score) +
         ",\n  \"justification\": \"" + std::string(example.justification) + "\"\n}\n\n";
}

}  // namespace

std::string format_gold_answers(const std::vector<std::string>& golds) {
  if (golds.empty()) throw ConfigInvalid("judge needs at least one gold answer");
  std::string out;
  for (size_t i = 0; i < golds.size(); ++i) {
    if (i > 0) out += "; ";
    out += "<answer " + std::to_string(i + 1) + "> " + golds[i];
  }
  return out;
}

std::string build_judge_prompt(const std::string& question,
                               const std::vector<std::string>& golds,
                               const std::string& answer) {
  std::string out = kPreamble;
  out += "\n";
  int number = 1;
  for (const auto& example : kExamples) append_example(out, number++, example);
  out += "---\n\nTarget Example:\n\n";
  out += "User-defined task --- " + question + "\n\n";
  out += "Golden Answer(s) --- " + format_gold_answers(golds) + "\n\n";
  out += "Model's Answer --- " + answer + "\n\n";
  out += "Model Output:\n{\n  \"correctness_score\": ?,\n  \"justification\": ?\n}\n";
  return out;
}

}  // namespace uq
