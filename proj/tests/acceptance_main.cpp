// Release gate for the library's documented guarantees. Every check verifies
// one observable promise end to end, against independent reimplementations
// wherever the promise is numeric. Prints one line per check and exits
// nonzero if any of them fails; tolerances and time budgets are pinned here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "client_stub.hpp"
#include "uqkit/cache.hpp"
#include "uqkit/clients.hpp"
#include "uqkit/diagnostics.hpp"
#include "uqkit/divergence.hpp"
#include "uqkit/error.hpp"
#include "uqkit/estimators.hpp"
#include "uqkit/metrics.hpp"
#include "uqkit/pipeline.hpp"
#include "uqkit/similarity.hpp"
#include "uqkit/stats.hpp"
#include "uqkit/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kDataDir = UQKIT_TEST_DATA_DIR;

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++assertions_;
    if (!ok) {
      ++failures_;
      if (first_failure_.empty()) first_failure_ = what;
    }
  }

  void note(const std::string& text) { note_ = text; }

  int assertions() const { return assertions_; }
  int failures() const { return failures_; }
  const std::string& first_failure() const { return first_failure_; }
  const std::string& get_note() const { return note_; }

 private:
  int assertions_ = 0;
  int failures_ = 0;
  std::string first_failure_;
  std::string note_;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// budget_seconds <= 0 means untimed.
CheckResult run_check(const std::string& name, double budget_seconds,
                      const std::function<void(Check&)>& body) {
  CheckResult result;
  result.name = name;
  Check check;
  auto start = std::chrono::steady_clock::now();
  try {
    body(check);
  } catch (const std::exception& error) {
    check.expect(false, std::string("threw: ") + error.what());
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool in_budget = budget_seconds <= 0.0 || result.seconds < budget_seconds;
  result.pass = check.failures() == 0 && in_budget;
  if (!in_budget) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "took %.1fs, budget %.0fs", result.seconds,
                  budget_seconds);
    result.detail = buf;
  } else if (check.failures() > 0) {
    result.detail = std::to_string(check.failures()) + "/" +
                    std::to_string(check.assertions()) +
                    " assertions failed; first: " + check.first_failure();
  } else {
    result.detail = check.get_note();
  }
  return result;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", x);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw uq::Error("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Counts (incorrect, correct) pairs directly; the quadratic mirror of the
// rank-based computation.
double pair_count_auroc(const std::vector<uq::LabeledScore>& items) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const auto& a : items) {
    if (a.correct) continue;
    for (const auto& b : items) {
      if (!b.correct) continue;
      pairs += 1.0;
      if (a.score > b.score) {
        wins += 1.0;
      } else if (a.score == b.score) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

std::vector<uq::LabeledScore> labeled(const uq::SynthResult& data,
                                      const std::vector<uq::UncertaintyScores>& scores,
                                      double uq::UncertaintyScores::* field) {
  std::vector<uq::LabeledScore> items;
  items.reserve(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    items.push_back({data.bundles[i].prompt_id, scores[i].*field,
                     data.ground_truth[i].model_correct.at(data.reference_model)});
  }
  return items;
}

std::vector<uq::LabeledScore> labeled_optional(
    const uq::SynthResult& data, const std::vector<uq::UncertaintyScores>& scores,
    std::optional<double> uq::UncertaintyScores::* field) {
  std::vector<uq::LabeledScore> items;
  items.reserve(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    items.push_back({data.bundles[i].prompt_id, *(scores[i].*field),
                     data.ground_truth[i].model_correct.at(data.reference_model)});
  }
  return items;
}

void check_estimators_match_oracle(Check& c) {
  const double kTol = 1e-12;
  int bundles = 0;
  double worst = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    uq::SynthConfig config;
    config.n_prompts = 10;
    config.n_clusters = 2 + iter % 5;
    config.embedding_dim = config.n_clusters;
    config.n_aux_models = 1 + iter % 4;
    config.n_samples = 1 + iter % 4;
    config.model_accuracy = 0.3 + 0.1 * (iter % 5);
    config.intra_model_consistency = 0.4 + 0.15 * (iter % 4);
    config.redundancy_knob = (iter % 5) / 4.0;
    config.centroid_jitter = iter % 3 == 2 ? 0.25 : 0.0;
    config.seed = 1000 + iter;

    auto data = uq::generate(config);
    auto fast = uq::score_dataset(data.bundles, uq::SimilarityBackend::embedding());
    auto slow = uq::oracle_scores(data.bundles);
    for (size_t i = 0; i < fast.size(); ++i) {
      worst = std::max(worst, std::abs(fast[i].au - slow[i].au));
      worst = std::max(worst, std::abs(*fast[i].eu - *slow[i].eu));
      worst = std::max(worst, std::abs(*fast[i].tu - *slow[i].tu));
      ++bundles;
    }
  }
  c.expect(bundles >= 1000, "only " + std::to_string(bundles) + " bundles generated");
  c.expect(worst <= kTol, "worst gap " + sci(worst) + " exceeds " + sci(kTol));
  c.note(std::to_string(bundles) + " bundles, worst gap " + sci(worst));
}

void check_total_is_sum_of_parts(Check& c) {
  const double kTol = 1e-12;
  int bundles = 0;
  double worst = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    uq::SynthConfig config;
    config.n_prompts = 10;
    config.n_clusters = 2 + iter % 4;
    config.embedding_dim = 6;
    config.n_aux_models = 1 + iter % 4;
    config.n_samples = 1 + iter % 4;
    config.model_accuracy = 0.5;
    config.intra_model_consistency = 0.3 + 0.2 * (iter % 3);
    config.redundancy_knob = 0.5;
    config.centroid_jitter = iter % 2 == 0 ? 0.0 : 0.4;
    config.seed = 2000 + iter;

    auto data = uq::generate(config);
    auto scores = uq::score_dataset(data.bundles, uq::SimilarityBackend::embedding());
    for (const auto& s : scores) {
      worst = std::max(worst, std::abs(*s.tu - (s.au + *s.eu)));
      ++bundles;
    }
  }
  c.expect(bundles >= 1000, "only " + std::to_string(bundles) + " bundles generated");
  c.expect(worst <= kTol, "worst additivity gap " + sci(worst));
  c.note(std::to_string(bundles) + " bundles, worst gap " + sci(worst));
}

void check_planted_regimes_rank_exactly(Check& c) {
  uq::SynthConfig config;
  config.n_prompts = 400;
  config.planted_confident_failures = 200;
  config.planted_consistent_correct = 200;
  config.n_aux_models = 2;
  config.n_samples = 2;
  config.n_clusters = 4;
  config.embedding_dim = 4;
  config.seed = 33;

  auto data = uq::generate(config);
  auto scores = uq::score_dataset(data.bundles, uq::SimilarityBackend::embedding());

  double auroc_au = uq::auroc(labeled(data, scores, &uq::UncertaintyScores::au));
  double auroc_eu =
      uq::auroc(labeled_optional(data, scores, &uq::UncertaintyScores::eu));
  double auroc_tu =
      uq::auroc(labeled_optional(data, scores, &uq::UncertaintyScores::tu));

  c.expect(auroc_au == 0.5, "blind aleatoric ranking gave " + sci(auroc_au));
  c.expect(auroc_tu == 1.0, "total ranking gave " + sci(auroc_tu));
  c.expect(auroc_eu == 1.0, "epistemic ranking gave " + sci(auroc_eu));
  c.note("au 0.5, tu 1.0, eu 1.0, all exact over 400 prompts");
}

void check_redundancy_shrinks_epistemic_signal(Check& c) {
  auto eu_auroc_and_jaccard = [](double knob, bool disjoint,
                                 std::uint64_t seed) -> std::pair<double, double> {
    uq::SynthConfig config;
    config.n_prompts = disjoint ? 400 : 500;
    config.n_clusters = disjoint ? 8 : 6;
    config.embedding_dim = config.n_clusters;
    config.n_aux_models = disjoint ? 4 : 3;
    config.n_samples = 2;
    config.model_accuracy = 0.65;
    config.intra_model_consistency = 1.0;
    config.redundancy_knob = knob;
    config.disjoint_correct_sets = disjoint;
    config.seed = seed;
    auto data = uq::generate(config);
    auto scores = uq::score_dataset(data.bundles, uq::SimilarityBackend::embedding());
    double a = uq::auroc(labeled_optional(data, scores, &uq::UncertaintyScores::eu));
    return {a, uq::jaccard_redundancy(data.correctness)};
  };

  auto [auroc_shared, j_shared] = eu_auroc_and_jaccard(1.0, false, 41);
  c.expect(auroc_shared >= 0.95,
           "shared-fate EU-AUROC " + sci(auroc_shared) + " below 0.95");
  c.expect(j_shared == 1.0, "shared-fate overlap " + sci(j_shared));

  auto [auroc_disjoint, j_disjoint] = eu_auroc_and_jaccard(0.0, true, 42);
  c.expect(auroc_disjoint <= 0.6,
           "complementary EU-AUROC " + sci(auroc_disjoint) + " above 0.6");
  c.expect(j_disjoint == 0.0, "complementary overlap " + sci(j_disjoint));

  std::vector<double> aurocs;
  std::vector<double> overlaps;
  for (int k = 0; k < 10; ++k) {
    auto [a, j] = eu_auroc_and_jaccard(k / 9.0, false, 500 + k);
    aurocs.push_back(a);
    overlaps.push_back(j);
  }
  auto corr = uq::pearson(aurocs, overlaps);
  c.expect(corr.r > 0.5, "sweep correlation r " + sci(corr.r) + " not above 0.5");

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "shared-fate AUROC %.3f, complementary AUROC %.3f, sweep r %.3f",
                auroc_shared, auroc_disjoint, corr.r);
  c.note(buf);
}

void check_discrepancy_bounded_by_tv(Check& c) {
  auto report = uq::verify_lemma_bound(10000, 12, 7);
  c.expect(report.trials == 10000, "ran " + std::to_string(report.trials) + " trials");
  c.expect(report.violations == 0,
           std::to_string(report.violations) + " bound violations");
  c.expect(report.max_excess <= 1e-9, "max excess " + sci(report.max_excess));

  uq::KernelMatrix identity;
  identity.dim = 2;
  identity.values = {1.0, 0.0, 0.0, 1.0};
  uq::DiscreteDistribution p = {1.0, 0.0};
  uq::DiscreteDistribution q = {0.0, 1.0};
  double d = uq::one_sided_discrepancy(p, q, identity);
  double tv = uq::total_variation(p, q);
  c.expect(d == 1.0, "identity-kernel discrepancy " + sci(d));
  c.expect(tv == 1.0, "disjoint-mass TV " + sci(tv));

  c.note("10000 trials, 0 violations, bound tight at disjoint mass");
}

void check_mmd_splits_into_directed_parts(Check& c) {
  const double kTol = 1e-10;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::uint64_t seed = 9000 + trial;
    size_t dim = 2 + trial % 11;
    auto kernel = uq::random_psd_kernel(dim, seed);
    auto p = uq::random_distribution(dim, seed ^ 0x1111);
    auto q = uq::random_distribution(dim, seed ^ 0x2222);
    double split = uq::one_sided_discrepancy(p, q, kernel) +
                   uq::one_sided_discrepancy(q, p, kernel);
    worst = std::max(worst, std::abs(uq::mmd_squared(p, q, kernel) - split));
  }
  c.expect(worst <= kTol, "worst decomposition gap " + sci(worst));
  c.note("1000 random triples, worst gap " + sci(worst));
}

void check_ranking_metrics_match_brute_force(Check& c) {
  std::mt19937_64 rng(99);
  int exact = 0;
  for (int f = 0; f < 200; ++f) {
    size_t size = 2 + rng() % 199;
    std::vector<uq::LabeledScore> items;
    for (size_t i = 0; i < size; ++i) {
      items.push_back({"p" + std::to_string(i),
                       static_cast<double>(rng() % 7) / 6.0, (rng() & 1) != 0});
    }
    items[0].correct = true;
    items[1].correct = false;
    if (uq::auroc(items) == pair_count_auroc(items)) ++exact;
  }
  c.expect(exact == 200, std::to_string(200 - exact) + " fixtures diverged from "
                         "pair counting");

  // Every ordering of 4 correct and 3 incorrect items: sorting the correct
  // ones first must minimize the area under the risk-coverage curve.
  std::vector<bool> labels = {true, true, true, true, false, false, false};
  std::vector<int> ranks = {0, 1, 2, 3, 4, 5, 6};
  auto curve_area = [&](const std::vector<int>& assignment) {
    std::vector<uq::LabeledScore> items;
    for (size_t i = 0; i < labels.size(); ++i) {
      items.push_back(
          {"p" + std::to_string(i), static_cast<double>(assignment[i]), labels[i]});
    }
    return uq::aurc(uq::risk_coverage(items));
  };
  double oracle_area = curve_area({0, 1, 2, 3, 4, 5, 6});
  double best = oracle_area;
  int orderings = 0;
  std::sort(ranks.begin(), ranks.end());
  do {
    best = std::min(best, curve_area(ranks));
    ++orderings;
  } while (std::next_permutation(ranks.begin(), ranks.end()));
  c.expect(orderings == 5040, "enumerated " + std::to_string(orderings));
  c.expect(oracle_area == best,
           "oracle area " + sci(oracle_area) + " vs minimum " + sci(best));

  // Coverage-1 identities, bitwise.
  int identity_hits = 0;
  for (int f = 0; f < 50; ++f) {
    size_t size = 3 + rng() % 38;
    std::vector<uq::LabeledScore> items;
    for (size_t i = 0; i < size; ++i) {
      items.push_back({"p" + std::to_string(i),
                       static_cast<double>(rng() % 9) / 8.0, (rng() & 1) != 0});
    }
    items[0].correct = true;
    items[1].correct = false;
    double correct = 0.0;
    for (const auto& item : items) correct += item.correct ? 1.0 : 0.0;
    double accuracy = correct / static_cast<double>(size);
    bool full_coverage_acc = uq::selective_accuracy(items, 1.0) == accuracy;
    bool full_coverage_risk =
        uq::risk_coverage(items).back().risk == 1.0 - accuracy;
    if (full_coverage_acc && full_coverage_risk) ++identity_hits;
  }
  c.expect(identity_hits == 50,
           std::to_string(50 - identity_hits) + " coverage-1 identities failed");
  c.note("200 AUROC fixtures exact, 5040 orderings, 50 coverage identities");
}

void check_half_weighted_total_preserves_ranking(Check& c) {
  int datasets = 0;
  int equal = 0;
  for (int m : {1, 2, 4}) {
    for (int n : {2, 4}) {
      for (std::uint64_t seed : {1, 2, 3}) {
        uq::SynthConfig config;
        config.n_prompts = 200;
        config.n_clusters = 4;
        config.embedding_dim = 4;
        config.n_aux_models = m;
        config.n_samples = n;
        config.model_accuracy = 0.6;
        config.intra_model_consistency = 0.8;
        config.redundancy_knob = 0.5;
        config.seed = 8000 + seed;

        auto data = uq::generate(config);
        auto scores = uq::score_dataset(data.bundles, uq::SimilarityBackend::embedding(),
                                        uq::WeightedConfig{0.5});
        auto tu_items = labeled_optional(data, scores, &uq::UncertaintyScores::tu);
        auto half_items =
            labeled_optional(data, scores, &uq::UncertaintyScores::tu_lambda);
        ++datasets;
        if (uq::auroc(half_items) == uq::auroc(tu_items)) ++equal;
      }
    }
  }
  c.expect(equal == datasets, std::to_string(datasets - equal) + " of " +
                              std::to_string(datasets) + " datasets diverged");
  c.note(std::to_string(datasets) + " datasets, AUROC bitwise equal on all");
}

void check_redundancy_worked_examples(Check& c) {
  uq::CorrectnessMatrix matrix;
  matrix.prompt_ids = {"p1", "p2", "p3", "p4"};
  matrix.model_ids = {"model-a", "model-b"};
  matrix.entries = {{1, 0}, {1, 1}, {0, 1}, {0, 0}};

  double j = uq::jaccard_redundancy(matrix);
  double g = uq::oracle_gain(matrix);
  c.expect(j == 1.0 / 3.0, "overlap " + sci(j) + " != 1/3");
  c.expect(g == 0.25, "oracle gain " + sci(g) + " != 0.25");
  c.note("overlap 1/3 and oracle gain 0.25, both exact");
}

void check_clients_honor_endpoint_contract(Check& c) {
  using stub::StubServer;

  {  // transient failures retried, then success
    StubServer server;
    server.on_embeddings([](int call, const httplib::Request& req, httplib::Response& res) {
      if (call < 2) {
        res.status = 503;
        return;
      }
      StubServer::echo_embeddings()(call, req, res);
    });
    server.start();
    uq::EmbeddingClient client(stub::test_endpoint(server));
    auto vectors = client.embed_batch({"abc"});
    c.expect(vectors.size() == 1 && vectors[0][0] == 3.0, "retried embed went wrong");
    c.expect(server.request_count() == 3,
             "expected 3 requests, saw " + std::to_string(server.request_count()));
  }

  {  // retry budget exhaustion
    StubServer server;
    server.on_embeddings([](int, const httplib::Request&, httplib::Response& res) {
      res.status = 503;
    });
    server.start();
    auto config = stub::test_endpoint(server);
    config.max_retries = 2;
    uq::EmbeddingClient client(config);
    bool threw = false;
    try {
      client.embed_batch({"abc"});
    } catch (const uq::TransportError&) {
      threw = true;
    }
    c.expect(threw, "exhausted retries did not raise a transport error");
    c.expect(server.request_count() == 3,
             "retry budget used " + std::to_string(server.request_count()));
  }

  {  // truncated judge reply still yields its score
    StubServer server;
    server.on_chat(StubServer::fixed_chat(R"({"correctness_score": 0.7, "justifica)"));
    server.start();
    uq::JudgeClient client(stub::test_endpoint(server));
    auto verdict = client.judge("q", {"gold"}, "a");
    c.expect(verdict.score == 0.7, "recovered score " + sci(verdict.score));
  }

  {  // judge prompt on the wire matches the frozen golden file
    StubServer server;
    server.on_chat(StubServer::fixed_chat(R"({"correctness_score": 1.0})"));
    server.start();
    uq::JudgeClient client(stub::test_endpoint(server));
    client.judge("What is the capital of France?", {"Paris", "City of Paris"},
                 "I believe the capital is Paris.");
    auto body = json::parse(server.bodies().at(0));
    auto wire = body["messages"][0]["content"].get<std::string>();
    auto golden = slurp(kDataDir + "/judge_prompt_golden.txt");
    c.expect(wire == golden, "wire prompt differs from the golden file");
    c.expect(body["temperature"] == 0.0 && body["max_tokens"] == 20,
             "wire sampling parameters drifted");
  }

  {  // concurrency never exceeds the configured bound
    StubServer server;
    server.on_embeddings(StubServer::echo_embeddings());
    server.set_handler_delay(std::chrono::milliseconds(15));
    server.start();
    auto config = stub::test_endpoint(server);
    config.max_concurrent_requests = 3;
    uq::EmbeddingClient client(config);
    std::vector<std::string> texts;
    for (int i = 0; i < 12; ++i) texts.push_back("text-" + std::to_string(i));
    client.embed_batch(texts, 1);
    c.expect(server.peak_concurrency() <= 3,
             "peak concurrency " + std::to_string(server.peak_concurrency()));
  }

  {  // cache idempotence: the second pass issues zero requests
    StubServer server;
    server.on_embeddings(StubServer::echo_embeddings());
    server.on_chat(StubServer::fixed_chat(R"({"correctness_score": 0.6})"));
    server.start();
    auto dir = fresh_dir("uqkit_acceptance_cache");
    std::vector<std::string> texts = {"one", "two", "three", "four"};
    {
      auto cache = uq::ResponseCache::open((dir / "embed.jsonl").string());
      uq::EmbeddingClient(stub::test_endpoint(server), &cache).embed_batch(texts);
      auto judge_cache = uq::ResponseCache::open((dir / "judge.jsonl").string());
      uq::JudgeClient(stub::test_endpoint(server), &judge_cache).judge("q", {"g"}, "a");
    }
    int warm = server.request_count();
    {
      auto cache = uq::ResponseCache::open((dir / "embed.jsonl").string());
      uq::EmbeddingClient(stub::test_endpoint(server), &cache).embed_batch(texts);
      auto judge_cache = uq::ResponseCache::open((dir / "judge.jsonl").string());
      auto verdict =
          uq::JudgeClient(stub::test_endpoint(server), &judge_cache).judge("q", {"g"}, "a");
      c.expect(verdict.from_cache, "judge verdict not served from cache");
    }
    c.expect(server.request_count() == warm,
             "cached rerun issued " + std::to_string(server.request_count() - warm) +
                 " requests");
    fs::remove_all(dir);
  }

  c.note("retry, truncation, golden prompt, concurrency, and cache all conform");
}

// Reads the bundled run end to end with plain JSON parsing and nested loops;
// shares nothing with the library's dataset, similarity, or metrics code.
struct FixtureOracle {
  struct Sample {
    int index = 0;
    std::vector<double> embedding;
    double correctness = -1.0;
  };
  // prompt -> model -> samples sorted by index
  std::map<std::string, std::map<std::string, std::vector<Sample>>> samples;

  static FixtureOracle load(const std::string& path) {
    FixtureOracle oracle;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = json::parse(line);
      Sample sample;
      sample.index = j.at("sample_index").get<int>();
      sample.embedding = j.at("embedding").get<std::vector<double>>();
      if (j.contains("correctness") && !j["correctness"].is_null()) {
        sample.correctness = j["correctness"].get<double>();
      }
      oracle.samples[j.at("prompt_id").get<std::string>()]
                    [j.at("model_id").get<std::string>()]
          .push_back(sample);
    }
    for (auto& [prompt, models] : oracle.samples) {
      for (auto& [model, list] : models) {
        std::sort(list.begin(), list.end(),
                  [](const Sample& a, const Sample& b) { return a.index < b.index; });
      }
    }
    return oracle;
  }

  static double similarity(const std::vector<double>& u, const std::vector<double>& v) {
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
      dot += u[i] * v[i];
      uu += u[i] * u[i];
      vv += v[i] * v[i];
    }
    double cos = dot / (std::sqrt(uu) * std::sqrt(vv));
    return std::min(1.0, std::max(0.0, cos));
  }

  static double self_agreement(const std::vector<Sample>& ref, size_t n) {
    double sum = 0.0;
    for (size_t k = 0; k < n; ++k) {
      for (size_t j = 0; j < n; ++j) {
        sum += k == j ? 1.0 : similarity(ref[k].embedding, ref[j].embedding);
      }
    }
    return 1.0 - sum / (static_cast<double>(n) * static_cast<double>(n));
  }

  // au, tu, eu, and the half-weighted combination for one prompt.
  std::map<std::string, double> score(const std::string& prompt, const std::string& ref,
                                      const std::vector<std::string>& aux,
                                      size_t n) const {
    const auto& models = samples.at(prompt);
    const auto& ref_samples = models.at(ref);
    std::map<std::string, double> out;
    out["au"] = self_agreement(ref_samples, n);
    double cross_mean = 0.0;
    for (const auto& model : aux) {
      const auto& other = models.at(model);
      double sum = 0.0;
      for (size_t k = 0; k < n; ++k) {
        for (size_t j = 0; j < n; ++j) {
          sum += similarity(ref_samples[k].embedding, other[j].embedding);
        }
      }
      cross_mean += 1.0 - sum / (static_cast<double>(n) * static_cast<double>(n));
    }
    out["tu"] = cross_mean / static_cast<double>(aux.size());
    out["eu"] = out["tu"] - out["au"];
    out["tu_lambda"] = 0.5 * out["au"] + 0.5 * out["eu"];
    return out;
  }

  bool correct(const std::string& prompt, const std::string& ref) const {
    return samples.at(prompt).at(ref).front().correctness > 0.5;
  }
};

void check_pipeline_is_reproducible_and_true(Check& c) {
  auto dir = fresh_dir("uqkit_acceptance_pipeline");
  uq::RunConfig config;
  config.dataset_path = kDataDir + "/fixture20.jsonl";
  config.reference_model = "synth-ref";
  config.auxiliary_models = {"synth-aux-01", "synth-aux-02"};
  config.n = 2;
  config.au_baseline_samples = 4;
  config.lambda = 0.5;
  config.low_au_fraction = 0.25;
  config.coverages = {1.0, 0.9, 0.8};
  config.output_dir = (dir / "run").string();
  config.seed = 7;
  config.workers = 2;

  const std::vector<std::string> stages = {"ingest",   "embed",    "judge", "score",
                                           "evaluate", "diagnose", "report"};
  uq::run_pipeline(config, stages);

  auto snapshot = [&] {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(config.output_dir)) {
      if (entry.is_regular_file()) {
        files[entry.path().filename().string()] = slurp(entry.path());
      }
    }
    return files;
  };
  auto first = snapshot();
  fs::remove_all(config.output_dir);
  uq::run_pipeline(config, stages);
  auto second = snapshot();

  c.expect(first.size() == second.size() && !first.empty(),
           "artifact sets differ in size");
  int mismatched = 0;
  for (const auto& [name, bytes] : first) {
    auto it = second.find(name);
    if (it == second.end() || it->second != bytes) ++mismatched;
  }
  c.expect(mismatched == 0, std::to_string(mismatched) + " artifacts not byte-identical");

  // Independent recomputation from the raw dataset.
  const double kTol = 1e-12;
  auto oracle = FixtureOracle::load(config.dataset_path);
  std::map<std::string, std::map<std::string, double>> expected;
  std::map<std::string, bool> expected_correct;
  for (const auto& [prompt, models] : oracle.samples) {
    auto scores =
        oracle.score(prompt, config.reference_model, config.auxiliary_models, 2);
    scores["au_baseline"] =
        FixtureOracle::self_agreement(models.at(config.reference_model), 4);
    expected[prompt] = scores;
    expected_correct[prompt] = oracle.correct(prompt, config.reference_model);
  }

  auto run = fs::path(config.output_dir);
  double worst_score_gap = 0.0;
  int rows = 0;
  {
    std::ifstream in(run / "scores.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = json::parse(line);
      const auto& want = expected.at(j.at("prompt_id").get<std::string>());
      for (const char* field : {"au", "eu", "tu", "tu_lambda", "au_baseline"}) {
        worst_score_gap = std::max(
            worst_score_gap, std::abs(j.at(field).get<double>() - want.at(field)));
      }
      ++rows;
    }
  }
  c.expect(rows == 20, "scores.jsonl has " + std::to_string(rows) + " rows");
  c.expect(worst_score_gap <= kTol, "worst per-prompt gap " + sci(worst_score_gap));

  auto evaluation = json::parse(slurp(run / "evaluation.json"));
  double worst_metric_gap = 0.0;
  int reports_seen = 0;
  for (const auto& report : evaluation.at("reports")) {
    auto variant = report.at("score").get<std::string>();
    std::vector<uq::LabeledScore> items;
    double correct = 0.0;
    for (const auto& [prompt, scores] : expected) {
      items.push_back({prompt, scores.at(variant), expected_correct.at(prompt)});
      correct += expected_correct.at(prompt) ? 1.0 : 0.0;
    }
    double accuracy = correct / static_cast<double>(items.size());
    worst_metric_gap = std::max(
        worst_metric_gap, std::abs(report.at("accuracy").get<double>() - accuracy));
    worst_metric_gap =
        std::max(worst_metric_gap, std::abs(report.at("auroc").get<double>() -
                                            pair_count_auroc(items)));

    // Risk-coverage by hand: ascending score, ties by prompt id.
    std::sort(items.begin(), items.end(),
              [](const uq::LabeledScore& a, const uq::LabeledScore& b) {
                return a.score != b.score ? a.score < b.score
                                          : a.prompt_id < b.prompt_id;
              });
    double kept_correct = 0.0;
    double risk_sum = 0.0;
    std::vector<double> risks;
    for (size_t k = 0; k < items.size(); ++k) {
      if (items[k].correct) kept_correct += 1.0;
      risks.push_back(1.0 - kept_correct / static_cast<double>(k + 1));
      risk_sum += risks.back();
    }
    double aurc_by_hand = risk_sum / static_cast<double>(items.size());
    worst_metric_gap = std::max(
        worst_metric_gap, std::abs(report.at("aurc").get<double>() - aurc_by_hand));

    for (auto coverage : {1.0, 0.9, 0.8}) {
      size_t keep = static_cast<size_t>(
          std::ceil(coverage * static_cast<double>(items.size())));
      double kept = 0.0;
      for (size_t k = 0; k < keep; ++k) kept += items[k].correct ? 1.0 : 0.0;
      auto label = "c@" + std::to_string(static_cast<int>(coverage * 100.0 + 0.5));
      worst_metric_gap = std::max(
          worst_metric_gap,
          std::abs(report.at("coverage_accuracy").at(label).get<double>() -
                   kept / static_cast<double>(keep)));
    }
    ++reports_seen;
  }
  c.expect(reports_seen == 5,
           "expected 5 score variants, saw " + std::to_string(reports_seen));
  c.expect(worst_metric_gap <= kTol, "worst metric gap " + sci(worst_metric_gap));

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%zu artifacts byte-identical; worst score gap %s, metric gap %s",
                first.size(), sci(worst_score_gap).c_str(),
                sci(worst_metric_gap).c_str());
  c.note(buf);
  fs::remove_all(dir);
}

}  // namespace

int main() {
  std::vector<CheckResult> results;
  results.push_back(run_check("estimators match an independent reimplementation", 10.0,
                              check_estimators_match_oracle));
  results.push_back(run_check("total splits into aleatoric plus epistemic", 0.0,
                              check_total_is_sum_of_parts));
  results.push_back(run_check("planted regimes rank exactly as designed", 5.0,
                              check_planted_regimes_rank_exactly));
  results.push_back(run_check("redundancy shrinks the epistemic signal", 0.0,
                              check_redundancy_shrinks_epistemic_signal));
  results.push_back(run_check("kernel discrepancy never exceeds total variation", 20.0,
                              check_discrepancy_bounded_by_tv));
  results.push_back(run_check("squared MMD splits into directed discrepancies", 0.0,
                              check_mmd_splits_into_directed_parts));
  results.push_back(run_check("ranking metrics agree with brute force", 0.0,
                              check_ranking_metrics_match_brute_force));
  results.push_back(run_check("half-weighted total preserves the ranking", 0.0,
                              check_half_weighted_total_preserves_ranking));
  results.push_back(run_check("redundancy and oracle-gain worked examples", 0.0,
                              check_redundancy_worked_examples));
  results.push_back(run_check("HTTP clients honor the endpoint contract", 0.0,
                              check_clients_honor_endpoint_contract));
  results.push_back(run_check("pipeline reruns are byte-identical and match the oracle",
                              0.0, check_pipeline_is_reproducible_and_true));

  int failed = 0;
  for (const auto& result : results) {
    std::printf("[%s] %-55s (%.2fs)%s%s\n", result.pass ? "PASS" : "FAIL",
                result.name.c_str(), result.seconds,
                result.detail.empty() ? "" : " ", result.detail.c_str());
    if (!result.pass) ++failed;
  }
  std::printf("%d/%zu checks passed\n", static_cast<int>(results.size()) - failed,
              results.size());
  return failed == 0 ? 0 : 1;
}
