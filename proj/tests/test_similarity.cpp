#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "uqkit/error.hpp"
#include "uqkit/similarity.hpp"

using namespace uq;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  auto dir = std::filesystem::temp_directory_path() / "uqkit_similarity_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / name).string();
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

}  // namespace

TEST_CASE("sample key string form survives colons in model ids") {
  SampleKey key{"org:model:v2", 7};
  CHECK(key.str() == "org:model:v2:7");
  CHECK(SampleKey::parse(key.str()) == key);
  CHECK_THROWS_AS(SampleKey::parse("no-index"), ParseError);
  CHECK_THROWS_AS(SampleKey::parse("model:notanumber"), ParseError);
}

TEST_CASE("cosine basics") {
  std::vector<double> x = {1.0, 0.0};
  std::vector<double> y = {0.0, 1.0};
  std::vector<double> z = {-1.0, 0.0};
  CHECK(cosine(x, x) == doctest::Approx(1.0));
  CHECK(cosine(x, y) == doctest::Approx(0.0));
  CHECK(cosine(x, z) == doctest::Approx(-1.0));
  CHECK(clamped_cosine(x, z) == 0.0);
  CHECK(clamped_cosine(x, x) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine(x, std::vector<double>{1.0, 0.0, 0.0}), DimensionMismatch);
  CHECK_THROWS_AS(cosine(x, std::vector<double>{0.0, 0.0}), ZeroVector);
}

TEST_CASE("cosine stays within [-1, 1] despite rounding") {
  // Parallel vectors at awkward scales can compute to 1 + ulp without the
  // final clamp.
  std::vector<double> u = {1e-8, 2e-8, 3e-8};
  std::vector<double> v = {1e8, 2e8, 3e8};
  CHECK(cosine(u, v) <= 1.0);
  CHECK(cosine(u, v) == doctest::Approx(1.0));
}

TEST_CASE("external scores average directed duplicates") {
  auto path = write_temp("pairs.jsonl", R"({"key_a":"m:0","key_b":"m:1","score":0.8}
{"key_a":"m:1","key_b":"m:0","score":0.4}
{"key_a":"m:0","key_b":"m:0","score":1.0}
{"key_a":"m:1","key_b":"m:1","score":1.0}
)");
  auto scores = ExternalScores::load(path);
  auto matrix = scores.matrix_for({{"m", 0}, {"m", 1}});
  CHECK(matrix.at(0, 1) == doctest::Approx(0.6));
  CHECK(matrix.at(1, 0) == doctest::Approx(0.6));
  CHECK(matrix.symmetric());
}

TEST_CASE("external scores clamp and default the diagonal") {
  auto path = write_temp("clamp.jsonl", R"({"key_a":"m:0","key_b":"m:1","score":1.7}
)");
  auto matrix = load_external_matrix(path, {{"m", 0}, {"m", 1}});
  CHECK(matrix.at(0, 1) == 1.0);   // clamped into [0, 1]
  CHECK(matrix.at(0, 0) == 1.0);   // missing self-pair defaults to 1
  CHECK(matrix.at(1, 1) == 1.0);
}

TEST_CASE("external scores require every off-diagonal pair") {
  auto path = write_temp("partial.jsonl", R"({"key_a":"m:0","key_b":"m:1","score":0.5}
)");
  auto scores = ExternalScores::load(path);
  CHECK_THROWS_AS(scores.matrix_for({{"m", 0}, {"m", 1}, {"m", 2}}), MissingPair);
}

TEST_CASE("external file rejects malformed lines") {
  CHECK_THROWS_AS(ExternalScores::load(write_temp("bad.jsonl", "{\"key_a\":1}\n")), ParseError);
  CHECK_THROWS_AS(
      ExternalScores::load(write_temp("bad2.jsonl",
                                      R"({"key_a":"m:0","key_b":"m:1"}
)")),
      ParseError);
}

TEST_CASE("bundle matrix from embeddings has exact unit diagonal") {
  PromptBundle bundle;
  bundle.prompt_id = "p";
  bundle.reference_model = "ref";
  ResponseRecord r0, r1, a0;
  r0.prompt_id = r1.prompt_id = a0.prompt_id = "p";
  r0.model_id = r1.model_id = "ref";
  a0.model_id = "aux";
  r0.sample_index = 0;
  r1.sample_index = 1;
  a0.sample_index = 0;
  r0.embedding = std::vector<double>{0.6, 0.8};
  r1.embedding = std::vector<double>{0.6, 0.8};
  a0.embedding = std::vector<double>{1.0, 0.0};
  bundle.reference_samples = {r0, r1};
  bundle.auxiliary_samples["aux"] = {a0};

  auto matrix = build_matrix(bundle, SimilarityBackend::embedding());
  REQUIRE(matrix.size() == 3);
  CHECK(matrix.keys()[0] == SampleKey{"ref", 0});
  CHECK(matrix.keys()[2] == SampleKey{"aux", 0});
  for (size_t i = 0; i < 3; ++i) CHECK(matrix.at(i, i) == 1.0);
  CHECK(matrix.at(0, 1) == doctest::Approx(1.0));
  CHECK(matrix.at(0, 2) == doctest::Approx(0.6));
  CHECK(matrix.symmetric());
  CHECK(matrix.index_of({"aux", 0}) == 2);
  CHECK_THROWS_AS(matrix.index_of({"ghost", 0}), MatrixKeyMismatch);
}

TEST_CASE("bundle matrix names the sample that lacks an embedding") {
  PromptBundle bundle;
  bundle.prompt_id = "p";
  bundle.reference_model = "ref";
  ResponseRecord r0;
  r0.prompt_id = "p";
  r0.model_id = "ref";
  bundle.reference_samples = {r0};
  try {
    build_matrix(bundle, SimilarityBackend::embedding());
    FAIL("expected MissingEmbedding");
  } catch (const MissingEmbedding& e) {
    CHECK(std::string(e.what()).find("ref:0") != std::string::npos);
  }
}

TEST_CASE("bundle matrix via the external backend reports bundle context") {
  auto path = write_temp("bundle.jsonl", R"({"key_a":"ref:0","key_b":"ref:1","score":0.9}
)");
  PromptBundle bundle;
  bundle.prompt_id = "p42";
  bundle.reference_model = "ref";
  for (int i = 0; i < 3; ++i) {
    ResponseRecord r;
    r.prompt_id = "p42";
    r.model_id = "ref";
    r.sample_index = i;
    bundle.reference_samples.push_back(r);
  }
  try {
    build_matrix(bundle, SimilarityBackend::external_file(path));
    FAIL("expected MatrixKeyMismatch");
  } catch (const MatrixKeyMismatch& e) {
    CHECK(std::string(e.what()).find("p42") != std::string::npos);
  }
}
