#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "popdiag/data.hpp"
#include "popdiag/errors.hpp"
#include "popdiag/rng.hpp"
#include "test_util.hpp"

using namespace popdiag;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, 1.0, -1.5, 0.1, 1e-12, 123456.789, 2.0 / 3.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv matrix round-trip") {
  TraitMatrix m;
  m.persona_ids = {"p1", "p2", "p3"};
  m.item_ids = {"a", "b"};
  m.values.resize(3, 2);
  m.values << 1, 2, 3, 4.5, 5, 1;
  m.scale = LikertScale{1, 5, 5};
  const auto path = temp_file("popdiag_rt.csv", "");
  save_matrix_csv(m, path);
  const TraitMatrix back = load_matrix(path, MatrixFormat::Csv, m.scale);
  CHECK(back.persona_ids == m.persona_ids);
  CHECK(back.item_ids == m.item_ids);
  CHECK(back.values == m.values);
  std::remove(path.c_str());
}

TEST_CASE("csv loader rejects malformed input") {
  auto expect_data_error = [](const std::string& content) {
    const auto path = temp_file("popdiag_bad.csv", content);
    CHECK_THROWS_AS(load_matrix(path, MatrixFormat::Csv, LikertScale{1, 5, 5}), DataError);
    std::remove(path.c_str());
  };
  expect_data_error("");                                  // empty
  expect_data_error("id,a\np1,1\n");                      // bad header
  expect_data_error("persona_id,a\np1,1\np1,2\n");        // duplicate persona
  expect_data_error("persona_id,a,b\np1,1\n");            // missing field
  expect_data_error("persona_id,a\np1,\n");               // empty value
  expect_data_error("persona_id,a\np1,x\n");              // non-numeric
  expect_data_error("persona_id,a\np1,9\n");              // out of scale
  expect_data_error("persona_id,a,a\np1,1,2\n");          // duplicate item
}

TEST_CASE("csv loader reports the offending line") {
  const auto path = temp_file("popdiag_line.csv", "persona_id,a\np1,1\np2,oops\n");
  try {
    load_matrix(path, MatrixFormat::Csv, std::nullopt);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("jsonl matrix loads with sorted item ids") {
  const auto path = temp_file("popdiag_m.jsonl",
                              R"({"persona_id":"p1","responses":{"b":2,"a":1}})"
                              "\n"
                              R"({"persona_id":"p2","responses":{"a":3,"b":4}})"
                              "\n");
  const TraitMatrix m = load_matrix(path, MatrixFormat::Jsonl, std::nullopt);
  CHECK(m.item_ids == std::vector<std::string>{"a", "b"});
  CHECK(m.values(0, 0) == 1);
  CHECK(m.values(0, 1) == 2);
  CHECK(m.values(1, 0) == 3);
  std::remove(path.c_str());

  const auto extraneous = temp_file("popdiag_m2.jsonl",
                                    R"({"persona_id":"p1","responses":{"a":1}})"
                                    "\n"
                                    R"({"persona_id":"p2","responses":{"a":1,"b":2}})"
                                    "\n");
  CHECK_THROWS_AS(load_matrix(extraneous, MatrixFormat::Jsonl, std::nullopt), DataError);
  std::remove(extraneous.c_str());
}

TEST_CASE("profiles load with validation") {
  const auto path = temp_file(
      "popdiag_p.jsonl",
      R"({"persona_id":"p1","attributes":{"Country":"France","Gender":"Female"},"assigned_traits":{"Openness":"High"}})"
      "\n"
      R"({"persona_id":"p2","attributes":{"Country":"Brazil"}})"
      "\n");
  const auto profiles = load_profiles(path);
  REQUIRE(profiles.size() == 2);
  CHECK(profiles[0].persona_id == "p1");
  CHECK(*profiles[0].find_attribute("Country") == "France");
  CHECK(profiles[0].find_attribute("Missing") == nullptr);
  CHECK(profiles[0].assigned_traits.at("Openness") == "High");
  std::remove(path.c_str());

  const auto bad = temp_file("popdiag_p2.jsonl",
                             R"({"persona_id":"p1","assigned_traits":{"Openness":"Huge"}})"
                             "\n");
  CHECK_THROWS_AS(load_profiles(bad), DataError);
  std::remove(bad.c_str());
}

TEST_CASE("factor key loads and rejects shared items") {
  const FactorKey key = load_factor_key(fixture_path("bfi44_key.json"));
  CHECK(key.factors.size() == 5);
  CHECK(key.scale_min == 1);
  CHECK(key.scale_max == 5);
  CHECK(key.reverse(1) == 5);
  CHECK(key.reverse(3) == 3);
  std::size_t items = 0;
  for (const auto& [_, f] : key.factors) items += f.size();
  CHECK(items == 44);

  const auto bad = temp_file(
      "popdiag_key.json",
      R"({"scale":[1,5],"factors":{"A":[{"item":"x"}],"B":[{"item":"x"}]}})");
  CHECK_THROWS_AS(load_factor_key(bad), DataError);
  std::remove(bad.c_str());
}

TEST_CASE("keyword lexicon marks trailing-space guards") {
  const KeywordLexicon lex = load_lexicon(fixture_path("lexicon.json"));
  CHECK(lex.dimensions.size() == 5);
  const auto* gender = lex.find_dimension("Gender");
  REQUIRE(gender != nullptr);
  bool saw_guarded_he = false;
  bool saw_plain_man = false;
  for (const auto& [value, kws] : *gender) {
    for (const auto& kw : kws) {
      if (kw.text == "he" && kw.trailing_space) saw_guarded_he = true;
      if (kw.text == "man" && !kw.trailing_space) saw_plain_man = true;
    }
  }
  CHECK(saw_guarded_he);
  CHECK(saw_plain_man);
}

TEST_CASE("text corpus validity rules") {
  std::string long_text;
  for (int i = 0; i < 1200; ++i) long_text += "word ";
  const auto path = temp_file(
      "popdiag_t.jsonl",
      R"({"persona_id":"p1","sample":0,"text":"I grew up in a small town by the sea."})"
      "\n"
      R"({"persona_id":"p1","sample":1,"text":"too short"})"
      "\n"
      R"({"persona_id":"p1","sample":2,"text":"onewordthatislongenoughtopass_thelengthcheck"})"
      "\n"
      R"({"persona_id":"p2","sample":0,"text":"I'm sorry, but I cannot adopt that persona."})"
      "\n"
      R"({"persona_id":"p2","sample":1,"text":")" +
          long_text + R"("})"
                      "\n");
  const TextCorpus corpus = load_text_corpus(path);
  REQUIRE(corpus.entries.size() == 5);
  CHECK(corpus.entries[0].valid);
  CHECK_FALSE(corpus.entries[1].valid);  // < 20 chars
  CHECK_FALSE(corpus.entries[2].valid);  // < 5 words
  CHECK_FALSE(corpus.entries[3].valid);  // error marker prefix
  CHECK(corpus.entries[4].valid);
  CHECK(corpus.entries[4].raw_text.size() == 5000);  // truncated
  std::remove(path.c_str());
}

TEST_CASE("factor scoring: midpoint and double reversal") {
  const FactorKey key = load_factor_key(fixture_path("bfi44_key.json"));
  TraitMatrix m;
  for (int i = 1; i <= 44; ++i) m.item_ids.push_back("bfi" + std::to_string(i));
  m.persona_ids = {"p1", "p2"};
  m.scale = LikertScale{1, 5, 5};
  m.values = Eigen::MatrixXd::Constant(2, 44, 3.0);
  const TraitMatrix scores = score_factors(m, key);
  REQUIRE(scores.d() == 5);
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index f = 0; f < 5; ++f) CHECK(scores.values(r, f) == doctest::Approx(3.0));

  // reverse(reverse(v)) == v over random matrices
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const double v = 1.0 + 4.0 * rng.next_double();
    CHECK(key.reverse(key.reverse(v)) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("make_bundle requires id set equality") {
  TraitMatrix m;
  m.persona_ids = {"p1"};
  m.item_ids = {"a"};
  m.values = Eigen::MatrixXd::Constant(1, 1, 1.0);
  PersonaProfile p;
  p.persona_id = "p2";
  CHECK_THROWS_AS(make_bundle(m, {p}, std::nullopt), DataError);
  p.persona_id = "p1";
  CHECK_NOTHROW(make_bundle(m, {p}, std::nullopt));
}

TEST_CASE("rng streams are independent and reproducible") {
  Rng a(42, 1);
  Rng b(42, 1);
  Rng c(42, 2);
  bool diverged = false;
  for (int i = 0; i < 16; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    if (x != c.next_u64()) diverged = true;
  }
  CHECK(diverged);

  Rng d(7);
  auto idx = d.sample_without_replacement(100, 10);
  std::set<std::size_t> unique(idx.begin(), idx.end());
  CHECK(unique.size() == 10);
  for (auto i : idx) CHECK(i < 100);
}
