#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pba/corpus.hpp"
#include "pba/errors.hpp"
#include "test_support.hpp"

using namespace pba;
using pba::test::data_path;
using pba::test::make_record;
using pba::test::values;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

nlohmann::json persona(int i) {
  return {{"name", "Person " + std::to_string(i)},
          {"gender", i % 2 ? "Male" : "Female"},
          {"ethnicity", "Asian"},
          {"sexual orientation", "Heterosexual"},
          {"social class", "Middle class"},
          {"education level", "PhD"},
          {"occupation", "Nurse"},
          {"top personal interest", "Yoga"}};
}

// Reference extraction for single-array payloads: the text between the first
// '[' and the last ']'.
std::vector<AttributeValues> oracle_parse(const std::string& text) {
  const auto open = text.find('[');
  const auto close = text.rfind(']');
  auto array = nlohmann::json::parse(text.substr(open, close - open + 1));
  std::vector<AttributeValues> out;
  for (const auto& item : array) {
    AttributeValues v;
    for (Attribute a : kAllAttributes) {
      std::string key(attribute_key(a));
      std::replace(key.begin(), key.end(), '_', ' ');
      v[index_of(a)] = normalize_text(item.at(key).get<std::string>());
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("a protocol-compliant 20-object payload yields 20 records") {
  nlohmann::json array = nlohmann::json::array();
  for (int i = 0; i < 20; ++i) array.push_back(persona(i));
  auto result = parse_generation_payload({"m", "r", array.dump()});
  CHECK(result.records.size() == 20);
  CHECK(result.rejections.empty());
  CHECK(result.records[3].raw_value(Attribute::kName) == "person 3");
  CHECK(result.records[3].raw_value(Attribute::kEducationLevel) == "phd");
  CHECK(result.records[3].source.index == 3);
  CHECK(result.records[3].source.run_id == "r");
}

TEST_CASE("a fenced payload with one object missing occupation rejects that object") {
  nlohmann::json array = nlohmann::json::array();
  for (int i = 0; i < 20; ++i) array.push_back(persona(i));
  array[7].erase("occupation");
  auto result = parse_generation_payload({"m", "r", "```json\n" + array.dump(2) + "\n```"});
  CHECK(result.records.size() == 19);
  REQUIRE(result.rejections.size() == 1);
  CHECK(result.rejections[0].reason == "missing field: occupation");
  CHECK(result.rejections[0].index == 7);
}

TEST_CASE("prose around the array is ignored and matches the reference extraction") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> before = {"Sure! Here are the profiles: ", "Here you go:\n\n", ""};
  const std::vector<std::string> after = {" Hope this helps", "\n\nLet me know if you need changes.", ""};
  for (int trial = 0; trial < 50; ++trial) {
    nlohmann::json array = nlohmann::json::array();
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) array.push_back(persona(static_cast<int>(rng() % 1000)));
    const std::string text = before[rng() % 3] + array.dump(static_cast<int>(rng() % 3)) + after[rng() % 3];
    auto result = parse_generation_payload({"m", "r", text});
    auto expected = oracle_parse(text);
    REQUIRE(result.records.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(result.records[i].raw == expected[i]);
  }
}

TEST_CASE("keys match case-insensitively with spaces, underscores and hyphens interchangeable") {
  auto result = parse_generation_payload(
      {"m", "r",
       R"([{"NAME":"A","Gender":"F","ethnicity":"X","Sexual_Orientation":"S","social-class":"C",)"
       R"("Education Level":"E","occupation":"O","Top_Personal Interest":"I","age":40}])"});
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].raw_value(Attribute::kTopPersonalInterest) == "i");
}

TEST_CASE("payloads without an array of objects raise NoParsableArray") {
  CHECK_THROWS_AS(parse_generation_payload({"m", "r", "no json here"}), NoParsableArray);
  CHECK_THROWS_AS(parse_generation_payload({"m", "r", "[1, 2, 3]"}), NoParsableArray);
  CHECK_THROWS_AS(parse_generation_payload({"m", "r", "[{\"name\": \"a\""}), NoParsableArray);
}

TEST_CASE("adversarial payload suite matches the golden counts") {
  auto golden = nlohmann::json::parse(read_file(data_path("payloads/golden_counts.json")));
  REQUIRE(golden.size() >= 20);
  for (const auto& [file, expected] : golden.items()) {
    CAPTURE(file);
    const std::string text = read_file(data_path("payloads/" + file));
    if (expected["error"].get<bool>()) {
      CHECK_THROWS_AS(parse_generation_payload({"m", file, text}), NoParsableArray);
      continue;
    }
    auto result = parse_generation_payload({"m", file, text});
    CHECK(result.records.size() == expected["records"].get<std::size_t>());
    CHECK(result.rejections.size() == expected["rejections"].get<std::size_t>());
  }
}

TEST_CASE("parsing arbitrary bytes yields records or NoParsableArray") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> tokens = {"[", "]", "{", "}", ",", ":", "\"", "\\", "name", "\"gender\"", "```",
                                           "\n", " ", "null", "1", "\"x\"", "\xFF", "\x00", "true"};
  for (int trial = 0; trial < 3000; ++trial) {
    std::string text;
    const std::size_t length = rng() % 40;
    for (std::size_t i = 0; i < length; ++i) text += tokens[rng() % tokens.size()];
    try {
      auto result = parse_generation_payload({"m", "r", text});
      for (const auto& record : result.records) {
        for (const auto& value : record.raw) CHECK(!value.empty());
      }
    } catch (const NoParsableArray&) {
    }
  }
}

TEST_CASE("serialized records parse back to identical records") {
  nlohmann::json array = nlohmann::json::array();
  for (int i = 0; i < 12; ++i) array.push_back(persona(i));
  auto first = parse_generation_payload({"m", "r", array.dump()});
  auto second = parse_generation_payload({"m", "r", serialize_records(first.records)});
  REQUIRE(second.records.size() == first.records.size());
  for (std::size_t i = 0; i < first.records.size(); ++i) CHECK(second.records[i].raw == first.records[i].raw);
}

TEST_CASE("dedupe keeps first occurrences of whole eight-tuples") {
  std::vector<PersonaRecord> records(3, make_record(values("a", "female")));
  auto result = dedupe(records);
  CHECK(result.records.size() == 1);
  CHECK(result.duplicate_count == 2);

  auto both = dedupe({make_record(values("a", "female", "nurse", "hiking")),
                      make_record(values("a", "female", "nurse", "yoga"))});
  CHECK(both.records.size() == 2);
  CHECK(both.duplicate_count == 0);
}

TEST_CASE("dedupe is idempotent and order preserving") {
  std::mt19937_64 rng(3);
  std::vector<PersonaRecord> records;
  for (int i = 0; i < 500; ++i) {
    records.push_back(make_record(values("n" + std::to_string(rng() % 30), rng() % 2 ? "male" : "female")));
  }
  auto once = dedupe(records);
  auto twice = dedupe(once.records);
  CHECK(twice.duplicate_count == 0);
  CHECK(twice.records.size() == once.records.size());
  CHECK(once.records.size() + once.duplicate_count == records.size());
  // First occurrences appear in their original relative order.
  std::size_t cursor = 0;
  for (const auto& kept : once.records) {
    while (records[cursor].raw != kept.raw) ++cursor;
    ++cursor;
  }
}

TEST_CASE("a corpus with 2060 duplicates among 10000 parsed keeps 7940") {
  std::vector<PersonaRecord> records;
  for (int i = 0; i < 7940; ++i) records.push_back(make_record(values("n" + std::to_string(i), "female")));
  std::mt19937_64 rng(2060);
  for (int i = 0; i < 2060; ++i) records.push_back(records[rng() % 7940]);
  std::shuffle(records.begin() + 7940, records.end(), rng);
  Corpus corpus = make_corpus("mistral-medium", records);
  CHECK(corpus.stats.parsed_count == 10000);
  CHECK(corpus.stats.duplicate_count == 2060);
  CHECK(corpus.stats.unique_count == 7940);
  CHECK(corpus.stats.unique_count == corpus.stats.parsed_count - corpus.stats.duplicate_count);
}

TEST_CASE("corpus stats count distinct raw values after dedup") {
  CHECK(corpus_stats(Corpus{}).cardinality.empty());
  CHECK(corpus_stats(Corpus{}).unique_count == 0);

  std::vector<PersonaRecord> records;
  for (int i = 0; i < 5; ++i) records.push_back(make_record(values("n" + std::to_string(i), i < 3 ? "f" : "m")));
  Corpus corpus = make_corpus("m", records);
  CHECK(corpus.stats.cardinality.at(Attribute::kGender) == 2);
  CHECK(corpus.stats.cardinality.at(Attribute::kName) == 5);

  // Gender with five surface forms and sexual orientation with fifteen.
  const std::vector<std::string> genders = {"female", "male", "non-binary", "genderqueer", "agender"};
  std::vector<PersonaRecord> wide;
  for (int i = 0; i < 60; ++i) {
    auto v = values("n" + std::to_string(i), genders[i % 5]);
    v[index_of(Attribute::kSexualOrientation)] = "orientation " + std::to_string(i % 15);
    wide.push_back(make_record(v));
  }
  wide.push_back(wide.front());
  Corpus gpt35 = make_corpus("gpt-3.5", wide);
  CHECK(gpt35.stats.cardinality.at(Attribute::kGender) == 5);
  CHECK(gpt35.stats.cardinality.at(Attribute::kSexualOrientation) == 15);
  CHECK(gpt35.stats.duplicate_count == 1);
}

TEST_CASE("top_k_names orders by frequency then name") {
  std::vector<PersonaRecord> records;
  int serial = 0;
  for (auto [name, count] : std::vector<std::pair<std::string, int>>{{"a", 3}, {"b", 2}, {"c", 1}}) {
    for (int i = 0; i < count; ++i) records.push_back(make_record(values(name, "f", "job" + std::to_string(serial++))));
  }
  Corpus corpus = make_corpus("m", records);
  auto top = top_k_names({&corpus}, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].name == "a");
  CHECK(top[1].name == "b");

  Corpus tie = make_corpus("m", {make_record(values("b", "f", "1")), make_record(values("b", "f", "2")),
                                 make_record(values("a", "f", "3")), make_record(values("a", "f", "4"))});
  auto one = top_k_names({&tie}, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].name == "a");

  CHECK_THROWS_AS(top_k_names({&corpus}, 4), InsufficientNames);
  CHECK(top_k_names({&corpus}, 4, NameShortfall::kAllowFewer).size() == 3);
}

TEST_CASE("pooled top_k_names matches an independent recount") {
  std::mt19937_64 rng(17);
  std::vector<Corpus> corpora;
  for (int c = 0; c < 4; ++c) {
    std::vector<PersonaRecord> records;
    for (int i = 0; i < 400; ++i) {
      records.push_back(make_record(values("name" + std::to_string(rng() % 70), "f", "job" + std::to_string(i))));
    }
    corpora.push_back(make_corpus("m" + std::to_string(c), records));
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& corpus : corpora) {
    for (const auto& record : corpus.records) ++counts[record.raw_value(Attribute::kName)];
  }
  std::vector<std::pair<std::string, std::size_t>> expected(counts.begin(), counts.end());
  std::stable_sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<const Corpus*> pointers;
  for (const auto& corpus : corpora) pointers.push_back(&corpus);
  auto top = top_k_names(pointers, 50);
  REQUIRE(top.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(top[i].name == expected[i].first);
    CHECK(top[i].count == expected[i].second);
  }
}

TEST_CASE("corpus files round-trip through JSONL") {
  Corpus corpus = make_corpus("m", {make_record(values("a", "female")), make_record(values("b", "male"))});
  std::stringstream buffer;
  write_corpus(buffer, corpus);
  const std::string text = buffer.str();
  CHECK(text.rfind(R"({"name":"a","gender":"female","ethnicity":"white")", 0) == 0);
  Corpus back = read_corpus(buffer);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[1].raw == corpus.records[1].raw);
  CHECK(back.model_id == "m");

  std::stringstream broken("{\"name\": \"a\"}\n");
  CHECK_THROWS_AS(read_corpus(broken), DataError);
}
