#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pba/errors.hpp"
#include "pba/taxonomy.hpp"
#include "test_support.hpp"

using namespace pba;
using pba::test::make_record;
using pba::test::values;

namespace {

Corpus education_corpus(const std::vector<std::pair<std::string, int>>& terms) {
  std::vector<PersonaRecord> records;
  int serial = 0;
  for (const auto& [term, count] : terms) {
    for (int i = 0; i < count; ++i) {
      auto v = values("n" + std::to_string(serial++), "female");
      v[index_of(Attribute::kEducationLevel)] = term;
      records.push_back(make_record(v));
    }
  }
  return make_corpus("m", records);
}

}  // namespace

TEST_CASE("several raw terms consolidate into one category") {
  auto map = parse_taxonomy(R"({
  "education_level": {
    "Secondary School": "high school",
    "higher secondary": "High School"
  }
})");
  const auto& mapping = map.mapping(Attribute::kEducationLevel);
  CHECK(mapping.categories() == std::set<std::string>{"high school"});
  CHECK(mapping.terms.size() == 2);
  CHECK(map.lookup(Attribute::kEducationLevel, "secondary school") == "high school");
}

TEST_CASE("taxonomy errors name the offending line") {
  const std::string duplicate = "{\n  \"gender\": {\n    \"woman\": \"female\",\n    \"woman\": \"male\"\n  }\n}";
  try {
    parse_taxonomy(duplicate);
    FAIL("expected DuplicateKey");
  } catch (const TaxonomyError& e) {
    CHECK(e.kind() == TaxonomyError::Kind::kDuplicateKey);
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  try {
    parse_taxonomy("{\n  \"gender\": {\n    \"woman\": \"  \"\n  }\n}");
    FAIL("expected EmptyCategory");
  } catch (const TaxonomyError& e) {
    CHECK(e.kind() == TaxonomyError::Kind::kEmptyCategory);
    CHECK(e.line() == 3);
  }
  try {
    parse_taxonomy("{\n  \"_doc\": \"x\",\n  \"hair_colour\": {}\n}");
    FAIL("expected UnknownAttribute");
  } catch (const TaxonomyError& e) {
    CHECK(e.kind() == TaxonomyError::Kind::kUnknownAttribute);
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_taxonomy("{\"name\": {}}"), TaxonomyError);
  CHECK_THROWS_AS(parse_taxonomy("{\"gender\": {\"policy\": \"sometimes\"}}"), TaxonomyError);
  CHECK_THROWS_AS(parse_taxonomy("{\"gender\": {\"a\": \"b\",}"), TaxonomyError);
  // The same mapping listed twice is harmless.
  CHECK_NOTHROW(parse_taxonomy(R"({"gender": {"woman": "female", "Woman": "female"}})"));
}

TEST_CASE("_doc keys are ignored at any level") {
  auto map = parse_taxonomy(R"({"_doc": {"nested": ["x"]}, "gender": {"_doc": "note", "policy": "reject", "f": "female"}})");
  CHECK(map.mapping(Attribute::kGender).policy == UnmappedPolicy::kReject);
  CHECK(map.mapping(Attribute::kGender).terms.size() == 1);
}

TEST_CASE("canonicalization adds up mapped terms and buckets the rest") {
  auto map = parse_taxonomy(R"({"education_level": {"phd": "doctorate", "doctorate": "doctorate"}})");
  Corpus corpus = education_corpus({{"phd", 4}, {"doctorate", 3}, {"astro-gardener", 2}});
  auto result = canonicalize_corpus(corpus, map);
  REQUIRE(result.corpus.records.size() == corpus.records.size());
  std::map<std::string, int> counts;
  for (const auto& record : result.corpus.records) ++counts[record.category(Attribute::kEducationLevel)];
  CHECK(counts["doctorate"] == 7);
  CHECK(counts["other"] == 2);
  REQUIRE(result.unmapped.size() == 1);
  CHECK(result.unmapped[0].term == "astro-gardener");
  CHECK(result.unmapped[0].count == 2);

  std::ostringstream report;
  write_unmapped_report(report, result.unmapped);
  CHECK(report.str() == "attribute,term,count\neducation_level,astro-gardener,2\n");
}

TEST_CASE("unmapped policies") {
  Corpus corpus = education_corpus({{"phd", 1}, {"astro-gardener", 1}});
  auto pass = canonicalize_corpus(
      corpus, parse_taxonomy(R"({"education_level": {"policy": "passthrough", "phd": "doctorate"}})"));
  CHECK(pass.corpus.records[1].category(Attribute::kEducationLevel) == "astro-gardener");
  CHECK_THROWS_AS(canonicalize_corpus(
                      corpus, parse_taxonomy(R"({"education_level": {"policy": "reject", "phd": "doctorate"}})")),
                  UnmappedTerm);
  // Attributes not in the file are left alone and not reported.
  auto other = canonicalize_corpus(corpus, parse_taxonomy(R"({"gender": {"female": "female"}})"));
  CHECK(other.unmapped.empty());
  CHECK(other.corpus.records[1].category(Attribute::kEducationLevel) == "astro-gardener");
}

TEST_CASE("an identity map leaves categories equal to raw values") {
  Corpus corpus = education_corpus({{"phd", 2}, {"high school", 3}});
  auto map = parse_taxonomy(R"({"education_level": {"phd": "phd", "high school": "high school"}})");
  auto once = canonicalize_corpus(corpus, map);
  for (const auto& record : once.corpus.records) {
    CHECK(record.category(Attribute::kEducationLevel) == record.raw_value(Attribute::kEducationLevel));
  }
  auto twice = canonicalize_corpus(once.corpus, map);
  for (std::size_t i = 0; i < once.corpus.records.size(); ++i) {
    CHECK(*twice.corpus.records[i].canonical == *once.corpus.records[i].canonical);
  }
}

TEST_CASE("689 raw education terms reduce to five categories") {
  const std::vector<std::string> targets = {"associate degree", "bachelor's degree", "doctorate", "high school",
                                            "master's degree"};
  TaxonomyMap map;
  std::vector<std::pair<std::string, int>> terms;
  for (int i = 0; i < 689; ++i) {
    const std::string term = "education variant " + std::to_string(i);
    map.add(Attribute::kEducationLevel, term, targets[static_cast<std::size_t>(i) % 5]);
    terms.emplace_back(term, 1);
  }
  Corpus corpus = education_corpus(terms);
  CHECK(corpus.stats.cardinality.at(Attribute::kEducationLevel) == 689);
  auto result = canonicalize_corpus(corpus, map);
  std::set<std::string> seen;
  for (const auto& record : result.corpus.records) seen.insert(record.category(Attribute::kEducationLevel));
  CHECK(seen.size() == 5);
  CHECK(result.unmapped.empty());
}

TEST_CASE("the shipped taxonomy meets the cardinality targets") {
  auto map = load_taxonomy(PBA_DEFAULT_TAXONOMY);
  auto targets = default_cardinality_targets();
  CHECK(targets.at(Attribute::kGender) == 3);
  CHECK(targets.at(Attribute::kEthnicity) == 6);
  CHECK(targets.at(Attribute::kSexualOrientation) == 5);
  CHECK(targets.at(Attribute::kSocialClass) == 3);
  CHECK(targets.at(Attribute::kEducationLevel) == 5);
  CHECK(targets.at(Attribute::kOccupation) == 18);
  CHECK(targets.at(Attribute::kTopPersonalInterest) == 15);
  auto report = validate_taxonomy(map, targets);
  CHECK(report.checks.size() == 7);
  CHECK(report.mismatches() == 0);
  CHECK(map.lookup(Attribute::kEducationLevel, "secondary school") == "high school");
  CHECK(map.lookup(Attribute::kEducationLevel, "higher secondary") == "high school");
  CHECK(map.lookup(Attribute::kOccupation, "nurse") == "healthcare");
  CHECK(map.lookup(Attribute::kOccupation, "doctor") == "healthcare");
}

TEST_CASE("validation reports mismatches without failing") {
  TaxonomyMap map;
  for (std::string g : {"female", "male", "non-binary", "agender"}) map.add(Attribute::kGender, g, g);
  auto report = validate_taxonomy(map, {{Attribute::kGender, 3}});
  REQUIRE(report.checks.size() == 1);
  CHECK(report.checks[0].actual == 4);
  CHECK(report.mismatches() == 1);
  CHECK(validate_taxonomy(map, {}).checks.empty());
}

TEST_CASE("drill-down lists the raw terms behind a category") {
  std::vector<PersonaRecord> records;
  int serial = 0;
  auto add = [&](const std::string& occupation, const std::string& gender, int count) {
    for (int i = 0; i < count; ++i) records.push_back(make_record(values("n" + std::to_string(serial++), gender, occupation)));
  };
  add("nurse", "female", 157);
  add("nurse", "male", 22);
  add("nurse", "non-binary", 4);
  add("doctor", "male", 40);
  add("doctor", "female", 35);
  add("physician", "female", 3);
  add("engineer", "male", 50);
  auto map = parse_taxonomy(R"({"occupation": {"nurse": "healthcare", "doctor": "healthcare",
                                "physician": "healthcare", "engineer": "engineering"}})");
  Corpus corpus = canonicalize_corpus(make_corpus("m", records), map).corpus;

  auto view = drill_down(corpus, Attribute::kOccupation, "healthcare");
  REQUIRE(view.terms.size() == 3);
  CHECK(view.terms[0].term == "nurse");
  CHECK(view.terms[0].count == 183);
  CHECK(view.terms[1].term == "doctor");
  CHECK(view.terms[2].count == 3);
  CHECK(view.total == 261);

  auto single = drill_down(corpus, Attribute::kOccupation, "engineering");
  REQUIRE(single.terms.size() == 1);
  CHECK(single.terms[0].count == single.total);

  CHECK_THROWS_AS(drill_down(corpus, Attribute::kOccupation, "astronaut"), UnknownCategory);

  auto shares = conditional_distribution(corpus, Attribute::kGender, {Attribute::kOccupation, "nurse", true});
  REQUIRE(shares.size() == 3);
  CHECK(shares[0].category == "female");
  auto two_places = [](double v) { return std::round(v * 100) / 100; };
  CHECK(two_places(shares[0].percent) == doctest::Approx(85.79));
  CHECK(two_places(shares[1].percent) == doctest::Approx(12.02));
  CHECK(two_places(shares[2].percent) == doctest::Approx(2.19));
}

TEST_CASE("conditional drill-down agrees with a linear scan") {
  std::mt19937_64 rng(23);
  const std::vector<std::string> occupations = {"nurse", "doctor", "surgeon", "engineer", "chef"};
  const std::vector<std::string> genders = {"female", "male", "non-binary"};
  std::vector<PersonaRecord> records;
  for (int i = 0; i < 3000; ++i) {
    records.push_back(make_record(values("n" + std::to_string(i), genders[rng() % 3], occupations[rng() % 5])));
  }
  auto map = parse_taxonomy(R"({"occupation": {"nurse": "healthcare", "doctor": "healthcare",
                                "surgeon": "healthcare", "engineer": "engineering", "chef": "hospitality & food"}})");
  Corpus corpus = canonicalize_corpus(make_corpus("m", records), map).corpus;
  for (const auto& gender : genders) {
    auto view = drill_down(corpus, Attribute::kOccupation, "healthcare", DrillCondition{Attribute::kGender, gender});
    std::map<std::string, std::size_t> expected;
    std::size_t total = 0;
    for (const auto& record : corpus.records) {
      if (record.category(Attribute::kOccupation) == "healthcare" && record.category(Attribute::kGender) == gender) {
        ++expected[record.raw_value(Attribute::kOccupation)];
        ++total;
      }
    }
    CHECK(view.total == total);
    std::size_t sum = 0;
    for (const auto& term : view.terms) {
      CHECK(term.count == expected[term.term]);
      sum += term.count;
    }
    CHECK(sum == total);
  }
}
