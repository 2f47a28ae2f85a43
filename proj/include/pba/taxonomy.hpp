#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pba/attributes.hpp"
#include "pba/corpus.hpp"

namespace pba {

enum class UnmappedPolicy { kReject, kOtherBucket, kPassthrough };

std::string_view policy_key(UnmappedPolicy policy);

inline constexpr std::string_view kOtherCategory = "other";

struct AttributeMapping {
  std::map<std::string, std::string> terms;  // normalized raw term -> category
  UnmappedPolicy policy = UnmappedPolicy::kOtherBucket;
  // Attributes absent from a taxonomy file pass values through unchanged.
  bool declared = false;

  std::set<std::string> categories() const;
};

class TaxonomyMap {
 public:
  // Adds raw -> category after normalizing both. Throws TaxonomyError
  // (kDuplicateKey / kEmptyCategory) reporting `line`.
  void add(Attribute attribute, std::string_view raw, std::string_view category,
           std::size_t line = 0);
  void set_policy(Attribute attribute, UnmappedPolicy policy);

  const AttributeMapping& mapping(Attribute attribute) const;

  // Looks up a normalized raw value; nullopt when unmapped.
  std::optional<std::string> lookup(Attribute attribute, const std::string& raw) const;

 private:
  std::array<AttributeMapping, kAttributeCount> mappings_{};
};

TaxonomyMap parse_taxonomy(const std::string& text);
TaxonomyMap load_taxonomy(const std::string& path);

struct UnmappedEntry {
  Attribute attribute;
  std::string term;
  std::size_t count = 0;
};

struct CanonicalizeResult {
  Corpus corpus;
  std::vector<UnmappedEntry> unmapped;  // sorted by attribute, then term
};

// Fills every record's canonical values. Throws UnmappedTerm only for
// attributes whose policy is kReject.
CanonicalizeResult canonicalize_corpus(const Corpus& corpus, const TaxonomyMap& map);

void write_unmapped_report(std::ostream& out, const std::vector<UnmappedEntry>& unmapped);

struct CardinalityCheck {
  Attribute attribute;
  std::size_t target = 0;
  std::size_t actual = 0;
  bool ok() const { return target == actual; }
};

struct TaxonomyValidation {
  std::vector<CardinalityCheck> checks;
  std::size_t mismatches() const;
};

TaxonomyValidation validate_taxonomy(const TaxonomyMap& map,
                                     const std::map<Attribute, std::size_t>& targets);

// Canonical cardinalities of the consolidated categories shipped with the
// default taxonomy.
std::map<Attribute, std::size_t> default_cardinality_targets();

struct DrillCondition {
  Attribute attribute;
  std::string value;
  // Match the record's raw value instead of its canonical category.
  bool match_raw = false;
};

struct TermCount {
  std::string term;
  std::size_t count = 0;
};

struct DrillDownView {
  Attribute attribute;
  std::string category;
  std::vector<TermCount> terms;  // count desc, term asc
  std::size_t total = 0;
};

DrillDownView drill_down(const Corpus& corpus, Attribute attribute, const std::string& category,
                         const std::optional<DrillCondition>& condition = std::nullopt);

struct CategoryShare {
  std::string category;
  std::size_t count = 0;
  double percent = 0.0;
};

// Canonical distribution of `attribute` among records matching `condition`,
// e.g. the gender split of raw occupation "nurse". Sorted by category.
std::vector<CategoryShare> conditional_distribution(const Corpus& corpus, Attribute attribute,
                                                    const DrillCondition& condition);

}  // namespace pba
