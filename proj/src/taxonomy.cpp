#include "pba/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "pba/errors.hpp"
#include "pba/text.hpp"

namespace pba {

namespace {

using Kind = TaxonomyError::Kind;

std::optional<UnmappedPolicy> policy_from_key(std::string_view key) {
  if (key == "reject") return UnmappedPolicy::kReject;
  if (key == "other-bucket" || key == "other") return UnmappedPolicy::kOtherBucket;
  if (key == "passthrough") return UnmappedPolicy::kPassthrough;
  return std::nullopt;
}

std::size_t line_at(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

// Line numbers of every object key, in document order. nlohmann's SAX
// interface reports keys in the same order but without positions.
std::vector<std::size_t> key_lines(const std::string& text) {
  std::vector<std::size_t> lines;
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '"') {
      const std::size_t start_line = line;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\') ++i;
        else if (text[i] == '\n') ++line;
      }
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r' ||
                                 text[j] == '\n')) {
        ++j;
      }
      if (j < text.size() && text[j] == ':') lines.push_back(start_line);
    }
  }
  return lines;
}

class TaxonomySax : public nlohmann::json_sax<nlohmann::json> {
 public:
  TaxonomySax(const std::string& text, TaxonomyMap& map)
      : text_(text), lines_(key_lines(text)), map_(map) {}

  bool null() override { return scalar(nullptr); }
  bool boolean(bool) override { return scalar(nullptr); }
  bool number_integer(number_integer_t) override { return scalar(nullptr); }
  bool number_unsigned(number_unsigned_t) override { return scalar(nullptr); }
  bool number_float(number_float_t, const string_t&) override { return scalar(nullptr); }
  bool string(string_t& value) override { return scalar(&value); }
  bool binary(binary_t&) override { return scalar(nullptr); }

  bool start_object(std::size_t) override { return open(true); }
  bool start_array(std::size_t) override { return open(false); }
  bool end_object() override { return close(); }
  bool end_array() override { return close(); }

  bool key(string_t& key) override {
    current_line_ = key_index_ < lines_.size() ? lines_[key_index_] : 0;
    ++key_index_;
    if (skip_ > 0) return true;
    if (depth_ == 1) {
      if (key == "_doc") {
        skip_next_ = true;
        return true;
      }
      auto attribute = attribute_from_key(key);
      if (!attribute || *attribute == Attribute::kName) {
        throw TaxonomyError(Kind::kUnknownAttribute, current_line_, "\"" + key + "\"");
      }
      attribute_ = attribute;
      attribute_line_ = current_line_;
      return true;
    }
    if (depth_ == 2) {
      if (key == "_doc") {
        skip_next_ = true;
      } else {
        pending_key_ = key;
      }
    }
    return true;
  }

  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) override {
    throw TaxonomyError(Kind::kSyntax, line_at(text_, position), ex.what());
  }

 private:
  bool open(bool object) {
    if (consume_skip()) return true;
    ++depth_;
    if (depth_ == 1 && !object) {
      throw TaxonomyError(Kind::kSyntax, 1, "taxonomy root must be an object");
    }
    if (depth_ == 2) {
      if (!object) {
        throw TaxonomyError(Kind::kSyntax, attribute_line_,
                            "attribute section must be an object");
      }
      map_.set_policy(*attribute_, UnmappedPolicy::kOtherBucket);
    }
    if (depth_ > 2) {
      throw TaxonomyError(Kind::kSyntax, current_line_,
                          "term \"" + pending_key_ + "\" must map to a string");
    }
    return true;
  }

  bool close() {
    if (skip_ > 0) {
      --skip_;
      return true;
    }
    --depth_;
    return true;
  }

  bool scalar(const std::string* value) {
    if (skip_ > 0) return true;
    if (skip_next_) {
      skip_next_ = false;
      return true;
    }
    if (depth_ != 2) {
      throw TaxonomyError(Kind::kSyntax, current_line_, "attribute section must be an object");
    }
    if (value == nullptr) {
      throw TaxonomyError(Kind::kSyntax, current_line_,
                          "term \"" + pending_key_ + "\" must map to a string");
    }
    if (pending_key_ == "policy") {
      auto policy = policy_from_key(*value);
      if (!policy) throw TaxonomyError(Kind::kBadPolicy, current_line_, "\"" + *value + "\"");
      map_.set_policy(*attribute_, *policy);
    } else {
      map_.add(*attribute_, pending_key_, *value, current_line_);
    }
    return true;
  }

  // A container following a "_doc" key is skipped wholesale.
  bool consume_skip() {
    if (skip_ > 0) {
      ++skip_;
      return true;
    }
    if (skip_next_) {
      skip_next_ = false;
      skip_ = 1;
      return true;
    }
    return false;
  }

  const std::string& text_;
  std::vector<std::size_t> lines_;
  TaxonomyMap& map_;
  std::size_t key_index_ = 0;
  std::size_t current_line_ = 0;
  std::size_t attribute_line_ = 0;
  int depth_ = 0;
  int skip_ = 0;
  bool skip_next_ = false;
  std::optional<Attribute> attribute_;
  std::string pending_key_;
};

}  // namespace

std::string_view policy_key(UnmappedPolicy policy) {
  switch (policy) {
    case UnmappedPolicy::kReject: return "reject";
    case UnmappedPolicy::kOtherBucket: return "other-bucket";
    case UnmappedPolicy::kPassthrough: return "passthrough";
  }
  return "other-bucket";
}

std::set<std::string> AttributeMapping::categories() const {
  std::set<std::string> out;
  for (const auto& [raw, category] : terms) out.insert(category);
  return out;
}

void TaxonomyMap::add(Attribute attribute, std::string_view raw, std::string_view category,
                      std::size_t line) {
  if (attribute == Attribute::kName) {
    throw TaxonomyError(Kind::kUnknownAttribute, line, "names are never taxonomy-mapped");
  }
  std::string term = normalize_text(raw);
  std::string target = normalize_text(category);
  if (target.empty()) {
    throw TaxonomyError(Kind::kEmptyCategory, line, "term \"" + std::string(raw) + "\"");
  }
  if (term.empty()) {
    throw TaxonomyError(Kind::kSyntax, line, "empty raw term");
  }
  auto& mapping = mappings_[index_of(attribute)];
  mapping.declared = true;
  auto [it, inserted] = mapping.terms.emplace(term, target);
  if (!inserted && it->second != target) {
    throw TaxonomyError(Kind::kDuplicateKey, line,
                        "\"" + term + "\" maps to both \"" + it->second + "\" and \"" + target +
                            "\" in " + std::string(attribute_key(attribute)));
  }
}

void TaxonomyMap::set_policy(Attribute attribute, UnmappedPolicy policy) {
  auto& mapping = mappings_[index_of(attribute)];
  mapping.policy = policy;
  mapping.declared = true;
}

const AttributeMapping& TaxonomyMap::mapping(Attribute attribute) const {
  return mappings_[index_of(attribute)];
}

std::optional<std::string> TaxonomyMap::lookup(Attribute attribute, const std::string& raw) const {
  const auto& terms = mappings_[index_of(attribute)].terms;
  auto it = terms.find(raw);
  if (it == terms.end()) return std::nullopt;
  return it->second;
}

TaxonomyMap parse_taxonomy(const std::string& text) {
  TaxonomyMap map;
  TaxonomySax sax(text, map);
  nlohmann::json::sax_parse(text, &sax);
  return map;
}

TaxonomyMap load_taxonomy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open taxonomy file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_taxonomy(buffer.str());
}

CanonicalizeResult canonicalize_corpus(const Corpus& corpus, const TaxonomyMap& map) {
  CanonicalizeResult result;
  result.corpus.model_id = corpus.model_id;
  result.corpus.stats = corpus.stats;
  result.corpus.records.reserve(corpus.records.size());

  std::array<std::map<std::string, std::size_t>, kAttributeCount> unmapped;
  for (const auto& source : corpus.records) {
    PersonaRecord record = source;
    AttributeValues canonical;
    for (Attribute a : kAllAttributes) {
      const std::string& raw = record.raw_value(a);
      const auto& mapping = map.mapping(a);
      if (a == Attribute::kName || !mapping.declared) {
        canonical[index_of(a)] = raw;
        continue;
      }
      if (auto category = map.lookup(a, raw)) {
        canonical[index_of(a)] = *category;
        continue;
      }
      ++unmapped[index_of(a)][raw];
      switch (mapping.policy) {
        case UnmappedPolicy::kOtherBucket: canonical[index_of(a)] = kOtherCategory; break;
        case UnmappedPolicy::kPassthrough:
        case UnmappedPolicy::kReject: canonical[index_of(a)] = raw; break;
      }
    }
    record.canonical = std::move(canonical);
    result.corpus.records.push_back(std::move(record));
  }

  for (Attribute a : kAllAttributes) {
    for (const auto& [term, count] : unmapped[index_of(a)]) {
      result.unmapped.push_back({a, term, count});
    }
  }
  for (const auto& entry : result.unmapped) {
    if (map.mapping(entry.attribute).policy == UnmappedPolicy::kReject) {
      throw UnmappedTerm("unmapped " + std::string(attribute_key(entry.attribute)) + " term \"" +
                         entry.term + "\" (" + std::to_string(entry.count) + " records)");
    }
  }
  return result;
}

void write_unmapped_report(std::ostream& out, const std::vector<UnmappedEntry>& unmapped) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out << "attribute,term,count\n";
  for (const auto& entry : unmapped) {
    out << attribute_key(entry.attribute) << ',' << quote(entry.term) << ',' << entry.count
        << '\n';
  }
}

std::size_t TaxonomyValidation::mismatches() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.ok(); }));
}

TaxonomyValidation validate_taxonomy(const TaxonomyMap& map,
                                     const std::map<Attribute, std::size_t>& targets) {
  TaxonomyValidation report;
  for (const auto& [attribute, target] : targets) {
    report.checks.push_back({attribute, target, map.mapping(attribute).categories().size()});
  }
  return report;
}

std::map<Attribute, std::size_t> default_cardinality_targets() {
  return {{Attribute::kGender, 3},         {Attribute::kEthnicity, 6},
          {Attribute::kSexualOrientation, 5}, {Attribute::kSocialClass, 3},
          {Attribute::kEducationLevel, 5}, {Attribute::kOccupation, 18},
          {Attribute::kTopPersonalInterest, 15}};
}

namespace {

bool matches(const PersonaRecord& record, const std::optional<DrillCondition>& condition) {
  if (!condition) return true;
  const std::string& value = condition->match_raw ? record.raw_value(condition->attribute)
                                                  : record.category(condition->attribute);
  return value == condition->value;
}

}  // namespace

DrillDownView drill_down(const Corpus& corpus, Attribute attribute, const std::string& category,
                         const std::optional<DrillCondition>& condition) {
  bool known = false;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& record : corpus.records) {
    if (record.category(attribute) != category) continue;
    known = true;
    if (matches(record, condition)) ++counts[record.raw_value(attribute)];
  }
  if (!known) {
    throw UnknownCategory("no " + std::string(attribute_key(attribute)) + " category \"" +
                          category + "\" in corpus " + corpus.model_id);
  }
  DrillDownView view{attribute, category, {}, 0};
  for (auto& [term, count] : counts) {
    view.terms.push_back({term, count});
    view.total += count;
  }
  std::sort(view.terms.begin(), view.terms.end(), [](const TermCount& a, const TermCount& b) {
    return a.count != b.count ? a.count > b.count : a.term < b.term;
  });
  return view;
}

std::vector<CategoryShare> conditional_distribution(const Corpus& corpus, Attribute attribute,
                                                    const DrillCondition& condition) {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& record : corpus.records) {
    if (!matches(record, condition)) continue;
    ++counts[record.category(attribute)];
    ++total;
  }
  if (total == 0) {
    throw UnknownCategory("no records with " + std::string(attribute_key(condition.attribute)) +
                          " = \"" + condition.value + "\" in corpus " + corpus.model_id);
  }
  std::vector<CategoryShare> shares;
  for (const auto& [category, count] : counts) {
    shares.push_back({category, count, 100.0 * static_cast<double>(count) / total});
  }
  return shares;
}

}  // namespace pba
