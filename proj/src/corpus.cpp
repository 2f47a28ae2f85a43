#include "pba/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "pba/errors.hpp"

namespace pba {

namespace {

struct ValuesHash {
  std::size_t operator()(const AttributeValues& values) const {
    std::size_t h = 0;
    for (const auto& v : values) h = h * 1000003u ^ std::hash<std::string>{}(v);
    return h;
  }
};

}  // namespace

DedupeResult dedupe(std::vector<PersonaRecord> records) {
  DedupeResult result;
  std::unordered_set<AttributeValues, ValuesHash> seen;
  seen.reserve(records.size());
  result.records.reserve(records.size());
  for (auto& record : records) {
    if (seen.insert(record.raw).second) {
      result.records.push_back(std::move(record));
    } else {
      ++result.duplicate_count;
    }
  }
  return result;
}

Corpus make_corpus(std::string model_id, std::vector<PersonaRecord> parsed,
                   std::size_t rejected_count) {
  Corpus corpus;
  corpus.model_id = std::move(model_id);
  corpus.stats.parsed_count = parsed.size();
  corpus.stats.rejected_count = rejected_count;
  auto deduped = dedupe(std::move(parsed));
  corpus.records = std::move(deduped.records);
  corpus.stats.duplicate_count = deduped.duplicate_count;
  corpus.stats = corpus_stats(corpus);
  return corpus;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.rejected_count = corpus.stats.rejected_count;
  stats.duplicate_count = corpus.stats.duplicate_count;
  stats.unique_count = corpus.records.size();
  stats.parsed_count = stats.unique_count + stats.duplicate_count;
  if (corpus.records.empty()) return stats;
  for (Attribute a : kAllAttributes) {
    std::unordered_set<std::string> distinct;
    for (const auto& record : corpus.records) distinct.insert(record.raw_value(a));
    stats.cardinality[a] = distinct.size();
  }
  return stats;
}

std::vector<NameCount> top_k_names(const std::vector<const Corpus*>& corpora, std::size_t k,
                                   NameShortfall shortfall) {
  if (k == 0) throw ConfigError("top_k_names: k must be at least 1");
  if (corpora.empty()) throw ConfigError("top_k_names: no corpora given");
  std::unordered_map<std::string, std::size_t> counts;
  for (const Corpus* corpus : corpora) {
    for (const auto& record : corpus->records) ++counts[record.raw_value(Attribute::kName)];
  }
  std::vector<NameCount> ranked;
  ranked.reserve(counts.size());
  for (auto& [name, count] : counts) ranked.push_back({name, count});
  std::sort(ranked.begin(), ranked.end(), [](const NameCount& a, const NameCount& b) {
    return a.count != b.count ? a.count > b.count : a.name < b.name;
  });
  if (ranked.size() < k) {
    if (shortfall == NameShortfall::kError) throw InsufficientNames(k, ranked.size());
    return ranked;
  }
  ranked.resize(k);
  return ranked;
}

void write_corpus_line(std::ostream& out, const PersonaRecord& record) {
  nlohmann::ordered_json line;
  for (Attribute a : kAllAttributes) line[std::string(attribute_key(a))] = record.raw_value(a);
  line["model_id"] = record.source.model_id;
  line["run_id"] = record.source.run_id;
  out << line.dump() << '\n';
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& record : corpus.records) write_corpus_line(out, record);
}

Corpus read_corpus(std::istream& in, std::string model_id) {
  std::vector<PersonaRecord> parsed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto object = nlohmann::json::parse(line, nullptr, false);
    if (object.is_discarded() || !object.is_object()) {
      throw DataError("corpus line " + std::to_string(line_no) + " is not a JSON object");
    }
    PersonaRecord record;
    for (Attribute a : kAllAttributes) {
      auto it = object.find(std::string(attribute_key(a)));
      if (it == object.end() || !it->is_string()) {
        throw DataError("corpus line " + std::to_string(line_no) + " lacks string field " +
                        std::string(attribute_key(a)));
      }
      record.raw[index_of(a)] = normalize_text(it->get<std::string>());
    }
    record.source.model_id = object.value("model_id", "");
    record.source.run_id = object.value("run_id", "");
    record.source.index = line_no - 1;
    if (model_id.empty()) model_id = record.source.model_id;
    parsed.push_back(std::move(record));
  }
  return make_corpus(std::move(model_id), std::move(parsed));
}

Corpus read_corpus_file(const std::string& path, std::string model_id) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file " + path);
  return read_corpus(in, std::move(model_id));
}

void write_rejection_line(std::ostream& out, const Rejection& rejection) {
  nlohmann::ordered_json line;
  line["run_id"] = rejection.run_id;
  line["index"] = rejection.index;
  line["reason"] = rejection.reason;
  out << line.dump() << '\n';
}

}  // namespace pba
