#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pba/attributes.hpp"
#include "pba/text.hpp"

namespace pba {

struct RawPayload {
  std::string model_id;
  std::string run_id;
  std::string text;
};

struct RecordSource {
  std::string model_id;
  std::string run_id;
  std::size_t index = 0;
};

struct PersonaRecord {
  // Normalized raw strings, indexed by Attribute.
  AttributeValues raw;
  // Filled by canonicalize_corpus.
  std::optional<AttributeValues> canonical;
  RecordSource source;

  const std::string& raw_value(Attribute a) const { return raw[index_of(a)]; }
  // Canonical category when canonicalized, otherwise the raw value.
  const std::string& category(Attribute a) const {
    return canonical ? (*canonical)[index_of(a)] : raw[index_of(a)];
  }
};

struct Rejection {
  std::string run_id;
  std::size_t index = 0;
  std::string reason;
};

struct ParseResult {
  std::vector<PersonaRecord> records;
  std::vector<Rejection> rejections;
};

struct CorpusStats {
  std::size_t parsed_count = 0;
  std::size_t rejected_count = 0;
  std::size_t duplicate_count = 0;
  std::size_t unique_count = 0;
  std::map<Attribute, std::size_t> cardinality;
};

struct Corpus {
  std::string model_id;
  std::vector<PersonaRecord> records;
  CorpusStats stats;
};

// Extracts the first well-formed JSON array of objects from a model response
// and turns each complete object into a record. Throws NoParsableArray.
ParseResult parse_generation_payload(const RawPayload& payload, const TextOptions& text = {});

// Inverse of parse_generation_payload for a record list: a JSON array of
// objects with the eight snake_case keys.
std::string serialize_records(const std::vector<PersonaRecord>& records);

struct DedupeResult {
  std::vector<PersonaRecord> records;
  std::size_t duplicate_count = 0;
};

// Keeps the first occurrence of every eight-tuple of raw fields.
DedupeResult dedupe(std::vector<PersonaRecord> records);

// Dedupes `parsed` and fills the stats counters.
Corpus make_corpus(std::string model_id, std::vector<PersonaRecord> parsed,
                   std::size_t rejected_count = 0);

CorpusStats corpus_stats(const Corpus& corpus);

enum class NameShortfall { kError, kAllowFewer };

struct NameCount {
  std::string name;
  std::size_t count = 0;
};

// Most frequent names pooled over all corpora; ties broken lexicographically.
std::vector<NameCount> top_k_names(const std::vector<const Corpus*>& corpora, std::size_t k = 50,
                                   NameShortfall shortfall = NameShortfall::kError);

// Newline-delimited corpus files. Reading dedupes; `model_id` falls back to
// the per-line "model_id" of the first record when empty.
void write_corpus_line(std::ostream& out, const PersonaRecord& record);
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in, std::string model_id = {});
Corpus read_corpus_file(const std::string& path, std::string model_id = {});
void write_rejection_line(std::ostream& out, const Rejection& rejection);

}  // namespace pba
