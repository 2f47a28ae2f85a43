#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pba/corpus.hpp"

namespace pba::test {

inline std::string data_path(const std::string& relative) { return std::string(PBA_TEST_DATA) + "/" + relative; }

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pba-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline PersonaRecord make_record(const AttributeValues& values, std::string model = "m") {
  PersonaRecord record;
  record.raw = values;
  record.source.model_id = std::move(model);
  return record;
}

inline AttributeValues values(std::string name, std::string gender, std::string occupation = "engineer",
                              std::string interest = "hiking") {
  return {std::move(name), std::move(gender), "white", "heterosexual", "middle", "bachelor's degree",
          std::move(occupation), std::move(interest)};
}

// Records with the given identity and social value at column positions.
inline Corpus corpus_from_pairs(Attribute identity, Attribute social,
                                const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<PersonaRecord> records;
  std::size_t i = 0;
  for (const auto& [id, so] : pairs) {
    AttributeValues v{"n" + std::to_string(i), "female", "white", "heterosexual", "middle", "doctorate",
                      "legal", "x" + std::to_string(i)};
    v[index_of(identity)] = id;
    v[index_of(social)] = so;
    records.push_back(make_record(v));
    ++i;
  }
  return make_corpus("m", std::move(records));
}

}  // namespace pba::test
