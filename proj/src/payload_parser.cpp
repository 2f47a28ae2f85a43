#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pba/corpus.hpp"
#include "pba/errors.hpp"

namespace pba {

namespace {

using nlohmann::json;

// Drops every line whose first non-blank characters open or close a
// markdown code fence.
std::string strip_code_fences(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::size_t next = eol == std::string_view::npos ? text.size() : eol + 1;
    std::string_view line = text.substr(pos, next - pos);
    std::size_t first = line.find_first_not_of(" \t\r");
    bool fence = first != std::string_view::npos && line.substr(first).rfind("```", 0) == 0;
    if (!fence) out.append(line);
    pos = next;
  }
  return out;
}

// Index of the ']' closing the '[' at `open`, skipping JSON string contents.
std::optional<std::size_t> matching_bracket(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

bool has_object(const json& array) {
  for (const auto& element : array) {
    if (element.is_object()) return true;
  }
  return false;
}

std::optional<json> first_object_array(std::string_view text) {
  for (std::size_t open = text.find('['); open != std::string_view::npos;
       open = text.find('[', open + 1)) {
    auto close = matching_bracket(text, open);
    if (!close) continue;
    json parsed = json::parse(text.substr(open, *close - open + 1), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array()) continue;
    if (has_object(parsed)) return parsed;
  }
  return std::nullopt;
}

std::string normalize_key(std::string_view key) {
  std::string out;
  bool pending_sep = false;
  for (unsigned char c : key) {
    if (c == ' ' || c == '_' || c == '-' || c == '\t') {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) out.push_back('_');
    pending_sep = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace

ParseResult parse_generation_payload(const RawPayload& payload, const TextOptions& text) {
  std::string cleaned = strip_code_fences(payload.text);
  std::optional<json> array = first_object_array(cleaned);
  if (!array) {
    throw NoParsableArray("no JSON array of objects in payload" +
                          (payload.run_id.empty() ? std::string() : " of run " + payload.run_id));
  }

  ParseResult result;
  std::size_t index = 0;
  for (const auto& element : *array) {
    const std::size_t position = index++;
    auto reject = [&](std::string reason) {
      result.rejections.push_back({payload.run_id, position, std::move(reason)});
    };
    if (!element.is_object()) {
      reject("not an object");
      continue;
    }

    std::array<const json*, kAttributeCount> found{};
    for (const auto& [key, value] : element.items()) {
      auto attribute = attribute_from_key(normalize_key(key));
      if (attribute && found[index_of(*attribute)] == nullptr) {
        found[index_of(*attribute)] = &value;
      }
    }

    PersonaRecord record;
    std::string problem;
    for (Attribute a : kAllAttributes) {
      const json* value = found[index_of(a)];
      std::string field(attribute_key(a));
      if (value == nullptr) {
        problem = "missing field: " + field;
        break;
      }
      std::string raw;
      if (value->is_string()) {
        raw = value->get<std::string>();
      } else if (value->is_number()) {
        raw = value->dump();
      } else {
        problem = "invalid field: " + field;
        break;
      }
      raw = normalize_text(raw, text);
      if (raw.empty()) {
        problem = "empty field: " + field;
        break;
      }
      record.raw[index_of(a)] = std::move(raw);
    }
    if (!problem.empty()) {
      reject(std::move(problem));
      continue;
    }
    record.source = {payload.model_id, payload.run_id, position};
    result.records.push_back(std::move(record));
  }
  return result;
}

std::string serialize_records(const std::vector<PersonaRecord>& records) {
  nlohmann::ordered_json array = nlohmann::ordered_json::array();
  for (const auto& record : records) {
    nlohmann::ordered_json object;
    for (Attribute a : kAllAttributes) object[std::string(attribute_key(a))] = record.raw_value(a);
    array.push_back(std::move(object));
  }
  return array.dump();
}

}  // namespace pba
