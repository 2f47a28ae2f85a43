#include "pba/text.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace pba {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string stem_token(std::string_view token) {
  std::string t(token);
  if (t.size() <= 3) return t;
  if (!std::all_of(t.begin(), t.end(), [](unsigned char c) { return c >= 'a' && c <= 'z'; })) {
    return t;
  }
  if (ends_with(t, "sses")) return t.substr(0, t.size() - 2);
  if (ends_with(t, "ies")) return t.substr(0, t.size() - 3) + "y";
  for (std::string_view es : {"ches", "shes", "xes", "zes"}) {
    if (ends_with(t, es)) return t.substr(0, t.size() - 2);
  }
  if (ends_with(t, "ss") || ends_with(t, "us") || ends_with(t, "is")) return t;
  if (ends_with(t, "s")) return t.substr(0, t.size() - 1);
  return t;
}

std::string normalize_text(std::string_view s, const TextOptions& options) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : s) {
    if (is_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));

  std::string joined;
  for (const auto& token : tokens) {
    if (!joined.empty()) joined.push_back(' ');
    joined += token;
  }

  // Strip punctuation (and any space it exposes) from both ends.
  std::size_t begin = 0;
  std::size_t end = joined.size();
  while (begin < end && (is_punct(joined[begin]) || joined[begin] == ' ')) ++begin;
  while (end > begin && (is_punct(joined[end - 1]) || joined[end - 1] == ' ')) --end;
  std::string out = joined.substr(begin, end - begin);

  if (!options.stem || out.empty()) return out;

  std::string stemmed;
  std::size_t pos = 0;
  while (pos <= out.size()) {
    std::size_t space = out.find(' ', pos);
    if (space == std::string::npos) space = out.size();
    if (!stemmed.empty()) stemmed.push_back(' ');
    stemmed += stem_token(std::string_view(out).substr(pos, space - pos));
    pos = space + 1;
  }
  return stemmed;
}

}  // namespace pba
