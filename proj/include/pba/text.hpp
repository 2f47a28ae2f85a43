#pragma once

#include <string>
#include <string_view>

namespace pba {

struct TextOptions {
  // Light plural stripper applied per token. Off by default.
  bool stem = false;
};

// Lowercases ASCII, collapses whitespace runs, strips leading/trailing
// punctuation and optionally stems each token. Total and idempotent.
std::string normalize_text(std::string_view s, const TextOptions& options = {});

// Plural suffix stripper used when TextOptions::stem is set. Only touches
// purely alphabetic tokens longer than three characters.
std::string stem_token(std::string_view token);

}  // namespace pba
