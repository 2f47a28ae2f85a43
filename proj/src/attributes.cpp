#include "pba/attributes.hpp"

namespace pba {

namespace {

struct AttributeInfo {
  std::string_view key;
  std::string_view label;
};

constexpr std::array<AttributeInfo, kAttributeCount> kInfo = {{
    {"name", "Name"},
    {"gender", "Gender"},
    {"ethnicity", "Ethnicity"},
    {"sexual_orientation", "Sexual Orientation"},
    {"social_class", "Social Class"},
    {"education_level", "Education"},
    {"occupation", "Occupation"},
    {"top_personal_interest", "Interest"},
}};

}  // namespace

bool is_identity(Attribute a) { return index_of(a) <= index_of(Attribute::kSexualOrientation); }

bool is_social(Attribute a) { return !is_identity(a); }

std::string_view attribute_key(Attribute a) { return kInfo[index_of(a)].key; }

std::string_view attribute_label(Attribute a) { return kInfo[index_of(a)].label; }

std::optional<Attribute> attribute_from_key(std::string_view key) {
  for (Attribute a : kAllAttributes) {
    if (kInfo[index_of(a)].key == key) return a;
  }
  return std::nullopt;
}

}  // namespace pba
