#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace pba {

// The eight persona attributes, in canonical field order.
enum class Attribute : std::size_t {
  kName = 0,
  kGender,
  kEthnicity,
  kSexualOrientation,
  kSocialClass,
  kEducationLevel,
  kOccupation,
  kTopPersonalInterest,
};

inline constexpr std::size_t kAttributeCount = 8;

inline constexpr std::array<Attribute, kAttributeCount> kAllAttributes = {
    Attribute::kName,        Attribute::kGender,         Attribute::kEthnicity,
    Attribute::kSexualOrientation, Attribute::kSocialClass, Attribute::kEducationLevel,
    Attribute::kOccupation,  Attribute::kTopPersonalInterest};

inline constexpr std::array<Attribute, 4> kIdentityAttributes = {
    Attribute::kName, Attribute::kGender, Attribute::kEthnicity, Attribute::kSexualOrientation};

inline constexpr std::array<Attribute, 4> kSocialAttributes = {
    Attribute::kSocialClass, Attribute::kEducationLevel, Attribute::kOccupation,
    Attribute::kTopPersonalInterest};

constexpr std::size_t index_of(Attribute a) { return static_cast<std::size_t>(a); }

bool is_identity(Attribute a);
bool is_social(Attribute a);

// snake_case key, e.g. "sexual_orientation".
std::string_view attribute_key(Attribute a);
// Short display label, e.g. "Sexual Orientation", "Education".
std::string_view attribute_label(Attribute a);
std::optional<Attribute> attribute_from_key(std::string_view key);

using AttributeValues = std::array<std::string, kAttributeCount>;

}  // namespace pba
