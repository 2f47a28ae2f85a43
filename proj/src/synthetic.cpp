#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "pba/errors.hpp"
#include "pba/generation.hpp"
#include "pba/text.hpp"

namespace pba {

namespace {

std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

CategoricalAttribute uniform(std::vector<std::string> categories) {
  auto weights = uniform_weights(categories.size());
  return {std::move(categories), std::move(weights)};
}

void check_distribution(const std::vector<double>& weights, std::size_t expected_size,
                        const std::string& what) {
  if (weights.size() != expected_size) {
    throw InvalidSpec(what + ": expected " + std::to_string(expected_size) + " weights, got " +
                      std::to_string(weights.size()));
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidSpec(what + ": weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidSpec(what + ": weights sum to " + std::to_string(sum) + ", not 1");
  }
}

// 53-bit uniform in [0, 1); identical on every platform for a given engine state.
double next_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t draw(const std::vector<double>& weights, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  return last_positive;
}

struct ValuesHash {
  std::size_t operator()(const AttributeValues& values) const {
    std::size_t h = 0;
    for (const auto& v : values) h = h * 1000003u ^ std::hash<std::string>{}(v);
    return h;
  }
};

Attribute attribute_or_throw(const std::string& key) {
  auto a = attribute_from_key(key);
  if (!a) throw InvalidSpec("unknown attribute \"" + key + "\"");
  return *a;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidSpec("lambda must lie in [0, 1]");
  for (Attribute a : kAllAttributes) {
    const auto& attr = attributes[index_of(a)];
    const std::string what(attribute_key(a));
    if (attr.categories.empty()) throw InvalidSpec(what + ": no categories");
    std::set<std::string> unique;
    for (const auto& c : attr.categories) {
      if (c.empty() || normalize_text(c) != c) throw InvalidSpec(what + ": category \"" + c + "\" is not normalized");
      if (!unique.insert(c).second) throw InvalidSpec(what + ": duplicate category \"" + c + "\"");
    }
    check_distribution(attr.weights, attr.categories.size(), what);
  }
  if (!binding) {
    if (lambda > 0.0) throw InvalidSpec("lambda > 0 needs a binding");
    return;
  }
  if (!is_identity(binding->identity) || !is_social(binding->social)) {
    throw InvalidSpec("binding must pair an identity attribute with a social attribute");
  }
  const auto& identity = attributes[index_of(binding->identity)].categories;
  const auto& social = attributes[index_of(binding->social)].categories;
  for (const auto& category : identity) {
    auto it = binding->conditional.find(category);
    if (it == binding->conditional.end()) {
      throw InvalidSpec("binding: no conditional row for \"" + category + "\"");
    }
    check_distribution(it->second, social.size(), "binding row \"" + category + "\"");
  }
  if (binding->conditional.size() != identity.size()) {
    throw InvalidSpec("binding: conditional rows name unknown identity categories");
  }
}

SyntheticSpec default_synthetic_spec(double lambda, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.lambda = lambda;
  spec.seed = seed;

  std::vector<std::string> names = {
      "aaliyah", "aarav",   "alejandro", "amara",  "amir",    "ana",    "ava",     "carlos",
      "chen",    "chloe",   "daniel",    "david",  "elena",   "emily",  "emma",    "ethan",
      "fatima",  "hana",    "hiroshi",   "isabella", "jamal", "james",  "javier",  "jin",
      "jordan",  "kai",     "kavya",     "kwame",  "layla",   "leila",  "liam",    "lucas",
      "malik",   "maria",   "mateo",     "maya",   "mei",     "michael", "mohammed", "nia",
      "noah",    "olivia",  "omar",      "priya",  "rahul",   "riley",  "rosa",    "samir",
      "sarah",   "sofia",   "taylor",    "thomas", "valentina", "wei",  "william", "yara",
      "yuki",    "zainab",  "zara",      "zoe"};
  std::vector<double> name_weights;
  for (std::size_t i = 0; i < names.size(); ++i) name_weights.push_back(1.0 / (10.0 + static_cast<double>(i % 17)));
  const double total = std::accumulate(name_weights.begin(), name_weights.end(), 0.0);
  for (auto& w : name_weights) w /= total;

  auto& attrs = spec.attributes;
  attrs[index_of(Attribute::kName)] = {names, name_weights};
  attrs[index_of(Attribute::kGender)] = {{"female", "male", "non-binary"}, {0.47, 0.47, 0.06}};
  attrs[index_of(Attribute::kEthnicity)] =
      uniform({"asian", "black", "hispanic/latino", "middle eastern", "other", "white"});
  attrs[index_of(Attribute::kSexualOrientation)] =
      {{"bisexual", "gay", "heterosexual", "lesbian", "other"}, {0.12, 0.1, 0.62, 0.1, 0.06}};
  attrs[index_of(Attribute::kSocialClass)] = {{"lower", "middle", "upper"}, {0.25, 0.55, 0.2}};
  attrs[index_of(Attribute::kEducationLevel)] =
      uniform({"associate degree", "bachelor's degree", "doctorate", "high school", "master's degree"});
  attrs[index_of(Attribute::kOccupation)] = uniform(
      {"business & finance", "creative & design", "driver", "education", "engineering", "healthcare",
       "hospitality & food", "it & software", "legal", "marketing & hr", "media & publishing", "other",
       "public service", "retail & sales", "science & research", "skilled worker",
       "social work & nonprofit", "student"});
  attrs[index_of(Attribute::kTopPersonalInterest)] = uniform(
      {"arts & crafts", "cooking & food", "fashion & beauty", "gaming & technology", "gardening",
       "history & culture", "music", "outdoors & nature", "photography & film", "reading & writing",
       "science & learning", "sports & fitness", "travel", "volunteering & activism",
       "wellness & mindfulness"});

  Binding binding;
  binding.identity = Attribute::kGender;
  binding.social = Attribute::kOccupation;
  const auto& occupations = attrs[index_of(Attribute::kOccupation)].categories;
  auto one_hot = [&](const std::string& target) {
    std::vector<double> row(occupations.size(), 0.0);
    for (std::size_t i = 0; i < occupations.size(); ++i) row[i] = occupations[i] == target ? 1.0 : 0.0;
    return row;
  };
  binding.conditional["female"] = one_hot("healthcare");
  binding.conditional["male"] = one_hot("engineering");
  binding.conditional["non-binary"] = one_hot("creative & design");
  spec.binding = std::move(binding);
  return spec;
}

SyntheticSpec synthetic_spec_from_json(const std::string& text) {
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw InvalidSpec("synthetic spec is not a JSON object");
  SyntheticSpec spec;
  try {
    spec.seed = doc.value("seed", std::uint64_t{0});
    spec.lambda = doc.value("lambda", 0.0);
    spec.model_id = doc.value("model_id", std::string("synthetic"));
    const auto& attributes = doc.at("attributes");
    for (Attribute a : kAllAttributes) {
      const std::string key(attribute_key(a));
      if (!attributes.contains(key)) throw InvalidSpec("attributes." + key + " missing");
      const auto& entry = attributes.at(key);
      auto& attr = spec.attributes[index_of(a)];
      attr.categories = entry.at("categories").get<std::vector<std::string>>();
      attr.weights = entry.contains("weights") ? entry.at("weights").get<std::vector<double>>()
                                               : uniform_weights(attr.categories.size());
    }
    if (doc.contains("binding")) {
      const auto& b = doc.at("binding");
      Binding binding;
      binding.identity = attribute_or_throw(b.at("identity").get<std::string>());
      binding.social = attribute_or_throw(b.at("social").get<std::string>());
      const auto& social = spec.attributes[index_of(binding.social)].categories;
      for (const auto& [identity, row] : b.at("conditional").items()) {
        std::vector<double> weights(social.size(), 0.0);
        for (const auto& [category, weight] : row.items()) {
          auto it = std::find(social.begin(), social.end(), category);
          if (it == social.end()) throw InvalidSpec("binding: unknown social category \"" + category + "\"");
          weights[static_cast<std::size_t>(it - social.begin())] = weight.get<double>();
        }
        binding.conditional[identity] = std::move(weights);
      }
      spec.binding = std::move(binding);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

Corpus synthetic_generate(const SyntheticSpec& spec, std::size_t n) {
  spec.validate();
  double combinations = 1.0;
  for (const auto& attr : spec.attributes) {
    combinations *= static_cast<double>(
        std::count_if(attr.weights.begin(), attr.weights.end(), [](double w) { return w > 0.0; }));
  }
  if (combinations < static_cast<double>(n)) {
    throw InvalidSpec("spec admits fewer distinct personas than the " + std::to_string(n) + " requested");
  }

  std::mt19937_64 rng(spec.seed);
  std::unordered_set<AttributeValues, ValuesHash> seen;
  std::vector<PersonaRecord> records;
  records.reserve(n);
  const std::string run_id = "synthetic-seed-" + std::to_string(spec.seed);
  const std::size_t max_draws = 50 * n + 1000;

  for (std::size_t draws = 0; records.size() < n; ++draws) {
    if (draws >= max_draws) throw InvalidSpec("could not draw enough distinct personas");
    std::array<double, kAttributeCount> u{};
    for (auto& value : u) value = next_uniform(rng);
    const double u_bind = next_uniform(rng);
    const double u_conditional = next_uniform(rng);

    PersonaRecord record;
    for (Attribute a : kAllAttributes) {
      const auto& attr = spec.attributes[index_of(a)];
      record.raw[index_of(a)] = attr.categories[draw(attr.weights, u[index_of(a)])];
    }
    if (spec.binding && u_bind < spec.lambda) {
      const auto& identity_value = record.raw[index_of(spec.binding->identity)];
      const auto& row = spec.binding->conditional.at(identity_value);
      const auto& social = spec.attributes[index_of(spec.binding->social)];
      record.raw[index_of(spec.binding->social)] = social.categories[draw(row, u_conditional)];
    }
    if (!seen.insert(record.raw).second) continue;
    record.source = {spec.model_id, run_id, records.size()};
    records.push_back(std::move(record));
  }
  return make_corpus(spec.model_id, std::move(records));
}

}  // namespace pba
