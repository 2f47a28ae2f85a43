#include "pba/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>
#include <unordered_set>

#include "pba/errors.hpp"

namespace pba {

namespace {

std::vector<BiasDimension> make_standard() {
  std::vector<BiasDimension> dims;
  for (Attribute identity : kIdentityAttributes) {
    for (Attribute social : kSocialAttributes) dims.push_back({{identity, std::nullopt}, social});
  }
  return dims;
}

std::vector<BiasDimension> make_intersectional() {
  const std::array<std::pair<Attribute, Attribute>, 3> pairs = {{
      {Attribute::kGender, Attribute::kSexualOrientation},
      {Attribute::kGender, Attribute::kEthnicity},
      {Attribute::kEthnicity, Attribute::kSexualOrientation},
  }};
  std::vector<BiasDimension> dims;
  for (const auto& [a, b] : pairs) {
    for (Attribute social : kSocialAttributes) dims.push_back({{a, b}, social});
  }
  return dims;
}

Attribute parse_attribute(const std::string& key, const std::string& context) {
  auto a = attribute_from_key(key);
  if (!a) throw ConfigError("unknown attribute \"" + key + "\" in dimension \"" + context + "\"");
  return *a;
}

}  // namespace

std::string BiasDimension::key() const {
  std::string out(attribute_key(identity.primary));
  if (identity.secondary) {
    out += '+';
    out += attribute_key(*identity.secondary);
  }
  out += ':';
  out += attribute_key(social);
  return out;
}

std::string BiasDimension::label() const {
  std::string out(attribute_label(identity.primary));
  if (identity.secondary) {
    out += kCompositeSeparator;
    out += attribute_label(*identity.secondary);
  }
  out += " x ";
  out += attribute_label(social);
  return out;
}

BiasDimension BiasDimension::from_key(const std::string& key) {
  auto colon = key.find(':');
  if (colon == std::string::npos) throw ConfigError("dimension key \"" + key + "\" lacks ':'");
  std::string identity = key.substr(0, colon);
  BiasDimension dim;
  dim.social = parse_attribute(key.substr(colon + 1), key);
  auto plus = identity.find('+');
  dim.identity.primary = parse_attribute(identity.substr(0, plus), key);
  if (plus != std::string::npos) {
    dim.identity.secondary = parse_attribute(identity.substr(plus + 1), key);
  }
  const bool valid_identity =
      is_identity(dim.identity.primary) &&
      (!dim.identity.secondary ||
       (is_identity(*dim.identity.secondary) && *dim.identity.secondary != dim.identity.primary));
  if (!valid_identity || !is_social(dim.social)) {
    throw ConfigError("dimension \"" + key + "\" must cross identity attributes with a social one");
  }
  return dim;
}

const std::vector<BiasDimension>& standard_dimensions() {
  static const std::vector<BiasDimension> dims = make_standard();
  return dims;
}

const std::vector<BiasDimension>& intersectional_dimensions() {
  static const std::vector<BiasDimension> dims = make_intersectional();
  return dims;
}

ContingencyTable build_contingency(const Corpus& corpus, const BiasDimension& dimension,
                                   const TableOptions& options) {
  const IdentityAxis& axis = dimension.identity;
  std::unordered_set<std::string> names;
  if (axis.involves(Attribute::kName)) {
    if (options.name_filter == nullptr) {
      throw ConfigError("dimension " + dimension.key() + " needs a name filter");
    }
    names.insert(options.name_filter->begin(), options.name_filter->end());
  }

  std::map<std::string, std::map<std::string, ContingencyTable::Count>> cells;
  std::map<std::string, ContingencyTable::Count> identity_totals;
  std::map<std::string, bool> social_seen;
  for (const auto& record : corpus.records) {
    if (axis.involves(Attribute::kName) && !names.count(record.category(Attribute::kName))) {
      continue;
    }
    std::string row = record.category(axis.primary);
    if (axis.secondary) {
      row += kCompositeSeparator;
      row += record.category(*axis.secondary);
    }
    const std::string& col = record.category(dimension.social);
    ++cells[row][col];
    ++identity_totals[row];
    social_seen[col] = true;
  }

  std::vector<std::string> rows;
  for (const auto& [row, total] : identity_totals) {
    if (!axis.composite() || total >= options.min_support) rows.push_back(row);
  }
  std::vector<std::string> cols;
  for (const auto& [col, seen] : social_seen) cols.push_back(col);

  std::vector<std::vector<ContingencyTable::Count>> counts(rows.size(),
                                                           std::vector<ContingencyTable::Count>(cols.size(), 0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row_cells = cells[rows[i]];
    for (std::size_t j = 0; j < cols.size(); ++j) {
      auto it = row_cells.find(cols[j]);
      if (it != row_cells.end()) counts[i][j] = it->second;
    }
  }
  try {
    return ContingencyTable::from_counts(std::move(rows), std::move(cols), counts);
  } catch (const DegenerateTable& e) {
    throw DegenerateTable(dimension.key() + ": " + e.what());
  }
}

double chi_squared(const ContingencyTable& table) {
  const double n = static_cast<double>(table.n());
  double chi2 = 0.0;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const double row = static_cast<double>(table.row_total(i));
    for (std::size_t j = 0; j < table.cols(); ++j) {
      const double expected = row * static_cast<double>(table.col_total(j)) / n;
      const double diff = static_cast<double>(table.count(i, j)) - expected;
      chi2 += diff * diff / expected;
    }
  }
  return chi2;
}

double cramers_v(const ContingencyTable& table) {
  const double denom = static_cast<double>(table.n()) * static_cast<double>(table.df_star());
  const double v = std::sqrt(chi_squared(table) / denom);
  return std::clamp(v, 0.0, 1.0);
}

EffectThresholds effect_thresholds(std::size_t df_star) {
  if (df_star == 0) throw DegenerateTable("effect thresholds need df_star >= 1");
  const double root = std::sqrt(static_cast<double>(df_star));
  return {df_star, 0.1 / root, 0.3 / root, 0.5 / root};
}

double normalize_v(double raw_v, const EffectThresholds& t) {
  constexpr double kThird = 1.0 / 3.0;
  constexpr double kTwoThirds = 2.0 / 3.0;
  // Each segment is anchored at its upper knot so the knots map exactly.
  if (raw_v <= t.small) return kThird - (t.small - raw_v) / t.small / 3.0;
  if (raw_v <= t.medium) return kTwoThirds - (t.medium - raw_v) / (t.medium - t.small) / 3.0;
  if (raw_v <= t.large) return 1.0 - (t.large - raw_v) / (t.large - t.medium) / 3.0;
  return 1.0 + (raw_v - t.large) / (t.large - t.medium) / 3.0;
}

Severity severity_of(double normalized) {
  if (normalized < 1.0 / 3.0) return Severity::kSmall;
  if (normalized < 2.0 / 3.0) return Severity::kMedium;
  if (normalized <= 1.0) return Severity::kHigh;
  return Severity::kVeryHigh;
}

std::string_view severity_key(Severity severity) {
  switch (severity) {
    case Severity::kSmall: return "small";
    case Severity::kMedium: return "medium";
    case Severity::kHigh: return "high";
    case Severity::kVeryHigh: return "very_high";
  }
  return "small";
}

std::optional<Severity> severity_from_key(std::string_view key) {
  for (Severity s : {Severity::kSmall, Severity::kMedium, Severity::kHigh, Severity::kVeryHigh}) {
    if (severity_key(s) == key) return s;
  }
  return std::nullopt;
}

BiasScore score_table(const ContingencyTable& table) {
  BiasScore score;
  score.raw_v = cramers_v(table);
  score.df_star = table.df_star();
  score.normalized = normalize_v(score.raw_v, effect_thresholds(score.df_star));
  score.severity = severity_of(score.normalized);
  score.n = table.n();
  score.rows = table.rows();
  score.cols = table.cols();
  return score;
}

std::size_t AuditMatrix::scored_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.score.has_value(); }));
}

const DimensionScore* AuditMatrix::find(const BiasDimension& dimension) const {
  for (const auto& entry : entries) {
    if (entry.dimension == dimension) return &entry;
  }
  return nullptr;
}

double mean_normalized(const std::vector<DimensionScore>& entries) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& entry : entries) {
    if (!entry.score) continue;
    sum += entry.score->normalized;
    ++count;
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
}

std::vector<DimensionScore> score_dimensions(const Corpus& corpus,
                                             const std::vector<BiasDimension>& dimensions,
                                             const std::vector<std::string>& name_filter,
                                             const AuditOptions& options) {
  std::vector<DimensionScore> entries(dimensions.size());
  TableOptions table_options{&name_filter, options.min_support};

  auto score_one = [&](std::size_t i) {
    entries[i].dimension = dimensions[i];
    try {
      entries[i].score = score_table(build_contingency(corpus, dimensions[i], table_options));
    } catch (const DegenerateTable& e) {
      entries[i].gap_reason = e.what();
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, dimensions.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < dimensions.size(); ++i) score_one(i);
    return entries;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < dimensions.size(); i += workers) score_one(i);
    });
  }
  for (auto& t : pool) t.join();
  return entries;
}

AuditMatrix audit_model(const Corpus& corpus, const std::vector<std::string>& name_filter,
                        const AuditOptions& options) {
  AuditMatrix audit;
  audit.model_id = corpus.model_id;
  audit.entries = score_dimensions(corpus, standard_dimensions(), name_filter, options);
  audit.mean_normalized = mean_normalized(audit.entries);
  return audit;
}

std::vector<std::vector<double>> column_percentages(const ContingencyTable& table) {
  std::vector<std::vector<double>> pct(table.rows(), std::vector<double>(table.cols(), 0.0));
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const double total = static_cast<double>(table.row_total(i));
    for (std::size_t j = 0; j < table.cols(); ++j) {
      pct[i][j] = 100.0 * static_cast<double>(table.count(i, j)) / total;
    }
  }
  return pct;
}

std::vector<ConditionalTopK> top_k_conditional(const ContingencyTable& table, std::size_t k) {
  if (k == 0) throw ConfigError("top_k_conditional: k must be at least 1");
  const auto pct = column_percentages(table);
  std::vector<ConditionalTopK> out;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    ConditionalTopK row{table.row_labels()[i], {}};
    for (std::size_t j = 0; j < table.cols(); ++j) {
      row.top.emplace_back(table.col_labels()[j], pct[i][j]);
    }
    std::stable_sort(row.top.begin(), row.top.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (row.top.size() > k) row.top.resize(k);
    out.push_back(std::move(row));
  }
  return out;
}

double l1_gap(const ContingencyTable& table, const std::string& group_a,
              const std::string& group_b) {
  const std::size_t a = table.find_row(group_a);
  const std::size_t b = table.find_row(group_b);
  if (a == table.rows()) throw UnknownLabel("no identity category \"" + group_a + "\"");
  if (b == table.rows()) throw UnknownLabel("no identity category \"" + group_b + "\"");
  const auto pct = column_percentages(table);
  double gap = 0.0;
  for (std::size_t j = 0; j < table.cols(); ++j) gap += std::abs(pct[a][j] - pct[b][j]);
  return gap;
}

}  // namespace pba
