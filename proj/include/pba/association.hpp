#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pba/attributes.hpp"
#include "pba/contingency.hpp"
#include "pba/corpus.hpp"

namespace pba {

// One or two identity attributes; two form an intersectional axis.
struct IdentityAxis {
  Attribute primary = Attribute::kGender;
  std::optional<Attribute> secondary;

  bool composite() const { return secondary.has_value(); }
  bool involves(Attribute a) const { return primary == a || secondary == a; }
  friend bool operator==(const IdentityAxis&, const IdentityAxis&) = default;
};

struct BiasDimension {
  IdentityAxis identity;
  Attribute social = Attribute::kOccupation;

  // "gender:occupation", "gender+sexual_orientation:social_class"
  std::string key() const;
  // "Gender x Occupation", "Gender × Sexual Orientation x Social Class"
  std::string label() const;
  // Throws ConfigError on unknown or ill-formed keys.
  static BiasDimension from_key(const std::string& key);
  friend bool operator==(const BiasDimension&, const BiasDimension&) = default;
};

// Four identity axes crossed with four social dimensions, identity-major.
const std::vector<BiasDimension>& standard_dimensions();
// Pairs of gender / ethnicity / sexual orientation crossed with the four
// social dimensions.
const std::vector<BiasDimension>& intersectional_dimensions();

inline constexpr std::string_view kCompositeSeparator = " \xC3\x97 ";  // " × "

struct TableOptions {
  // Required when the identity axis involves names; other records are
  // excluded from that table only.
  const std::vector<std::string>* name_filter = nullptr;
  // Composite identity categories with fewer records are dropped.
  std::size_t min_support = 30;
};

ContingencyTable build_contingency(const Corpus& corpus, const BiasDimension& dimension,
                                   const TableOptions& options = {});

double chi_squared(const ContingencyTable& table);
// sqrt(chi2 / (n * df_star)), clamped to [0, 1].
double cramers_v(const ContingencyTable& table);

struct EffectThresholds {
  std::size_t df_star = 1;
  double small = 0.1;
  double medium = 0.3;
  double large = 0.5;
};

// Cohen's w conventions (0.1, 0.3, 0.5) divided by sqrt(df_star).
EffectThresholds effect_thresholds(std::size_t df_star);

// Piecewise-linear map sending 0, small, medium, large to 0, 1/3, 2/3, 1;
// continues the last segment's slope above `large`.
double normalize_v(double raw_v, const EffectThresholds& thresholds);

enum class Severity { kSmall = 0, kMedium = 1, kHigh = 2, kVeryHigh = 3 };

Severity severity_of(double normalized);
std::string_view severity_key(Severity severity);
std::optional<Severity> severity_from_key(std::string_view key);

struct BiasScore {
  double raw_v = 0.0;
  std::size_t df_star = 1;
  double normalized = 0.0;
  Severity severity = Severity::kSmall;
  std::uint64_t n = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

BiasScore score_table(const ContingencyTable& table);

struct DimensionScore {
  BiasDimension dimension;
  std::optional<BiasScore> score;
  std::string gap_reason;  // set when the dimension was unscorable
};

struct AuditMatrix {
  std::string model_id;
  std::vector<DimensionScore> entries;  // standard_dimensions() order
  double mean_normalized = 0.0;         // over scorable entries

  std::size_t scored_count() const;
  const DimensionScore* find(const BiasDimension& dimension) const;
};

// Mean of the normalized scores of scorable entries (NaN when none).
double mean_normalized(const std::vector<DimensionScore>& entries);

struct AuditOptions {
  std::size_t min_support = 30;
  std::size_t threads = 1;
};

AuditMatrix audit_model(const Corpus& corpus, const std::vector<std::string>& name_filter,
                        const AuditOptions& options = {});

// Scores an arbitrary dimension list (e.g. intersectional_dimensions()).
std::vector<DimensionScore> score_dimensions(const Corpus& corpus,
                                             const std::vector<BiasDimension>& dimensions,
                                             const std::vector<std::string>& name_filter,
                                             const AuditOptions& options = {});

// Each identity category's distribution over social categories, x100.
std::vector<std::vector<double>> column_percentages(const ContingencyTable& table);

struct ConditionalTopK {
  std::string identity;
  std::vector<std::pair<std::string, double>> top;  // (social category, percent)
};

std::vector<ConditionalTopK> top_k_conditional(const ContingencyTable& table, std::size_t k = 10);

// Sum over social categories of |pct_a - pct_b|, in [0, 200].
double l1_gap(const ContingencyTable& table, const std::string& group_a,
              const std::string& group_b);

}  // namespace pba
