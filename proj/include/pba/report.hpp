#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pba/association.hpp"
#include "pba/corpus.hpp"
#include "pba/robustness.hpp"
#include "pba/taxonomy.hpp"

namespace pba {

using Json = nlohmann::ordered_json;

struct InputDigest {
  std::string name;
  std::string sha256;
};

// Embedded in every artifact so identical inputs give identical bytes.
// Nothing run-specific (timestamps, thread counts, output paths) goes here.
struct Provenance {
  std::vector<InputDigest> inputs;
  Json config = Json::object();
};

enum class ReportFormat { kJson, kCsv, kMarkdown };

std::optional<ReportFormat> format_from_key(std::string_view key);
std::string_view format_extension(ReportFormat format);

// Fixed-point rendering; NaN becomes `missing`.
std::string format_fixed(double value, int decimals, std::string_view missing = "");

Json provenance_json(const Provenance& provenance);
Provenance provenance_from_json(const Json& json);

// Per-model audit matrix.
Json audit_to_json(const AuditMatrix& audit, const Provenance& provenance,
                   const std::vector<NameCount>& name_pool = {});
AuditMatrix audit_from_json(const Json& json);
AuditMatrix read_audit_file(const std::string& path);
std::string render_audit(const AuditMatrix& audit, const Provenance& provenance, ReportFormat format,
                         const std::vector<NameCount>& name_pool = {});

// Ascending mean bias, ties by model id; models without any score last.
std::vector<const AuditMatrix*> order_by_mean(const std::vector<AuditMatrix>& audits);

std::string render_combined(const std::vector<AuditMatrix>& audits, const std::vector<NameCount>& name_pool,
                            const std::vector<std::string>& failures, const Provenance& provenance,
                            ReportFormat format);

// One row per standard dimension (16 angles), one column per model.
std::string render_radar_csv(const std::vector<AuditMatrix>& audits, const Provenance& provenance);

// JSON, CSV of cells, or an upper-triangular text matrix for markdown.
std::string render_significance(const SignificanceMatrix& matrix, const Provenance& provenance,
                                ReportFormat format);

std::string render_agreement(const std::vector<AgreementReport>& reports, const Provenance& provenance,
                             ReportFormat format);

struct TrajectoryAxis {
  Attribute identity = Attribute::kName;
  // scores[social][model]; empty where the dimension was unscorable.
  std::array<std::vector<std::optional<double>>, 4> scores;
  // Mean over the scorable social dimensions of each model.
  std::vector<std::optional<double>> mean;
  // Models whose mean left out at least one unscorable dimension.
  std::vector<std::string> partial;
};

struct TrajectoryView {
  std::vector<std::string> models;  // caller order
  std::vector<TrajectoryAxis> axes;
  std::array<double, 3> bands{1.0 / 3.0, 2.0 / 3.0, 1.0};
};

// Throws ConfigError ("UnknownModel") for ids without an audit.
TrajectoryView build_trajectory(const std::vector<AuditMatrix>& audits, const std::vector<std::string>& order);
std::string render_trajectory(const TrajectoryView& view, const Provenance& provenance, ReportFormat format);

// Full per-identity percentage matrix; each data row sums to 100.
std::string render_heatmap_csv(const ContingencyTable& table, const Provenance& provenance);
std::string render_top_k_csv(const std::vector<ConditionalTopK>& top, const Provenance& provenance);
std::string render_drill_down_csv(const DrillDownView& view, const Provenance& provenance);
std::string render_distribution_csv(const std::vector<CategoryShare>& shares, const Provenance& provenance);

struct GapRow {
  std::string model;
  std::string dimension;
  std::string group_a;
  std::string group_b;
  double gap = 0.0;
};
std::string render_gap_csv(const std::vector<GapRow>& rows, const Provenance& provenance);

}  // namespace pba
