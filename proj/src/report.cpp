#include "pba/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "pba/errors.hpp"

namespace pba {

namespace {

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_cell(const std::string& value) {
  std::string out;
  for (char c : value) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

Json number_or_null(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

// Provenance as leading comment lines, for formats without a metadata slot.
std::string comment_header(const Provenance& provenance, std::string_view prefix, std::string_view suffix = "") {
  std::ostringstream out;
  out << prefix << "tool pba " << PBA_VERSION << suffix << '\n';
  for (const auto& input : provenance.inputs) {
    out << prefix << "input " << input.name << " sha256:" << input.sha256 << suffix << '\n';
  }
  out << prefix << "config " << provenance.config.dump() << suffix << '\n';
  return out.str();
}

std::string csv_header(const Provenance& provenance) { return comment_header(provenance, "# "); }
std::string md_header(const Provenance& provenance) { return comment_header(provenance, "<!-- ", " -->") + "\n"; }

Json envelope(const Provenance& provenance) {
  Json doc;
  doc["tool"] = "pba";
  doc["version"] = PBA_VERSION;
  doc["provenance"] = provenance_json(provenance);
  return doc;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

std::string score_cell(const DimensionScore& entry, int decimals = 3) {
  if (!entry.score) return "n/a";
  return format_fixed(entry.score->normalized, decimals) + " (" + std::string(severity_key(entry.score->severity)) + ")";
}

Json dimension_json(const DimensionScore& entry) {
  Json item;
  item["label"] = entry.dimension.label();
  if (entry.score) {
    const BiasScore& s = *entry.score;
    item["raw_v"] = s.raw_v;
    item["df_star"] = s.df_star;
    item["normalized"] = s.normalized;
    item["severity"] = severity_key(s.severity);
    item["n"] = s.n;
    item["rows"] = s.rows;
    item["cols"] = s.cols;
  } else {
    item["unscorable"] = entry.gap_reason;
  }
  return item;
}

Json name_pool_json(const std::vector<NameCount>& pool) {
  Json names = Json::array();
  for (const auto& entry : pool) names.push_back({{"name", entry.name}, {"count", entry.count}});
  return names;
}

std::string ttest_cell(const std::optional<TTestResult>& test) {
  if (!test) return "";
  return "t=" + format_fixed(test->t, 3) + ", p=" + format_fixed(test->p, 4);
}

std::string icc_cell(const Icc& icc) {
  return format_fixed(icc.value, 3, "n/a") + (icc.degenerate ? " (degenerate)" : "");
}

}  // namespace

std::optional<ReportFormat> format_from_key(std::string_view key) {
  if (key == "json") return ReportFormat::kJson;
  if (key == "csv") return ReportFormat::kCsv;
  if (key == "md" || key == "markdown") return ReportFormat::kMarkdown;
  return std::nullopt;
}

std::string_view format_extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: return "json";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kMarkdown: return "md";
  }
  return "json";
}

std::string format_fixed(double value, int decimals, std::string_view missing) {
  if (!std::isfinite(value)) return std::string(missing);
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
  std::string out = buffer;
  // Avoid "-0.000" for tiny negatives.
  if (out[0] == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

Json provenance_json(const Provenance& provenance) {
  Json inputs = Json::array();
  for (const auto& input : provenance.inputs) inputs.push_back({{"name", input.name}, {"sha256", input.sha256}});
  Json out;
  out["inputs"] = inputs;
  out["config"] = provenance.config;
  return out;
}

Provenance provenance_from_json(const Json& json) {
  Provenance provenance;
  if (!json.is_object()) return provenance;
  if (json.contains("inputs")) {
    for (const auto& input : json.at("inputs")) {
      provenance.inputs.push_back({input.value("name", ""), input.value("sha256", "")});
    }
  }
  if (json.contains("config")) provenance.config = json.at("config");
  return provenance;
}

Json audit_to_json(const AuditMatrix& audit, const Provenance& provenance, const std::vector<NameCount>& name_pool) {
  Json doc = envelope(provenance);
  doc["model_id"] = audit.model_id;
  doc["name_pool"] = name_pool_json(name_pool);
  Json scores = Json::object();
  for (const auto& entry : audit.entries) scores[entry.dimension.key()] = dimension_json(entry);
  doc["scores"] = scores;
  doc["scored"] = audit.scored_count();
  doc["mean"] = number_or_null(audit.mean_normalized);
  return doc;
}

AuditMatrix audit_from_json(const Json& json) {
  try {
    AuditMatrix audit;
    audit.model_id = json.at("model_id").get<std::string>();
    for (const auto& [key, item] : json.at("scores").items()) {
      DimensionScore entry;
      entry.dimension = BiasDimension::from_key(key);
      if (item.contains("unscorable")) {
        entry.gap_reason = item.at("unscorable").get<std::string>();
      } else {
        BiasScore score;
        score.raw_v = item.at("raw_v").get<double>();
        score.df_star = item.at("df_star").get<std::size_t>();
        score.normalized = item.at("normalized").get<double>();
        const auto severity = severity_from_key(item.at("severity").get<std::string>());
        if (!severity) throw DataError("unknown severity in audit file");
        score.severity = *severity;
        score.n = item.at("n").get<std::uint64_t>();
        score.rows = item.at("rows").get<std::size_t>();
        score.cols = item.at("cols").get<std::size_t>();
        entry.score = score;
      }
      audit.entries.push_back(std::move(entry));
    }
    audit.mean_normalized = mean_normalized(audit.entries);
    return audit;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed audit file: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed audit file: ") + e.what());
  }
}

AuditMatrix read_audit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read audit file " + path);
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw DataError("audit file " + path + " is not valid JSON");
  return audit_from_json(doc);
}

std::string render_audit(const AuditMatrix& audit, const Provenance& provenance, ReportFormat format,
                         const std::vector<NameCount>& name_pool) {
  if (format == ReportFormat::kJson) return dump(audit_to_json(audit, provenance, name_pool));

  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << csv_header(provenance);
    out << "model,dimension,label,raw_v,df_star,normalized,severity,n,rows,cols,note\n";
    for (const auto& entry : audit.entries) {
      out << csv_field(audit.model_id) << ',' << entry.dimension.key() << ',' << csv_field(entry.dimension.label())
          << ',';
      if (entry.score) {
        const BiasScore& s = *entry.score;
        out << format_fixed(s.raw_v, 6) << ',' << s.df_star << ',' << format_fixed(s.normalized, 6) << ','
            << severity_key(s.severity) << ',' << s.n << ',' << s.rows << ',' << s.cols << ",\n";
      } else {
        out << ",,,,,,," << csv_field(entry.gap_reason) << '\n';
      }
    }
    out << csv_field(audit.model_id) << ",mean,Mean,,," << format_fixed(audit.mean_normalized, 6) << ",,,,,\n";
    return out.str();
  }

  out << md_header(provenance);
  out << "## " << md_cell(audit.model_id) << "\n\n";
  out << "| Identity |";
  for (Attribute social : kSocialAttributes) out << ' ' << attribute_label(social) << " |";
  out << "\n|---|---|---|---|---|\n";
  for (Attribute identity : kIdentityAttributes) {
    out << "| " << attribute_label(identity) << " |";
    for (Attribute social : kSocialAttributes) {
      const DimensionScore* entry = audit.find(BiasDimension{{identity, std::nullopt}, social});
      out << ' ' << (entry ? score_cell(*entry) : std::string("n/a")) << " |";
    }
    out << '\n';
  }
  out << "\nMean normalized score: " << format_fixed(audit.mean_normalized, 3, "n/a") << " over "
      << audit.scored_count() << " scorable dimensions.\n";
  for (const auto& entry : audit.entries) {
    if (!entry.score) out << "\n- " << entry.dimension.label() << " unscorable: " << md_cell(entry.gap_reason);
  }
  if (audit.scored_count() != audit.entries.size()) out << '\n';
  return out.str();
}

std::vector<const AuditMatrix*> order_by_mean(const std::vector<AuditMatrix>& audits) {
  std::vector<const AuditMatrix*> ordered;
  for (const auto& audit : audits) ordered.push_back(&audit);
  std::stable_sort(ordered.begin(), ordered.end(), [](const AuditMatrix* a, const AuditMatrix* b) {
    const bool fa = std::isfinite(a->mean_normalized);
    const bool fb = std::isfinite(b->mean_normalized);
    if (fa != fb) return fa;
    if (fa && a->mean_normalized != b->mean_normalized) return a->mean_normalized < b->mean_normalized;
    return a->model_id < b->model_id;
  });
  return ordered;
}

std::string render_combined(const std::vector<AuditMatrix>& audits, const std::vector<NameCount>& name_pool,
                            const std::vector<std::string>& failures, const Provenance& provenance,
                            ReportFormat format) {
  const auto ordered = order_by_mean(audits);
  const auto& dims = standard_dimensions();

  if (format == ReportFormat::kJson) {
    Json doc = envelope(provenance);
    doc["name_pool"] = name_pool_json(name_pool);
    Json models = Json::array();
    for (const AuditMatrix* audit : ordered) {
      Json row;
      row["model_id"] = audit->model_id;
      Json scores = Json::object();
      for (const auto& entry : audit->entries) {
        scores[entry.dimension.key()] = entry.score ? number_or_null(entry.score->normalized) : Json(nullptr);
      }
      row["scores"] = scores;
      row["mean"] = number_or_null(audit->mean_normalized);
      models.push_back(row);
    }
    doc["models"] = models;
    doc["failures"] = failures;
    return dump(doc);
  }

  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << csv_header(provenance);
    out << "model";
    for (const auto& dim : dims) out << ',' << dim.key();
    out << ",mean\n";
    for (const AuditMatrix* audit : ordered) {
      out << csv_field(audit->model_id);
      for (const auto& dim : dims) {
        const DimensionScore* entry = audit->find(dim);
        out << ',' << (entry && entry->score ? format_fixed(entry->score->normalized, 6) : "");
      }
      out << ',' << format_fixed(audit->mean_normalized, 6) << '\n';
    }
    return out.str();
  }

  out << md_header(provenance);
  out << "| Model |";
  for (const auto& dim : dims) out << ' ' << dim.label() << " |";
  out << " Mean |\n|---|";
  for (std::size_t i = 0; i <= dims.size(); ++i) out << "---|";
  out << '\n';
  for (const AuditMatrix* audit : ordered) {
    out << "| " << md_cell(audit->model_id) << " |";
    for (const auto& dim : dims) {
      const DimensionScore* entry = audit->find(dim);
      out << ' ' << (entry ? score_cell(*entry) : std::string("n/a")) << " |";
    }
    out << ' ' << format_fixed(audit->mean_normalized, 3, "n/a") << " |\n";
  }
  if (!name_pool.empty()) {
    out << "\nName pool (" << name_pool.size() << "): ";
    for (std::size_t i = 0; i < name_pool.size(); ++i) out << (i ? ", " : "") << md_cell(name_pool[i].name);
    out << '\n';
  }
  for (const auto& failure : failures) out << "\nFailed: " << md_cell(failure) << '\n';
  return out.str();
}

std::string render_radar_csv(const std::vector<AuditMatrix>& audits, const Provenance& provenance) {
  std::ostringstream out;
  out << csv_header(provenance);
  out << "angle,dimension";
  for (const auto& audit : audits) out << ',' << csv_field(audit.model_id);
  out << '\n';
  const auto& dims = standard_dimensions();
  for (std::size_t i = 0; i < dims.size(); ++i) {
    out << i << ',' << csv_field(dims[i].label());
    for (const auto& audit : audits) {
      const DimensionScore* entry = audit.find(dims[i]);
      out << ',' << (entry && entry->score ? format_fixed(entry->score->normalized, 6) : "");
    }
    out << '\n';
  }
  return out.str();
}

std::string render_significance(const SignificanceMatrix& matrix, const Provenance& provenance,
                                ReportFormat format) {
  if (format == ReportFormat::kJson) {
    Json doc = envelope(provenance);
    doc["q"] = matrix.q;
    Json models = Json::array();
    for (std::size_t i = 0; i < matrix.models.size(); ++i) {
      models.push_back({{"model_id", matrix.models[i]}, {"mean", number_or_null(matrix.means[i])}});
    }
    doc["models"] = models;
    doc["dimensions"] = matrix.dimensions;
    Json cells = Json::array();
    for (const auto& cell : matrix.cells) {
      Json item;
      item["a"] = matrix.models[cell.row];
      item["b"] = matrix.models[cell.col];
      if (cell.test) {
        item["t"] = number_or_null(cell.test->t);
        item["p"] = number_or_null(cell.test->p);
        item["df"] = cell.test->df;
        item["mean_difference"] = cell.test->mean_difference;
        item["significant"] = cell.significant;
      } else {
        item["incomparable"] = true;
      }
      cells.push_back(item);
    }
    doc["cells"] = cells;
    return dump(doc);
  }

  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << csv_header(provenance);
    out << "a,b,t,p,df,mean_difference,significant\n";
    for (const auto& cell : matrix.cells) {
      out << csv_field(matrix.models[cell.row]) << ',' << csv_field(matrix.models[cell.col]) << ',';
      if (cell.test) {
        out << format_fixed(cell.test->t, 6) << ',' << format_fixed(cell.test->p, 8) << ',' << cell.test->df << ','
            << format_fixed(cell.test->mean_difference, 6) << ',' << (cell.significant ? "yes" : "no") << '\n';
      } else {
        out << ",,,,incomparable\n";
      }
    }
    return out.str();
  }

  // Upper triangle: p-value, starred when rejected at q.
  out << md_header(provenance);
  out << "| |";
  for (const auto& model : matrix.models) out << ' ' << md_cell(model) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < matrix.models.size(); ++i) out << "---|";
  out << '\n';
  for (std::size_t r = 0; r < matrix.models.size(); ++r) {
    out << "| " << md_cell(matrix.models[r]) << " (" << format_fixed(matrix.means[r], 3, "n/a") << ") |";
    for (std::size_t c = 0; c < matrix.models.size(); ++c) {
      if (c <= r) {
        out << "  |";
        continue;
      }
      const PairwiseCell& cell = matrix.cell(r, c);
      if (!cell.test) {
        out << " n/a |";
      } else {
        out << ' ' << format_fixed(cell.test->p, 4) << (cell.significant ? "*" : "") << " |";
      }
    }
    out << '\n';
  }
  out << "\n* significant after BH-FDR at q = " << format_fixed(matrix.q, 3) << "; n/a marks incomparable pairs.\n";
  return out.str();
}

std::string render_agreement(const std::vector<AgreementReport>& reports, const Provenance& provenance,
                             ReportFormat format) {
  if (format == ReportFormat::kJson) {
    Json doc = envelope(provenance);
    Json rows = Json::array();
    for (const auto& report : reports) {
      Json row;
      row["dimension"] = report.dimension.key();
      row["label"] = report.dimension.label();
      row["subjects"] = report.subjects;
      row["icc_c1"] = number_or_null(report.icc_c1.value);
      row["icc_c1_degenerate"] = report.icc_c1.degenerate;
      row["icc_a1"] = number_or_null(report.icc_a1.value);
      row["icc_a1_degenerate"] = report.icc_a1.degenerate;
      row["spearman"] = number_or_null(report.ranks.spearman);
      row["kendall"] = number_or_null(report.ranks.kendall);
      row["rank_pairs_used"] = report.ranks.pairs_used;
      row["rank_pairs_excluded"] = report.ranks.pairs_excluded;
      row["severity_difference"] = number_or_null(report.severity_difference);
      if (report.t_test) {
        row["t_test"] = {{"t", number_or_null(report.t_test->t)},
                         {"p", number_or_null(report.t_test->p)},
                         {"df", report.t_test->df},
                         {"mean_difference", report.t_test->mean_difference}};
      }
      if (!report.note.empty()) row["note"] = report.note;
      rows.push_back(row);
    }
    doc["rows"] = rows;
    return dump(doc);
  }

  const bool with_t = std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.t_test.has_value(); });
  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << csv_header(provenance);
    out << "dimension,label,icc_c1,icc_c1_degenerate,icc_a1,icc_a1_degenerate,spearman,kendall,sd";
    if (with_t) out << ",t,p";
    out << ",note\n";
    for (const auto& r : reports) {
      out << r.dimension.key() << ',' << csv_field(r.dimension.label()) << ',' << format_fixed(r.icc_c1.value, 6)
          << ',' << (r.icc_c1.degenerate ? "yes" : "no") << ',' << format_fixed(r.icc_a1.value, 6) << ','
          << (r.icc_a1.degenerate ? "yes" : "no") << ',' << format_fixed(r.ranks.spearman, 6) << ','
          << format_fixed(r.ranks.kendall, 6) << ',' << format_fixed(r.severity_difference, 6);
      if (with_t) {
        out << ',' << (r.t_test ? format_fixed(r.t_test->t, 6) : "") << ','
            << (r.t_test ? format_fixed(r.t_test->p, 8) : "");
      }
      out << ',' << csv_field(r.note) << '\n';
    }
    return out.str();
  }

  out << md_header(provenance);
  out << "| Dimension | ICC(C,1) | ICC(A,1) | Spearman | Kendall | SD |" << (with_t ? " T-test |" : "") << '\n';
  out << "|---|---|---|---|---|---|" << (with_t ? "---|" : "") << '\n';
  for (const auto& r : reports) {
    out << "| " << r.dimension.label() << " | " << icc_cell(r.icc_c1) << " | " << icc_cell(r.icc_a1) << " | "
        << format_fixed(r.ranks.spearman, 3, "n/a") << " | " << format_fixed(r.ranks.kendall, 3, "n/a") << " | "
        << format_fixed(r.severity_difference, 3, "n/a") << " |";
    if (with_t) out << ' ' << ttest_cell(r.t_test) << " |";
    out << '\n';
  }
  for (const auto& r : reports) {
    if (!r.note.empty()) out << "\n- " << r.dimension.label() << ": " << md_cell(r.note);
  }
  return out.str();
}

TrajectoryView build_trajectory(const std::vector<AuditMatrix>& audits, const std::vector<std::string>& order) {
  std::map<std::string, const AuditMatrix*> by_id;
  for (const auto& audit : audits) by_id[audit.model_id] = &audit;
  TrajectoryView view;
  std::vector<const AuditMatrix*> sequence;
  for (const auto& id : order) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ConfigError("UnknownModel: no audit for " + id);
    sequence.push_back(it->second);
    view.models.push_back(id);
  }
  for (Attribute identity : kIdentityAttributes) {
    TrajectoryAxis axis;
    axis.identity = identity;
    for (std::size_t s = 0; s < 4; ++s) {
      const BiasDimension dim{{identity, std::nullopt}, kSocialAttributes[s]};
      for (const AuditMatrix* audit : sequence) {
        const DimensionScore* entry = audit->find(dim);
        axis.scores[s].push_back(entry && entry->score ? std::optional<double>(entry->score->normalized)
                                                       : std::nullopt);
      }
    }
    for (std::size_t m = 0; m < sequence.size(); ++m) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t s = 0; s < 4; ++s) {
        if (axis.scores[s][m]) {
          sum += *axis.scores[s][m];
          ++count;
        }
      }
      axis.mean.push_back(count ? std::optional<double>(sum / static_cast<double>(count)) : std::nullopt);
      if (count < 4) axis.partial.push_back(view.models[m]);
    }
    view.axes.push_back(std::move(axis));
  }
  return view;
}

std::string render_trajectory(const TrajectoryView& view, const Provenance& provenance, ReportFormat format) {
  auto opt = [](const std::optional<double>& v, int decimals, std::string_view missing) {
    return v ? format_fixed(*v, decimals, missing) : std::string(missing);
  };
  if (format == ReportFormat::kJson) {
    Json doc = envelope(provenance);
    doc["models"] = view.models;
    doc["bands"] = view.bands;
    Json axes = Json::array();
    for (const auto& axis : view.axes) {
      Json item;
      item["identity"] = attribute_key(axis.identity);
      Json series = Json::object();
      for (std::size_t s = 0; s < 4; ++s) {
        Json values = Json::array();
        for (const auto& v : axis.scores[s]) values.push_back(v ? Json(*v) : Json(nullptr));
        series[std::string(attribute_key(kSocialAttributes[s]))] = values;
      }
      item["series"] = series;
      Json mean = Json::array();
      for (const auto& v : axis.mean) mean.push_back(v ? Json(*v) : Json(nullptr));
      item["mean"] = mean;
      item["mean_excludes_unscorable"] = axis.partial;
      axes.push_back(item);
    }
    doc["axes"] = axes;
    return dump(doc);
  }

  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << csv_header(provenance);
    out << "# bands " << format_fixed(view.bands[0], 6) << ' ' << format_fixed(view.bands[1], 6) << ' '
        << format_fixed(view.bands[2], 6) << '\n';
    out << "identity,series";
    for (const auto& model : view.models) out << ',' << csv_field(model);
    out << '\n';
    for (const auto& axis : view.axes) {
      for (std::size_t s = 0; s < 4; ++s) {
        out << attribute_key(axis.identity) << ',' << attribute_key(kSocialAttributes[s]);
        for (const auto& v : axis.scores[s]) out << ',' << opt(v, 6, "");
        out << '\n';
      }
      out << attribute_key(axis.identity) << ",mean";
      for (const auto& v : axis.mean) out << ',' << opt(v, 6, "");
      out << '\n';
    }
    return out.str();
  }

  out << md_header(provenance);
  out << "Severity bands at 0.333 (medium), 0.667 (high), 1.000 (very high).\n";
  for (const auto& axis : view.axes) {
    out << "\n### " << attribute_label(axis.identity) << "\n\n| Series |";
    for (const auto& model : view.models) out << ' ' << md_cell(model) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < view.models.size(); ++i) out << "---|";
    out << '\n';
    for (std::size_t s = 0; s < 4; ++s) {
      out << "| " << attribute_label(kSocialAttributes[s]) << " |";
      for (const auto& v : axis.scores[s]) out << ' ' << opt(v, 3, "n/a") << " |";
      out << '\n';
    }
    out << "| Mean |";
    for (const auto& v : axis.mean) out << ' ' << opt(v, 3, "n/a") << " |";
    out << '\n';
    if (!axis.partial.empty()) {
      out << "\nMean excludes unscorable dimensions for:";
      for (const auto& model : axis.partial) out << ' ' << md_cell(model);
      out << '\n';
    }
  }
  return out.str();
}

std::string render_heatmap_csv(const ContingencyTable& table, const Provenance& provenance) {
  const auto percentages = column_percentages(table);
  std::ostringstream out;
  out << csv_header(provenance);
  out << "identity";
  for (const auto& col : table.col_labels()) out << ',' << csv_field(col);
  out << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out << csv_field(table.row_labels()[i]);
    for (double pct : percentages[i]) out << ',' << format_fixed(pct, 4);
    out << '\n';
  }
  return out.str();
}

std::string render_top_k_csv(const std::vector<ConditionalTopK>& top, const Provenance& provenance) {
  std::ostringstream out;
  out << csv_header(provenance);
  out << "identity,rank,category,percent\n";
  for (const auto& group : top) {
    for (std::size_t i = 0; i < group.top.size(); ++i) {
      out << csv_field(group.identity) << ',' << i + 1 << ',' << csv_field(group.top[i].first) << ','
          << format_fixed(group.top[i].second, 4) << '\n';
    }
  }
  return out.str();
}

std::string render_drill_down_csv(const DrillDownView& view, const Provenance& provenance) {
  std::ostringstream out;
  out << csv_header(provenance);
  out << "attribute,category,term,count,percent\n";
  for (const auto& term : view.terms) {
    const double pct = view.total ? 100.0 * static_cast<double>(term.count) / static_cast<double>(view.total) : 0.0;
    out << attribute_key(view.attribute) << ',' << csv_field(view.category) << ',' << csv_field(term.term) << ','
        << term.count << ',' << format_fixed(pct, 2) << '\n';
  }
  return out.str();
}

std::string render_distribution_csv(const std::vector<CategoryShare>& shares, const Provenance& provenance) {
  std::ostringstream out;
  out << csv_header(provenance);
  out << "category,count,percent\n";
  for (const auto& share : shares) {
    out << csv_field(share.category) << ',' << share.count << ',' << format_fixed(share.percent, 2) << '\n';
  }
  return out.str();
}

std::string render_gap_csv(const std::vector<GapRow>& rows, const Provenance& provenance) {
  std::ostringstream out;
  out << csv_header(provenance);
  out << "model,dimension,group_a,group_b,l1_gap\n";
  for (const auto& row : rows) {
    out << csv_field(row.model) << ',' << row.dimension << ',' << csv_field(row.group_a) << ','
        << csv_field(row.group_b) << ',' << format_fixed(row.gap, 2) << '\n';
  }
  return out.str();
}

}  // namespace pba
