#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pba/errors.hpp"
#include "pba/report.hpp"
#include "test_support.hpp"

using namespace pba;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AuditMatrix sample_audit(const std::string& id, double base) {
  AuditMatrix audit;
  audit.model_id = id;
  std::size_t i = 0;
  for (const auto& dim : standard_dimensions()) {
    DimensionScore entry{dim, std::nullopt, ""};
    if (i == 5) {
      entry.gap_reason = "degenerate table";
    } else {
      BiasScore s;
      s.raw_v = 0.01 * static_cast<double>(i) + base;
      s.df_star = 1 + i % 4;
      s.normalized = base + 0.07 * static_cast<double>(i);
      s.severity = severity_of(s.normalized);
      s.n = 10000 - i;
      s.rows = 3 + i % 3;
      s.cols = 5 + i % 2;
      entry.score = s;
    }
    audit.entries.push_back(entry);
    ++i;
  }
  audit.mean_normalized = mean_normalized(audit.entries);
  return audit;
}

Provenance sample_provenance() {
  Provenance p;
  p.inputs = {{"corpus.jsonl", std::string(64, 'a')}};
  p.config = {{"command", "audit"}, {"top_names", 50}};
  return p;
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> lines;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

TEST_CASE("audit JSON round trip") {
  const auto audit = sample_audit("gpt-x", 0.1);
  const auto json = audit_to_json(audit, sample_provenance(), {{"Ava", 30}, {"Ben", 20}});
  CHECK(json["model_id"] == "gpt-x");
  CHECK(json["scores"].size() == 16);
  CHECK(json["scored"] == 15);
  CHECK(json["name_pool"].size() == 2);

  const auto back = audit_from_json(json);
  CHECK(back.model_id == audit.model_id);
  REQUIRE(back.entries.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(back.entries[i].dimension == audit.entries[i].dimension);
    CHECK(back.entries[i].score.has_value() == audit.entries[i].score.has_value());
    if (audit.entries[i].score) {
      CHECK(back.entries[i].score->normalized == doctest::Approx(audit.entries[i].score->normalized));
      CHECK(back.entries[i].score->severity == audit.entries[i].score->severity);
      CHECK(back.entries[i].score->df_star == audit.entries[i].score->df_star);
    }
  }
  CHECK(back.mean_normalized == doctest::Approx(audit.mean_normalized));
  const auto p = provenance_from_json(json["provenance"]);
  CHECK(p.inputs.size() == 1);
  CHECK(p.config["top_names"] == 50);
}

TEST_CASE("audit file reading rejects junk") {
  const auto dir = test::scratch_dir("report-junk");
  const auto path = (dir / "bad.json").string();
  std::ofstream(path) << "{\"model_id\": 3}";
  CHECK_THROWS_AS(read_audit_file(path), DataError);
  CHECK_THROWS(read_audit_file((dir / "missing.json").string()));
}

TEST_CASE("rendering is deterministic in every format") {
  const std::vector<AuditMatrix> audits{sample_audit("b", 0.3), sample_audit("a", 0.1)};
  for (auto fmt : {ReportFormat::kJson, ReportFormat::kCsv, ReportFormat::kMarkdown}) {
    CHECK(render_combined(audits, {}, {}, sample_provenance(), fmt) ==
          render_combined(audits, {}, {}, sample_provenance(), fmt));
    CHECK(render_audit(audits[0], sample_provenance(), fmt) == render_audit(audits[0], sample_provenance(), fmt));
  }
  const auto order = order_by_mean(audits);
  CHECK(order[0]->model_id == "a");

  const auto csv = render_audit(audits[0], sample_provenance(), ReportFormat::kCsv);
  CHECK(csv.rfind("# ", 0) == 0);
  const auto md = render_audit(audits[0], sample_provenance(), ReportFormat::kMarkdown);
  CHECK(md.rfind("<!--", 0) == 0);
  CHECK(md.find("degenerate table") != std::string::npos);
}

TEST_CASE("radar CSV has 16 angles") {
  const std::vector<AuditMatrix> audits{sample_audit("a", 0.1), sample_audit("b", 0.3)};
  const auto rows = data_lines(render_radar_csv(audits, sample_provenance()));
  CHECK(rows.size() == 17);
}

TEST_CASE("format helpers") {
  CHECK(format_fixed(0.12345, 3) == "0.123");
  CHECK(format_fixed(std::nan(""), 3, "n/a") == "n/a");
  CHECK(format_from_key("md") == ReportFormat::kMarkdown);
  CHECK_FALSE(format_from_key("xml").has_value());
  CHECK(format_extension(ReportFormat::kCsv) == "csv");
}

TEST_CASE("trajectory follows the lineage order") {
  const std::vector<AuditMatrix> audits{sample_audit("v1", 0.1), sample_audit("v2", 0.5), sample_audit("v3", 0.2)};
  const auto view = build_trajectory(audits, {"v3", "v1"});
  CHECK(view.models == std::vector<std::string>{"v3", "v1"});
  REQUIRE(view.axes.size() == 4);
  const auto& name_axis = view.axes[0];
  CHECK(name_axis.identity == Attribute::kName);
  REQUIRE(name_axis.mean[0].has_value());
  CHECK(*name_axis.mean[0] == doctest::Approx(0.2 + 0.07 * 1.5));
  // index 5 (gender x education) is unscorable
  const auto& gender_axis = view.axes[1];
  CHECK_FALSE(gender_axis.scores[1][0].has_value());
  CHECK(gender_axis.partial.size() == 2);
  CHECK(view.bands[1] == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_WITH_AS(build_trajectory(audits, {"v9"}), doctest::Contains("UnknownModel"), ConfigError);
  CHECK(render_trajectory(view, sample_provenance(), ReportFormat::kCsv).find("v3") != std::string::npos);
}

TEST_CASE("heatmap rows sum to 100") {
  std::vector<std::pair<std::string, std::string>> pairs;
  const std::vector<std::string> genders{"female", "male", "non-binary"};
  const std::vector<std::string> jobs{"healthcare", "engineering", "education", "legal"};
  for (int i = 0; i < 300; ++i) pairs.push_back({genders[i % 3], jobs[(i * 7 + i / 3) % 4]});
  const auto corpus = test::corpus_from_pairs(Attribute::kGender, Attribute::kOccupation, pairs);
  const auto table = build_contingency(corpus, BiasDimension::from_key("gender:occupation"));
  const auto rows = data_lines(render_heatmap_csv(table, sample_provenance()));
  REQUIRE(rows.size() == 4);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto fields = split(rows[r]);
    double sum = 0.0;
    for (std::size_t f = 1; f < fields.size(); ++f) sum += std::stod(fields[f]);
    CHECK(sum == doctest::Approx(100.0).epsilon(1e-3));
  }
  const auto top = data_lines(render_top_k_csv(top_k_conditional(table, 2), sample_provenance()));
  CHECK(top.size() == 1 + 3 * 2);
}

TEST_CASE("gap CSV") {
  const auto csv = render_gap_csv({{"m", "gender:occupation", "female", "male", 42.5}}, sample_provenance());
  const auto rows = data_lines(csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].find("42.5") != std::string::npos);
}

TEST_CASE("agreement and significance renderings") {
  AgreementReport r;
  r.dimension = standard_dimensions()[0];
  r.icc_c1 = {0.9, false};
  r.icc_a1 = {0.8, false};
  r.ranks = {0.95, 0.9, 6, 0};
  r.severity_difference = 1.0 / 18.0;
  r.subjects = 6;
  const auto csv = render_agreement({r}, sample_provenance(), ReportFormat::kCsv);
  CHECK(csv.find("0.055556") != std::string::npos);
  const auto md = render_agreement({r}, sample_provenance(), ReportFormat::kMarkdown);
  CHECK(md.find("ICC(C,1)") != std::string::npos);

  const std::vector<AuditMatrix> audits{sample_audit("a", 0.1), sample_audit("b", 0.4), sample_audit("c", 0.4)};
  const auto m = pairwise_model_significance(audits);
  const auto sig = render_significance(m, sample_provenance(), ReportFormat::kJson);
  CHECK(Json::parse(sig)["models"].size() == 3);
}
