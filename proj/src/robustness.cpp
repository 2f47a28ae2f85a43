#include "pba/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "pba/errors.hpp"
#include "pba/special_functions.hpp"

namespace pba {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_panel_shape(const ConditionPanel& panel) {
  if (panel.subject_count() < 2 || panel.condition_count() < 2) {
    throw DataError("panel " + panel.dimension.key() + " needs at least 2 models and 2 conditions");
  }
}

std::vector<double> column(const ConditionPanel& panel, std::size_t c) {
  std::vector<double> out;
  out.reserve(panel.subject_count());
  for (const auto& row : panel.values) out.push_back(row[c]);
  return out;
}

double scale_of(const std::vector<std::vector<double>>& values) {
  double scale = 0.0;
  for (const auto& row : values) {
    for (double v : row) scale = std::max(scale, std::abs(v));
  }
  return std::max(scale, 1.0);
}

// Midranks (1-based) with ties sharing the average rank.
std::vector<double> midranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = rank;
    i = j + 1;
  }
  return ranks;
}

void require_pairable(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("rank correlation needs equal-length inputs");
  if (x.size() < 2) throw DataError("rank correlation needs at least 2 observations");
}

// Sum over groups of equal values of t(t-1)/2, for a sorted range.
template <typename It, typename Eq>
std::uint64_t tied_pairs(It begin, It end, Eq equal) {
  std::uint64_t pairs = 0;
  while (begin != end) {
    It run = begin;
    std::uint64_t t = 0;
    while (run != end && equal(*run, *begin)) {
      ++run;
      ++t;
    }
    pairs += t * (t - 1) / 2;
    begin = run;
  }
  return pairs;
}

// Merge sort on y counting inversions (discordant pairs).
std::uint64_t sort_counting_swaps(std::vector<double>& y, std::vector<double>& buffer,
                                  std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = sort_counting_swaps(y, buffer, lo, mid) + sort_counting_swaps(y, buffer, mid, hi);
  std::size_t i = lo, j = mid, out = lo;
  while (i < mid && j < hi) {
    if (y[j] < y[i]) {
      swaps += mid - i;
      buffer[out++] = y[j++];
    } else {
      buffer[out++] = y[i++];
    }
  }
  while (i < mid) buffer[out++] = y[i++];
  while (j < hi) buffer[out++] = y[j++];
  std::copy(buffer.begin() + lo, buffer.begin() + hi, y.begin() + lo);
  return swaps;
}

}  // namespace

std::vector<ConditionPanel> build_panels(
    const std::vector<std::pair<std::string, std::vector<AuditMatrix>>>& conditions) {
  if (conditions.size() < 2) {
    throw ConfigError("MissingCondition: robustness analysis needs at least 2 conditions");
  }
  std::vector<std::string> subjects;
  std::set<std::string> reference;
  for (const auto& [id, audits] : conditions) {
    if (audits.empty()) throw ConfigError("MissingCondition: condition \"" + id + "\" has no audits");
    std::set<std::string> models;
    for (const auto& audit : audits) {
      if (!models.insert(audit.model_id).second) {
        throw ConfigError("model \"" + audit.model_id + "\" appears twice in condition \"" + id + "\"");
      }
    }
    if (subjects.empty()) {
      for (const auto& audit : audits) subjects.push_back(audit.model_id);
      reference = models;
    } else if (models != reference) {
      throw ConfigError("ModelSetMismatch: condition \"" + id + "\" covers a different model set");
    }
  }

  auto score_of = [&](std::size_t c, const std::string& model, const BiasDimension& dim) {
    for (const auto& audit : conditions[c].second) {
      if (audit.model_id != model) continue;
      const DimensionScore* entry = audit.find(dim);
      return entry && entry->score ? &*entry->score : static_cast<const BiasScore*>(nullptr);
    }
    return static_cast<const BiasScore*>(nullptr);
  };

  std::vector<ConditionPanel> panels;
  for (const auto& dim : standard_dimensions()) {
    ConditionPanel panel;
    panel.dimension = dim;
    for (const auto& [id, audits] : conditions) panel.conditions.push_back(id);
    for (const auto& model : subjects) {
      std::vector<double> values;
      std::vector<Severity> severities;
      for (std::size_t c = 0; c < conditions.size(); ++c) {
        const BiasScore* score = score_of(c, model, dim);
        if (score == nullptr) break;
        values.push_back(score->normalized);
        severities.push_back(score->severity);
      }
      if (values.size() != conditions.size()) {
        panel.dropped.push_back(model);
        continue;
      }
      panel.subjects.push_back(model);
      panel.values.push_back(std::move(values));
      panel.severities.push_back(std::move(severities));
    }
    panels.push_back(std::move(panel));
  }
  return panels;
}

MeanSquares two_way_mean_squares(const std::vector<std::vector<double>>& values) {
  const std::size_t n = values.size();
  const std::size_t k = n == 0 ? 0 : values.front().size();
  if (n < 2 || k < 2) throw DataError("two-way ANOVA needs at least a 2 x 2 layout");
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += values[i][j];
      col_mean[j] += values[i][j];
      grand += values[i][j];
    }
  }
  for (auto& m : row_mean) m /= static_cast<double>(k);
  for (auto& m : col_mean) m /= static_cast<double>(n);
  grand /= static_cast<double>(n * k);

  double ss_rows = 0.0, ss_cols = 0.0, ss_resid = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
  for (std::size_t j = 0; j < k; ++j) ss_cols += (col_mean[j] - grand) * (col_mean[j] - grand);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double e = values[i][j] - row_mean[i] - col_mean[j] + grand;
      ss_resid += e * e;
    }
  }
  ss_rows *= static_cast<double>(k);
  ss_cols *= static_cast<double>(n);
  const double dn = static_cast<double>(n), dk = static_cast<double>(k);
  return {ss_rows / (dn - 1.0), ss_cols / (dk - 1.0), ss_resid / ((dn - 1.0) * (dk - 1.0))};
}

Icc icc_c1(const ConditionPanel& panel) {
  require_panel_shape(panel);
  const MeanSquares ms = two_way_mean_squares(panel.values);
  const double k = static_cast<double>(panel.condition_count());
  const double denom = ms.rows + (k - 1.0) * ms.residual;
  const double scale = scale_of(panel.values);
  if (denom <= 1e-24 * scale * scale) return {1.0, true};
  return {(ms.rows - ms.residual) / denom, false};
}

Icc icc_a1(const ConditionPanel& panel) {
  require_panel_shape(panel);
  const MeanSquares ms = two_way_mean_squares(panel.values);
  const double k = static_cast<double>(panel.condition_count());
  const double n = static_cast<double>(panel.subject_count());
  const double denom = ms.rows + (k - 1.0) * ms.residual + (k / n) * (ms.columns - ms.residual);
  const double scale = scale_of(panel.values);
  if (std::abs(denom) <= 1e-24 * scale * scale) return {1.0, true};
  return {(ms.rows - ms.residual) / denom, false};
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  require_pairable(x, y);
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("spearman: constant rank vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  require_pairable(x, y);
  const std::size_t n = x.size();
  std::vector<std::pair<double, double>> pairs(n);
  for (std::size_t i = 0; i < n; ++i) pairs[i] = {x[i], y[i]};
  std::sort(pairs.begin(), pairs.end());

  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t tied_x =
      tied_pairs(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first == b.first; });
  const std::uint64_t tied_xy = tied_pairs(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a == b; });

  std::vector<double> ys(n), buffer(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = pairs[i].second;
  const std::uint64_t swaps = sort_counting_swaps(ys, buffer, 0, n);
  const std::uint64_t tied_y = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  if (tied_x == total || tied_y == total) throw ZeroVariance("kendall: all values tied");
  // concordant - discordant
  const double s = static_cast<double>(total) - static_cast<double>(tied_x) - static_cast<double>(tied_y) +
                   static_cast<double>(tied_xy) - 2.0 * static_cast<double>(swaps);
  const double denom = std::sqrt(static_cast<double>(total - tied_x) * static_cast<double>(total - tied_y));
  return std::clamp(s / denom, -1.0, 1.0);
}

RankStability panel_rank_stability(const ConditionPanel& panel) {
  if (panel.condition_count() < 2) throw DataError("rank stability needs at least 2 conditions");
  RankStability out;
  double spearman_sum = 0.0, kendall_sum = 0.0;
  for (std::size_t a = 0; a < panel.condition_count(); ++a) {
    for (std::size_t b = a + 1; b < panel.condition_count(); ++b) {
      const auto x = column(panel, a);
      const auto y = column(panel, b);
      try {
        const double rho = spearman_rho(x, y);
        const double tau = kendall_tau_b(x, y);
        spearman_sum += rho;
        kendall_sum += tau;
        ++out.pairs_used;
      } catch (const ZeroVariance&) {
        ++out.pairs_excluded;
      }
    }
  }
  if (out.pairs_used == 0) {
    out.spearman = out.kendall = kNaN;
  } else {
    out.spearman = spearman_sum / static_cast<double>(out.pairs_used);
    out.kendall = kendall_sum / static_cast<double>(out.pairs_used);
  }
  return out;
}

double severity_difference(const ConditionPanel& panel) {
  if (panel.condition_count() < 2) throw DataError("severity difference needs at least 2 conditions");
  double sum = 0.0;
  std::size_t terms = 0;
  for (const auto& row : panel.severities) {
    // consecutive conditions in declared order
    for (std::size_t c = 1; c < row.size(); ++c) {
      sum += std::abs(static_cast<int>(row[c]) - static_cast<int>(row[c - 1]));
      ++terms;
    }
  }
  return terms == 0 ? kNaN : sum / static_cast<double>(terms);
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("paired t-test needs equal-length samples");
  if (a.size() < 2) throw DataError("paired t-test needs at least 2 pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  double max_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    max_abs = std::max(max_abs, std::abs(d[i]));
  }
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd <= 1e-14 * max_abs || sd == 0.0) throw ZeroVariance("paired t-test: differences have zero variance");

  TTestResult result;
  result.df = n - 1;
  result.mean_difference = mean;
  result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  result.p = std::clamp(student_t_two_sided_p(result.t, static_cast<double>(result.df)), 0.0, 1.0);
  return result;
}

std::vector<bool> bh_fdr(const std::vector<double>& p_values, double q) {
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("bh_fdr: p-values must lie in [0, 1]");
  }
  std::vector<bool> reject(p_values.size(), false);
  if (q <= 0.0 || p_values.empty()) return reject;
  std::vector<double> sorted = p_values;
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  std::optional<double> threshold;
  for (std::size_t i = sorted.size(); i-- > 0;) {
    if (sorted[i] <= static_cast<double>(i + 1) / m * q) {
      threshold = sorted[i];
      break;
    }
  }
  if (!threshold) return reject;
  for (std::size_t i = 0; i < p_values.size(); ++i) reject[i] = p_values[i] <= *threshold;
  return reject;
}

AgreementReport agreement_report(const ConditionPanel& panel) {
  AgreementReport report;
  report.dimension = panel.dimension;
  report.subjects = panel.subject_count();
  if (!panel.dropped.empty()) {
    report.note = std::to_string(panel.dropped.size()) + " model(s) dropped as unscorable";
  }
  auto add_note = [&](const std::string& note) {
    report.note += report.note.empty() ? note : "; " + note;
  };
  if (panel.subject_count() < 2 || panel.condition_count() < 2) {
    report.icc_c1 = report.icc_a1 = {kNaN, false};
    report.ranks.spearman = report.ranks.kendall = kNaN;
    report.severity_difference = panel.condition_count() >= 2 ? severity_difference(panel) : kNaN;
    add_note("fewer than 2 scorable models");
    return report;
  }
  report.icc_c1 = icc_c1(panel);
  report.icc_a1 = icc_a1(panel);
  if (report.icc_c1.degenerate || report.icc_a1.degenerate) add_note("degenerate panel: ICC reported as 1.0");
  report.ranks = panel_rank_stability(panel);
  if (report.ranks.pairs_excluded > 0) {
    add_note(std::to_string(report.ranks.pairs_excluded) + " condition pair(s) with tied ranks excluded");
  }
  report.severity_difference = severity_difference(panel);
  if (panel.condition_count() == 2) {
    try {
      report.t_test = paired_t_test(column(panel, 0), column(panel, 1));
    } catch (const ZeroVariance&) {
      add_note("t-test undefined: zero variance");
    }
  }
  return report;
}

const PairwiseCell& SignificanceMatrix::cell(std::size_t row, std::size_t col) const {
  if (row >= col || col >= models.size()) throw DataError("significance cell must be upper-triangular");
  // Row-major upper triangle without the diagonal.
  const std::size_t m = models.size();
  const std::size_t offset = row * m - row * (row + 1) / 2 + (col - row - 1);
  return cells[offset];
}

SignificanceMatrix pairwise_model_significance(const std::vector<AuditMatrix>& audits, double q) {
  if (audits.size() < 2) throw ConfigError("pairwise comparison needs at least 2 audits");
  std::set<std::string> ids;
  for (const auto& audit : audits) {
    if (!ids.insert(audit.model_id).second) throw ConfigError("duplicate model id " + audit.model_id);
  }

  std::vector<BiasDimension> common;
  for (const auto& dim : standard_dimensions()) {
    bool everywhere = std::all_of(audits.begin(), audits.end(), [&](const AuditMatrix& audit) {
      const DimensionScore* entry = audit.find(dim);
      return entry && entry->score;
    });
    if (everywhere) common.push_back(dim);
  }
  if (common.size() < 2) throw DataError("fewer than 2 dimensions are scorable in every audit");

  std::vector<std::size_t> order(audits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (audits[a].mean_normalized != audits[b].mean_normalized) {
      return audits[a].mean_normalized < audits[b].mean_normalized;
    }
    return audits[a].model_id < audits[b].model_id;
  });

  SignificanceMatrix matrix;
  matrix.q = q;
  for (const auto& dim : common) matrix.dimensions.push_back(dim.key());
  std::vector<std::vector<double>> scores;
  for (std::size_t idx : order) {
    matrix.models.push_back(audits[idx].model_id);
    matrix.means.push_back(audits[idx].mean_normalized);
    std::vector<double> row;
    for (const auto& dim : common) row.push_back(audits[idx].find(dim)->score->normalized);
    scores.push_back(std::move(row));
  }

  std::vector<double> p_values;
  std::vector<std::size_t> tested;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = i + 1; j < scores.size(); ++j) {
      PairwiseCell cell{i, j, std::nullopt, false};
      try {
        cell.test = paired_t_test(scores[i], scores[j]);
        p_values.push_back(cell.test->p);
        tested.push_back(matrix.cells.size());
      } catch (const ZeroVariance&) {
      }
      matrix.cells.push_back(cell);
    }
  }
  const auto reject = bh_fdr(p_values, q);
  for (std::size_t t = 0; t < tested.size(); ++t) matrix.cells[tested[t]].significant = reject[t];
  return matrix;
}

}  // namespace pba
