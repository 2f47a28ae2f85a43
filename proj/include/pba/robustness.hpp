#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pba/association.hpp"

namespace pba {

// Normalized scores of one bias dimension for n_s models (rows) under n_c
// conditions (columns).
struct ConditionPanel {
  BiasDimension dimension;
  std::vector<std::string> subjects;
  std::vector<std::string> conditions;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<Severity>> severities;
  // Models without a score in every condition.
  std::vector<std::string> dropped;

  std::size_t subject_count() const { return subjects.size(); }
  std::size_t condition_count() const { return conditions.size(); }
};

// One panel per standard dimension from audits grouped by condition
// (condition id -> audits). Throws ConfigError (MissingCondition /
// ModelSetMismatch) when conditions are missing or model sets differ.
std::vector<ConditionPanel> build_panels(
    const std::vector<std::pair<std::string, std::vector<AuditMatrix>>>& conditions);

struct Icc {
  double value = 0.0;
  // All values identical: reported as 1.0.
  bool degenerate = false;
};

struct MeanSquares {
  double rows = 0.0;       // between subjects
  double columns = 0.0;    // between conditions
  double residual = 0.0;
};

MeanSquares two_way_mean_squares(const std::vector<std::vector<double>>& values);

// ICC(C,1): consistency, single rater, two-way model.
Icc icc_c1(const ConditionPanel& panel);
// ICC(A,1): absolute agreement, single rater, two-way model.
Icc icc_a1(const ConditionPanel& panel);

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

struct RankStability {
  double spearman = 0.0;
  double kendall = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_excluded = 0;  // zero-variance condition pairs
};

RankStability panel_rank_stability(const ConditionPanel& panel);

// Mean |level_c - level_{c-1}| over every model and consecutive pair of
// conditions (in declared order), with small=0 ... very_high=3.
double severity_difference(const ConditionPanel& panel);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  std::size_t df = 0;
  double mean_difference = 0.0;
};

// Paired t-test on a - b.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Benjamini-Hochberg step-up. q <= 0 rejects nothing.
std::vector<bool> bh_fdr(const std::vector<double>& p_values, double q);

struct AgreementReport {
  BiasDimension dimension;
  Icc icc_c1;
  Icc icc_a1;
  RankStability ranks;
  double severity_difference = 0.0;
  std::optional<TTestResult> t_test;  // two-condition panels only
  std::size_t subjects = 0;
  std::string note;
};

AgreementReport agreement_report(const ConditionPanel& panel);

struct PairwiseCell {
  std::size_t row = 0;  // indices into SignificanceMatrix::models, row < col
  std::size_t col = 0;
  std::optional<TTestResult> test;  // empty when incomparable
  bool significant = false;
};

struct SignificanceMatrix {
  std::vector<std::string> models;  // ascending mean bias
  std::vector<double> means;
  std::vector<std::string> dimensions;  // keys of the dimensions compared
  std::vector<PairwiseCell> cells;      // upper triangle, row-major
  double q = 0.05;

  const PairwiseCell& cell(std::size_t row, std::size_t col) const;
};

SignificanceMatrix pairwise_model_significance(const std::vector<AuditMatrix>& audits,
                                               double q = 0.05);

}  // namespace pba
