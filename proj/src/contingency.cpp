#include "pba/contingency.hpp"

#include <algorithm>
#include <numeric>

#include "pba/errors.hpp"

namespace pba {

ContingencyTable ContingencyTable::from_counts(std::vector<std::string> row_labels,
                                               std::vector<std::string> col_labels,
                                               const std::vector<std::vector<Count>>& counts) {
  if (counts.size() != row_labels.size()) {
    throw DataError("contingency table: row label count does not match matrix");
  }
  for (const auto& row : counts) {
    if (row.size() != col_labels.size()) {
      throw DataError("contingency table: column label count does not match matrix");
    }
  }

  std::vector<Count> row_sums(row_labels.size(), 0);
  std::vector<Count> col_sums(col_labels.size(), 0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t j = 0; j < counts[i].size(); ++j) {
      row_sums[i] += counts[i][j];
      col_sums[j] += counts[i][j];
    }
  }

  auto kept_sorted = [](const std::vector<std::string>& labels, const std::vector<Count>& sums) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (sums[i] > 0) kept.push_back(i);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
    return kept;
  };
  std::vector<std::size_t> rows = kept_sorted(row_labels, row_sums);
  std::vector<std::size_t> cols = kept_sorted(col_labels, col_sums);
  if (rows.size() < 2 || cols.size() < 2) {
    throw DegenerateTable("contingency table has " + std::to_string(rows.size()) + " row(s) and " +
                          std::to_string(cols.size()) + " column(s) after pruning");
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (row_labels[rows[i]] == row_labels[rows[i - 1]]) {
      throw DataError("contingency table: duplicate row label " + row_labels[rows[i]]);
    }
  }
  for (std::size_t j = 1; j < cols.size(); ++j) {
    if (col_labels[cols[j]] == col_labels[cols[j - 1]]) {
      throw DataError("contingency table: duplicate column label " + col_labels[cols[j]]);
    }
  }

  ContingencyTable table;
  for (std::size_t i : rows) table.row_labels_.push_back(std::move(row_labels[i]));
  for (std::size_t j : cols) table.col_labels_.push_back(std::move(col_labels[j]));
  table.counts_.reserve(rows.size() * cols.size());
  for (std::size_t i : rows) {
    for (std::size_t j : cols) table.counts_.push_back(counts[i][j]);
    table.row_totals_.push_back(row_sums[i]);
  }
  for (std::size_t j : cols) table.col_totals_.push_back(col_sums[j]);
  table.n_ = std::accumulate(table.row_totals_.begin(), table.row_totals_.end(), Count{0});
  return table;
}

std::size_t ContingencyTable::df_star() const { return std::min(rows(), cols()) - 1; }

std::size_t ContingencyTable::find_row(const std::string& label) const {
  auto it = std::lower_bound(row_labels_.begin(), row_labels_.end(), label);
  if (it == row_labels_.end() || *it != label) return rows();
  return static_cast<std::size_t>(it - row_labels_.begin());
}

}  // namespace pba
