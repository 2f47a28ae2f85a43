#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pba {

// Labeled r x k count matrix. Construction prunes all-zero rows and
// columns, sorts both label sets lexicographically and rejects tables with
// fewer than two rows or columns (DegenerateTable).
class ContingencyTable {
 public:
  using Count = std::uint64_t;

  static ContingencyTable from_counts(std::vector<std::string> row_labels,
                                      std::vector<std::string> col_labels,
                                      const std::vector<std::vector<Count>>& counts);

  const std::vector<std::string>& row_labels() const { return row_labels_; }
  const std::vector<std::string>& col_labels() const { return col_labels_; }
  std::size_t rows() const { return row_labels_.size(); }
  std::size_t cols() const { return col_labels_.size(); }
  Count count(std::size_t row, std::size_t col) const { return counts_[row * cols() + col]; }
  Count row_total(std::size_t row) const { return row_totals_[row]; }
  Count col_total(std::size_t col) const { return col_totals_[col]; }
  Count n() const { return n_; }
  // min(r - 1, k - 1)
  std::size_t df_star() const;

  // Index of a row label, or rows() when absent.
  std::size_t find_row(const std::string& label) const;

 private:
  std::vector<std::string> row_labels_;
  std::vector<std::string> col_labels_;
  std::vector<Count> counts_;
  std::vector<Count> row_totals_;
  std::vector<Count> col_totals_;
  Count n_ = 0;
};

}  // namespace pba
