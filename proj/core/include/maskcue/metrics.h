// Confusion matrices, unweighted average recall and the results table.

#ifndef MASKCUE_METRICS_H_
#define MASKCUE_METRICS_H_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "maskcue/label.h"

namespace maskcue {

struct ConfusionMatrix {
  // counts[true][predicted], indexed by Label (no_mask = 0, mask = 1).
  std::array<std::array<long, 2>, 2> counts{};

  void add(Label truth, Label predicted) {
    ++counts[static_cast<int>(truth)][static_cast<int>(predicted)];
  }
  long total() const;
  long true_total(Label truth) const;
};

ConfusionMatrix confusion(const std::vector<Label>& truth, const std::vector<Label>& predicted);

struct UarReport {
  double recall_no_mask = 0.0;
  double recall_mask = 0.0;
  double uar_percent = 0.0;

  /// Two decimals, e.g. "70.00".
  std::string formatted() const;
};

/// Throws ValidationError when either true class is empty or a count is
/// negative. The percentage is formed from integer counts in one division.
UarReport uar(const ConfusionMatrix& cm);

std::string format_percent(double value);

struct ResultRow {
  std::string system;
  std::optional<double> dev_uar;
  std::optional<double> test_uar;
};

struct ResultSection {
  std::string title;  // empty for the leading block
  std::vector<ResultRow> rows;
};

/// Fixed-width UAR table with Dev/Test columns; missing values print as "-".
std::string format_results_table(const std::vector<ResultSection>& sections);

}  // namespace maskcue

#endif  // MASKCUE_METRICS_H_
