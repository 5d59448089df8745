#include "maskcue/metrics.h"

#include <cstdio>
#include <string>

#include "maskcue/error.h"

namespace maskcue {

long ConfusionMatrix::total() const {
  return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

long ConfusionMatrix::true_total(Label truth) const {
  const auto& row = counts[static_cast<int>(truth)];
  return row[0] + row[1];
}

ConfusionMatrix confusion(const std::vector<Label>& truth, const std::vector<Label>& predicted) {
  if (truth.size() != predicted.size()) {
    throw ValidationError("truth and prediction lists differ in length");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

std::string UarReport::formatted() const { return format_percent(uar_percent); }

UarReport uar(const ConfusionMatrix& cm) {
  for (const auto& row : cm.counts) {
    for (long c : row) {
      if (c < 0) throw ValidationError("confusion matrix has negative counts");
    }
  }
  const long n_no = cm.true_total(Label::kNoMask);
  const long n_mask = cm.true_total(Label::kMask);
  if (n_no == 0 || n_mask == 0) {
    throw ValidationError("UAR needs examples of both true classes");
  }
  const long hit_no = cm.counts[0][0];
  const long hit_mask = cm.counts[1][1];
  UarReport r;
  r.recall_no_mask = static_cast<double>(hit_no) / n_no;
  r.recall_mask = static_cast<double>(hit_mask) / n_mask;
  // 100 (a/A + b/B) / 2 = 100 (a B + b A) / (2 A B)
  const long double num = 100.0L * (static_cast<long double>(hit_no) * n_mask +
                                    static_cast<long double>(hit_mask) * n_no);
  const long double den = 2.0L * n_no * n_mask;
  r.uar_percent = static_cast<double>(num / den);
  return r;
}

std::string format_results_table(const std::vector<ResultSection>& sections) {
  constexpr int kNameWidth = 28;
  char line[128];
  const std::string rule(kNameWidth + 20, '-');
  std::string out;
  std::snprintf(line, sizeof line, "%-*s %9s %9s\n", kNameWidth, "System", "Dev", "Test");
  out += line;
  out += rule + "\n";
  const auto cell = [](const std::optional<double>& v) {
    return v ? format_percent(*v) : std::string("-");
  };
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const ResultSection& sec = sections[s];
    if (!sec.title.empty()) {
      if (s > 0) out += rule + "\n";
      out += sec.title + "\n";
    }
    for (const ResultRow& row : sec.rows) {
      std::snprintf(line, sizeof line, "%-*s %9s %9s\n", kNameWidth, row.system.c_str(),
                    cell(row.dev_uar).c_str(), cell(row.test_uar).c_str());
      out += line;
    }
  }
  return out;
}

}  // namespace maskcue
