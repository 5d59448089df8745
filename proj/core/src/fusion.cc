#include "maskcue/fusion.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include "maskcue/binary_io.h"
#include "maskcue/error.h"

namespace maskcue {

ScoreTable build_score_table(
    const std::vector<std::pair<std::string, std::vector<ScoreRecord>>>& per_system,
    const std::map<std::string, Label>& labels) {
  if (per_system.empty()) throw ValidationError("score table needs at least one system");
  ScoreTable t;
  std::set<std::string> seen_systems;
  for (const auto& [name, records] : per_system) {
    if (!seen_systems.insert(name).second) throw ValidationError("duplicate system " + name);
    t.systems.push_back(name);
  }
  const auto& first = per_system.front().second;
  std::unordered_map<std::string, int> row_of;
  for (const ScoreRecord& r : first) {
    if (!row_of.emplace(r.utt_id, static_cast<int>(t.utt_ids.size())).second) {
      throw ValidationError("duplicate utterance " + r.utt_id + " in system " + t.systems[0]);
    }
    t.utt_ids.push_back(r.utt_id);
  }
  t.scores = Matrix::Zero(t.n_utts(), t.n_systems());
  for (int s = 0; s < t.n_systems(); ++s) {
    const auto& records = per_system[s].second;
    if (static_cast<int>(records.size()) != t.n_utts()) {
      throw ValidationError("system " + t.systems[s] + " scores " + std::to_string(records.size()) +
                            " utterances, expected " + std::to_string(t.n_utts()));
    }
    std::vector<char> filled(t.n_utts(), 0);
    for (const ScoreRecord& r : records) {
      const auto it = row_of.find(r.utt_id);
      if (it == row_of.end()) {
        throw ValidationError("utterance " + r.utt_id + " missing from system " + t.systems[0]);
      }
      if (filled[it->second]) throw ValidationError("duplicate utterance " + r.utt_id);
      filled[it->second] = 1;
      t.scores(it->second, s) = r.score;
    }
  }
  t.labels.resize(t.n_utts());
  for (int i = 0; i < t.n_utts(); ++i) {
    const auto it = labels.find(t.utt_ids[i]);
    if (it != labels.end()) t.labels[i] = it->second;
  }
  return t;
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Problem {
  Matrix design;  // n x (S + 1), last column ones
  Eigen::VectorXd y;
  double l2;

  int n_systems() const { return static_cast<int>(design.cols()) - 1; }

  double objective(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd z = design * theta;
    double f = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) f += softplus(z(i)) - y(i) * z(i);
    return f + 0.5 * l2 * theta.head(n_systems()).squaredNorm();
  }
};

}  // namespace

FusionTrainResult train_fusion(const ScoreTable& dev, const FusionConfig& cfg) {
  const int n = dev.n_utts();
  const int s = dev.n_systems();
  if (s < 1) throw ValidationError("fusion needs at least one system");
  if (!(cfg.l2 > 0.0)) throw ValidationError("fusion l2 must be positive");
  if (!dev.scores.allFinite()) throw ValidationError("fusion scores are not finite");
  Problem p{Matrix(n, s + 1), Eigen::VectorXd(n), cfg.l2};
  int n_mask = 0;
  for (int i = 0; i < n; ++i) {
    if (!dev.labels[i]) throw ValidationError("fusion training row " + dev.utt_ids[i] + " has no label");
    p.y(i) = *dev.labels[i] == Label::kMask ? 1.0 : 0.0;
    n_mask += *dev.labels[i] == Label::kMask;
  }
  if (n_mask < 2 || n - n_mask < 2) {
    throw ValidationError("fusion training needs at least two utterances of each class");
  }
  p.design.leftCols(s) = dev.scores;
  p.design.col(s).setOnes();

  FusionTrainResult result;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(s + 1);
  double f = p.objective(theta);
  result.objective.push_back(f);
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd z = p.design * theta;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(s + 1);
    Matrix hess = Matrix::Zero(s + 1, s + 1);
    Eigen::VectorXd curv(n);
    for (int i = 0; i < n; ++i) {
      const double sig = sigmoid(z(i));
      grad += (sig - p.y(i)) * p.design.row(i).transpose();
      curv(i) = sig * (1.0 - sig);
    }
    hess = p.design.transpose() * curv.asDiagonal() * p.design;
    grad.head(s) += cfg.l2 * theta.head(s);
    hess.diagonal().head(s).array() += cfg.l2;
    // The bias curvature can vanish on separable data.
    hess(s, s) += 1e-12;
    const Eigen::VectorXd step = hess.ldlt().solve(-grad);
    const double slope = grad.dot(step);
    if (!(slope < 0.0)) break;
    double t = 1.0;
    double candidate = p.objective(theta + step);
    while (candidate > f + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      candidate = p.objective(theta + t * step);
    }
    if (!(candidate <= f)) break;
    theta += t * step;
    const double decrease = f - candidate;
    f = candidate;
    result.objective.push_back(f);
    if (decrease <= cfg.tol * (1.0 + std::abs(f))) break;
  }
  result.model.systems = dev.systems;
  result.model.weights = theta.head(s);
  result.model.bias = theta(s);
  return result;
}

std::vector<ScoreRecord> apply_fusion(const FusionModel& m, const ScoreTable& t) {
  if (m.weights.size() != static_cast<Eigen::Index>(m.systems.size())) {
    throw ValidationError("fusion model has mismatched weights");
  }
  std::set<std::string> model_set(m.systems.begin(), m.systems.end());
  std::set<std::string> table_set(t.systems.begin(), t.systems.end());
  if (model_set != table_set || m.systems.size() != t.systems.size()) {
    throw ValidationError("fusion systems do not match the score table systems");
  }
  std::vector<int> column(m.systems.size());
  for (std::size_t i = 0; i < m.systems.size(); ++i) {
    for (int c = 0; c < t.n_systems(); ++c) {
      if (t.systems[c] == m.systems[i]) column[i] = c;
    }
  }
  std::vector<ScoreRecord> out(t.n_utts());
  for (int r = 0; r < t.n_utts(); ++r) {
    double z = m.bias;
    for (std::size_t i = 0; i < column.size(); ++i) z += m.weights(i) * t.scores(r, column[i]);
    out[r] = ScoreRecord{t.utt_ids[r], z, decide(z)};
  }
  return out;
}

std::vector<Label> majority_vote(const std::vector<std::vector<Label>>& per_system) {
  if (per_system.empty()) throw ValidationError("majority vote needs at least one system");
  const std::size_t n = per_system.front().size();
  for (const auto& p : per_system) {
    if (p.size() != n) throw ValidationError("majority vote inputs differ in length");
  }
  std::vector<Label> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    int mask_votes = 0;
    for (const auto& p : per_system) mask_votes += p[i] == Label::kMask;
    const int no_votes = static_cast<int>(per_system.size()) - mask_votes;
    out[i] = mask_votes > no_votes ? Label::kMask : Label::kNoMask;
  }
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& where) {
  // Subnormal results set ERANGE but are exact round-trips; overflow shows up as infinity.
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ValidationError(where + ": bad number '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(line, line_no);
  }
}

}  // namespace

std::string format_scores(const std::vector<ScoreRecord>& records) {
  std::string out;
  for (const ScoreRecord& r : records) out += r.utt_id + "\t" + format_double(r.score) + "\n";
  return out;
}

std::vector<ScoreRecord> parse_scores(const std::string& text) {
  std::vector<ScoreRecord> out;
  for_each_line(text, [&](const std::string& line, int line_no) {
    const auto f = split_tabs(line);
    const std::string where = "score line " + std::to_string(line_no);
    if (f.size() != 2 || f[0].empty()) throw ValidationError(where + ": expected utt_id<TAB>score");
    const double score = parse_double(f[1], where);
    out.push_back(ScoreRecord{f[0], score, decide(score)});
  });
  return out;
}

void write_scores(const std::filesystem::path& path, const std::vector<ScoreRecord>& records) {
  io::write_file(path, format_scores(records));
}

std::vector<ScoreRecord> read_scores(const std::filesystem::path& path) {
  return parse_scores(io::read_file(path));
}

std::string format_predictions(const std::vector<std::string>& utt_ids,
                               const std::vector<Label>& labels) {
  if (utt_ids.size() != labels.size()) throw ValidationError("prediction list length mismatch");
  std::string out;
  for (std::size_t i = 0; i < utt_ids.size(); ++i) {
    out += utt_ids[i] + "\t" + std::string(label_name(labels[i])) + "\n";
  }
  return out;
}

std::vector<std::pair<std::string, Label>> parse_predictions(const std::string& text) {
  std::vector<std::pair<std::string, Label>> out;
  for_each_line(text, [&](const std::string& line, int line_no) {
    const auto f = split_tabs(line);
    if (f.size() != 2 || f[0].empty()) {
      throw ValidationError("prediction line " + std::to_string(line_no) +
                            ": expected utt_id<TAB>label");
    }
    out.emplace_back(f[0], parse_label(f[1]));
  });
  return out;
}

std::string format_fusion_model(const FusionModel& m) {
  std::string out = "bias\t" + format_double(m.bias) + "\n";
  for (std::size_t i = 0; i < m.systems.size(); ++i) {
    out += "weight\t" + m.systems[i] + "\t" + format_double(m.weights(static_cast<Eigen::Index>(i))) + "\n";
  }
  return out;
}

FusionModel parse_fusion_model(const std::string& text) {
  FusionModel m;
  bool have_bias = false;
  std::vector<double> weights;
  for_each_line(text, [&](const std::string& line, int line_no) {
    const auto f = split_tabs(line);
    const std::string where = "fusion model line " + std::to_string(line_no);
    if (f[0] == "bias" && f.size() == 2) {
      if (have_bias) throw ValidationError(where + ": duplicate bias");
      m.bias = parse_double(f[1], where);
      have_bias = true;
    } else if (f[0] == "weight" && f.size() == 3 && !f[1].empty()) {
      for (const auto& s : m.systems) {
        if (s == f[1]) throw ValidationError(where + ": duplicate system " + f[1]);
      }
      m.systems.push_back(f[1]);
      weights.push_back(parse_double(f[2], where));
    } else {
      throw ValidationError(where + ": unrecognised record");
    }
  });
  if (!have_bias) throw ValidationError("fusion model has no bias");
  if (weights.empty()) throw ValidationError("fusion model has no weights");
  m.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return m;
}

void write_fusion_model(const std::filesystem::path& path, const FusionModel& m) {
  io::write_file(path, format_fusion_model(m));
}

FusionModel read_fusion_model(const std::filesystem::path& path) {
  return parse_fusion_model(io::read_file(path));
}

}  // namespace maskcue
