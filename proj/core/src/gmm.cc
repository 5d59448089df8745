#include "maskcue/gmm.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include "maskcue/binary_io.h"
#include "maskcue/error.h"

namespace maskcue {

std::string_view label_name(Label label) {
  return label == Label::kMask ? "mask" : "no_mask";
}

Label parse_label(std::string_view text) {
  if (text == "mask") return Label::kMask;
  if (text == "no_mask") return Label::kNoMask;
  throw ValidationError("unknown label '" + std::string(text) + "'");
}

void validate(const Gmm& g) {
  const int m = g.n_components();
  if (m < 1) throw ValidationError("GMM has no components");
  if (g.means.rows() != m || g.variances.rows() != m || g.variances.cols() != g.means.cols() ||
      g.variance_floor.size() != g.means.cols()) {
    throw ValidationError("GMM parameter shapes are inconsistent");
  }
  if ((g.weights.array() < 0.0).any() || std::abs(g.weights.sum() - 1.0) > 1e-12) {
    throw ValidationError("GMM weights are not on the simplex");
  }
  if ((g.variance_floor.array() <= 0.0).any()) throw ValidationError("GMM variance floor must be positive");
  for (int k = 0; k < m; ++k) {
    if ((g.variances.row(k).transpose().array() < g.variance_floor.array()).any()) {
      throw ValidationError("GMM variance below floor");
    }
  }
  if (!g.means.allFinite() || !g.variances.allFinite()) throw ValidationError("GMM has non-finite parameters");
}

namespace {

constexpr Eigen::Index kShardRows = 4096;
constexpr double kMinFloor = 1e-12;

// Log joint densities log w_m + log N(x | mu_m, var_m), evaluated around a
// reference point so the quadratic expansion stays well conditioned.
struct Scorer {
  Eigen::RowVectorXd ref;
  // M x 2D: [-0.5 / var, (mu - ref) / var], applied to [(x - ref)^2, x - ref].
  Matrix coef;
  Eigen::RowVectorXd offset;  // M

  explicit Scorer(const Gmm& g) {
    const int m = g.n_components();
    const int d = g.dim();
    ref = (g.weights.transpose() * g.means);
    const Matrix centred = g.means.rowwise() - ref;
    const Matrix prec = g.variances.cwiseInverse();
    const Matrix mean_prec = centred.cwiseProduct(prec);
    coef.resize(m, 2 * d);
    coef.leftCols(d) = -0.5 * prec;
    coef.rightCols(d) = mean_prec;
    offset.resize(m);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (int k = 0; k < m; ++k) {
      const double quad = centred.row(k).cwiseProduct(mean_prec.row(k)).sum();
      const double logdet = g.variances.row(k).array().log().sum();
      const double logw = g.weights(k) > 0.0 ? std::log(g.weights(k))
                                             : -std::numeric_limits<double>::infinity();
      offset(k) = logw - 0.5 * (d * log2pi + logdet + quad);
    }
  }

  Matrix log_joint(const Matrix& block) const {
    const Eigen::Index d = block.cols();
    Matrix design(block.rows(), 2 * d);
    design.rightCols(d) = block.rowwise() - ref;
    design.leftCols(d) = design.rightCols(d).cwiseAbs2();
    Matrix out = design * coef.transpose();
    out.rowwise() += offset;
    return out;
  }
};

// Row-wise log-sum-exp; on return `joint` holds the posteriors.
Eigen::VectorXd normalise_rows(Matrix& joint) {
  Eigen::VectorXd lse(joint.rows());
  for (Eigen::Index r = 0; r < joint.rows(); ++r) {
    const double peak = joint.row(r).maxCoeff();
    double s = 0.0;
    for (Eigen::Index c = 0; c < joint.cols(); ++c) {
      const double e = std::exp(joint(r, c) - peak);
      joint(r, c) = e;
      s += e;
    }
    joint.row(r) /= s;
    lse(r) = peak + std::log(s);
  }
  return lse;
}

struct ShardStats {
  double ll_sum = 0.0;
  Eigen::VectorXd occupancy;  // M
  Matrix first;               // M x D
  Matrix second;              // M x D
};

ShardStats shard_stats(const Scorer& scorer, const Matrix& data, Eigen::Index begin,
                       Eigen::Index rows) {
  const Matrix block = data.middleRows(begin, rows);
  Matrix post = scorer.log_joint(block);
  const Eigen::VectorXd lse = normalise_rows(post);
  ShardStats s;
  s.ll_sum = lse.sum();
  s.occupancy = post.colwise().sum().transpose();
  const Eigen::Index d = block.cols();
  Matrix moments(block.rows(), 2 * d);
  moments.leftCols(d) = block;
  moments.rightCols(d) = block.cwiseAbs2();
  const Matrix acc = post.transpose() * moments;
  s.first = acc.leftCols(d);
  s.second = acc.rightCols(d);
  return s;
}

// Shards have a fixed size, and are reduced in index order, so the result
// does not depend on how many threads ran them.
ShardStats expectation(const Gmm& g, const Matrix& data) {
  const Scorer scorer(g);
  const Eigen::Index n = data.rows();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shards;
  for (Eigen::Index b = 0; b < n; b += kShardRows) shards.emplace_back(b, std::min(kShardRows, n - b));
  std::vector<ShardStats> parts(shards.size());
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1 || shards.size() == 1) {
    for (std::size_t i = 0; i < shards.size(); ++i) {
      parts[i] = shard_stats(scorer, data, shards[i].first, shards[i].second);
    }
  } else {
    for (std::size_t start = 0; start < shards.size(); start += workers) {
      std::vector<std::future<ShardStats>> pending;
      for (std::size_t i = start; i < std::min(shards.size(), start + workers); ++i) {
        pending.push_back(std::async(std::launch::async, shard_stats, std::cref(scorer),
                                     std::cref(data), shards[i].first, shards[i].second));
      }
      for (std::size_t i = 0; i < pending.size(); ++i) parts[start + i] = pending[i].get();
    }
  }
  ShardStats total = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    total.ll_sum += parts[i].ll_sum;
    total.occupancy += parts[i].occupancy;
    total.first += parts[i].first;
    total.second += parts[i].second;
  }
  return total;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Eigen::Index uniform_index(std::mt19937_64& rng, Eigen::Index n) {
  return static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
}

// Squared distances of every row to every centre, N x M.
Matrix squared_distances(const Matrix& data, const Matrix& centers) {
  Matrix d = -2.0 * data * centers.transpose();
  d.colwise() += data.rowwise().squaredNorm();
  d.rowwise() += centers.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

std::vector<int> assign(const Matrix& data, const Matrix& centers) {
  const Matrix d = squared_distances(data, centers);
  std::vector<int> labels(data.rows());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    Eigen::Index best;
    d.row(r).minCoeff(&best);
    labels[r] = static_cast<int>(best);
  }
  return labels;
}

Matrix kmeans_plus_plus(const Matrix& data, int m, std::mt19937_64& rng) {
  const Eigen::Index n = data.rows();
  Matrix centers(m, data.cols());
  centers.row(0) = data.row(uniform_index(rng, n));
  Eigen::VectorXd nearest = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < m; ++k) {
    const double total = nearest.sum();
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (Eigen::Index r = 0; r < n; ++r) {
        acc += nearest(r);
        if (acc > target) {
          pick = r;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
    centers.row(k) = data.row(pick);
    nearest = nearest.cwiseMin((data.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }
  return centers;
}

Gmm initial_model(const Matrix& data, const GmmConfig& cfg, const Eigen::VectorXd& floor,
                  const Eigen::RowVectorXd& global_var) {
  std::mt19937_64 rng(cfg.seed);
  const int m = cfg.n_components;
  Matrix centers = kmeans_plus_plus(data, m, rng);
  std::vector<int> labels;
  for (int it = 0; it < cfg.kmeans_iters; ++it) {
    labels = assign(data, centers);
    Matrix sums = Matrix::Zero(m, data.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(m);
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      sums.row(labels[r]) += data.row(r);
      counts(labels[r]) += 1.0;
    }
    for (int k = 0; k < m; ++k) {
      if (counts(k) > 0.0) centers.row(k) = sums.row(k) / counts(k);
    }
  }
  labels = assign(data, centers);

  Gmm g;
  g.means = centers;
  g.variances = Matrix::Zero(m, data.cols());
  g.variance_floor = floor;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(m);
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const int k = labels[r];
    counts(k) += 1.0;
    g.variances.row(k) += (data.row(r) - centers.row(k)).cwiseAbs2();
  }
  for (int k = 0; k < m; ++k) {
    if (counts(k) >= 2.0) {
      g.variances.row(k) /= counts(k);
    } else {
      g.variances.row(k) = global_var;
    }
    g.variances.row(k) = g.variances.row(k).cwiseMax(floor.transpose());
  }
  // Additive smoothing keeps every component alive at the start of EM.
  g.weights = (counts.array() + 1.0) / static_cast<double>(data.rows() + m);
  g.weights /= g.weights.sum();
  return g;
}

}  // namespace

GmmTrainResult em_train(const Matrix& data, const GmmConfig& cfg) {
  const int m = cfg.n_components;
  if (m < 1) throw ValidationError("GMM needs at least one component");
  if (data.rows() < m) {
    throw ValidationError("GMM training needs at least " + std::to_string(m) + " rows, got " +
                          std::to_string(data.rows()));
  }
  if (data.cols() < 1) throw ValidationError("GMM training data has no columns");
  if (!data.allFinite()) throw ValidationError("GMM training data is not finite");
  if (!(cfg.tol > 0.0) || cfg.max_iters < 0 || !(cfg.floor_scale > 0.0)) {
    throw ValidationError("GMM config needs tol > 0, max_iters >= 0, floor_scale > 0");
  }

  const double n = static_cast<double>(data.rows());
  const Eigen::RowVectorXd origin = data.colwise().mean();
  const Matrix centred = data.rowwise() - origin;
  const Eigen::RowVectorXd global_var = centred.cwiseAbs2().colwise().mean();
  const Eigen::VectorXd floor = (cfg.floor_scale * global_var.transpose()).cwiseMax(kMinFloor);

  GmmTrainResult result;
  Gmm g = initial_model(centred, cfg, floor, global_var);
  for (int it = 0;; ++it) {
    ShardStats stats = expectation(g, centred);
    const double ll = stats.ll_sum / n;
    result.log_likelihood.push_back(ll);
    if (it > 0 && ll - result.log_likelihood[it - 1] < cfg.tol) {
      result.converged = true;
      break;
    }
    if (it == cfg.max_iters) break;

    for (int k = 0; k < m; ++k) {
      const double occ = stats.occupancy(k);
      g.weights(k) = occ / n;
      if (occ <= 0.0) continue;  // dead component keeps its last mean/variance
      const Eigen::RowVectorXd mean = stats.first.row(k) / occ;
      const Eigen::RowVectorXd var = stats.second.row(k) / occ - mean.cwiseAbs2();
      g.means.row(k) = mean;
      g.variances.row(k) = var.cwiseMax(floor.transpose());
    }
    g.weights /= g.weights.sum();
    ++result.iterations;
  }
  g.means.rowwise() += origin;
  result.model = std::move(g);
  return result;
}

Eigen::VectorXd frame_log_likelihoods(const Gmm& g, const Matrix& frames) {
  if (frames.cols() != g.dim()) {
    throw ValidationError("feature dimension " + std::to_string(frames.cols()) +
                          " does not match model dimension " + std::to_string(g.dim()));
  }
  const Scorer scorer(g);
  Eigen::VectorXd out(frames.rows());
  for (Eigen::Index b = 0; b < frames.rows(); b += kShardRows) {
    const Eigen::Index rows = std::min(kShardRows, frames.rows() - b);
    Matrix joint = scorer.log_joint(frames.middleRows(b, rows));
    out.segment(b, rows) = normalise_rows(joint);
  }
  return out;
}

double avg_log_likelihood(const Gmm& g, const Matrix& frames) {
  if (frames.rows() == 0) throw ValidationError("no frames to score");
  return frame_log_likelihoods(g, frames).mean();
}

double avg_log_likelihood(const Gmm& g, const FeatureMatrix& f) {
  return avg_log_likelihood(g, f.values);
}

ScoreRecord classify(const ClassModels& models, const FeatureMatrix& f, std::string utt_id) {
  if (models.kind != f.kind) {
    throw ValidationError("models trained on " + std::string(feature_kind_name(models.kind)) +
                          " cannot score " + std::string(feature_kind_name(f.kind)) + " features");
  }
  if (models.mask.dim() != models.no_mask.dim()) {
    throw ValidationError("mask and no-mask models have different dimensions");
  }
  ScoreRecord rec;
  rec.utt_id = std::move(utt_id);
  rec.score = avg_log_likelihood(models.mask, f) - avg_log_likelihood(models.no_mask, f);
  if (!std::isfinite(rec.score)) throw ValidationError("non-finite score for " + rec.utt_id);
  rec.predicted = decide(rec.score);
  return rec;
}

namespace {

constexpr std::string_view kModelMagic = "MCGMM001";

void put_gmm(std::string& out, const Gmm& g) {
  for (Eigen::Index k = 0; k < g.weights.size(); ++k) io::put<double>(out, g.weights(k));
  for (Eigen::Index k = 0; k < g.means.rows(); ++k) {
    for (Eigen::Index d = 0; d < g.means.cols(); ++d) io::put<double>(out, g.means(k, d));
  }
  for (Eigen::Index k = 0; k < g.variances.rows(); ++k) {
    for (Eigen::Index d = 0; d < g.variances.cols(); ++d) io::put<double>(out, g.variances(k, d));
  }
  for (Eigen::Index d = 0; d < g.variance_floor.size(); ++d) io::put<double>(out, g.variance_floor(d));
}

Gmm get_gmm(io::Reader& in, std::uint32_t m, std::uint32_t d) {
  Gmm g;
  g.weights.resize(m);
  g.means.resize(m, d);
  g.variances.resize(m, d);
  g.variance_floor.resize(d);
  for (std::uint32_t k = 0; k < m; ++k) g.weights(k) = in.get<double>();
  for (std::uint32_t k = 0; k < m; ++k) {
    for (std::uint32_t j = 0; j < d; ++j) g.means(k, j) = in.get<double>();
  }
  for (std::uint32_t k = 0; k < m; ++k) {
    for (std::uint32_t j = 0; j < d; ++j) g.variances(k, j) = in.get<double>();
  }
  for (std::uint32_t j = 0; j < d; ++j) g.variance_floor(j) = in.get<double>();
  return g;
}

}  // namespace

std::string encode_models(const ClassModels& m) {
  if (m.mask.n_components() != m.no_mask.n_components() || m.mask.dim() != m.no_mask.dim()) {
    throw ValidationError("mask and no-mask models must share M and D");
  }
  std::string out;
  out.append(kModelMagic);
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.kind));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.mask.n_components()));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.mask.dim()));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.fingerprint.size()));
  io::put<double>(out, m.floor_scale);
  io::put<std::uint64_t>(out, m.seed);
  out.append(m.fingerprint);
  put_gmm(out, m.mask);
  put_gmm(out, m.no_mask);
  return out;
}

ClassModels decode_models(const std::string& bytes) {
  io::Reader in(bytes, "model file");
  if (in.take(kModelMagic.size()) != kModelMagic) throw ValidationError("model file: bad magic");
  ClassModels m;
  const auto kind = in.get<std::uint32_t>();
  if (kind > 3) throw ValidationError("model file: unknown feature kind");
  m.kind = static_cast<FeatureKind>(kind);
  const auto n_comp = in.get<std::uint32_t>();
  const auto dim = in.get<std::uint32_t>();
  const auto fp_len = in.get<std::uint32_t>();
  m.floor_scale = in.get<double>();
  m.seed = in.get<std::uint64_t>();
  m.fingerprint = std::string(in.take(fp_len));
  m.mask = get_gmm(in, n_comp, dim);
  m.no_mask = get_gmm(in, n_comp, dim);
  if (!in.done()) throw ValidationError("model file: trailing bytes");
  return m;
}

void write_models(const std::filesystem::path& path, const ClassModels& m) {
  io::write_file(path, encode_models(m));
}

ClassModels read_models(const std::filesystem::path& path) {
  return decode_models(io::read_file(path));
}

}  // namespace maskcue
