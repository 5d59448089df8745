// Diagonal-covariance Gaussian mixture models trained by EM, one per class,
// and the higher-likelihood decision rule between the mask and no-mask models.

#ifndef MASKCUE_GMM_H_
#define MASKCUE_GMM_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maskcue/features.h"
#include "maskcue/label.h"
#include "maskcue/signal.h"

namespace maskcue {

struct Gmm {
  Eigen::VectorXd weights;         // M, sums to 1
  Matrix means;                    // M x D
  Matrix variances;                // M x D, >= variance_floor per column
  Eigen::VectorXd variance_floor;  // D

  int n_components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }
};

/// Checks shapes, the weight simplex (1e-12) and the variance floor.
void validate(const Gmm& g);

struct GmmConfig {
  int n_components = 512;
  std::uint64_t seed = 20200917;
  int max_iters = 100;
  double tol = 1e-5;           // minimum per-frame log-likelihood gain
  double floor_scale = 1e-3;   // floor = floor_scale * global per-dim variance
  int kmeans_iters = 10;
};

struct GmmTrainResult {
  Gmm model;
  /// Per-frame average log-likelihood of the parameters entering each EM
  /// iteration; the last entry belongs to the returned model.
  std::vector<double> log_likelihood;
  int iterations = 0;  // M-steps performed
  bool converged = false;
};

/// k-means++ seeding, kmeans_iters Lloyd iterations, then EM with the
/// variance floor applied in every M-step. Throws ValidationError when there
/// are fewer rows than components or the data is not finite.
GmmTrainResult em_train(const Matrix& data, const GmmConfig& cfg);

/// log sum_m w_m N(x | mu_m, diag var_m) for every row.
Eigen::VectorXd frame_log_likelihoods(const Gmm& g, const Matrix& frames);
double avg_log_likelihood(const Gmm& g, const Matrix& frames);
double avg_log_likelihood(const Gmm& g, const FeatureMatrix& f);

struct ClassModels {
  Gmm mask;
  Gmm no_mask;
  FeatureKind kind = FeatureKind::kLfcc;
  double floor_scale = 1e-3;
  std::uint64_t seed = 0;
  std::string fingerprint;
};

struct ScoreRecord {
  std::string utt_id;
  double score = 0.0;  // avg ll(mask) - avg ll(no_mask)
  Label predicted = Label::kNoMask;
};

ScoreRecord classify(const ClassModels& models, const FeatureMatrix& f,
                     std::string utt_id = {});

// Model container, little-endian:
//   "MCGMM001", u32 kind, u32 M, u32 D, u32 fingerprint bytes,
//   f64 floor_scale, u64 seed, fingerprint,
//   then for mask and no_mask: weights[M], means[M*D], variances[M*D], floor[D].
std::string encode_models(const ClassModels& m);
ClassModels decode_models(const std::string& bytes);
void write_models(const std::filesystem::path& path, const ClassModels& m);
ClassModels read_models(const std::filesystem::path& path);

}  // namespace maskcue

#endif  // MASKCUE_GMM_H_
