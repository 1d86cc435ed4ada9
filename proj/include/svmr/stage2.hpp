#pragma once

// Stage 2: attention-based re-localization over boundary-matching maps.

#include "svmr/benchmark.hpp"
#include "svmr/config.hpp"
#include "svmr/maps.hpp"
#include "svmr/tensor.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace svmr {

struct Stage2Config {
  Index feature_channels = 2048;
  Index query_length = 4;
  Index reference_length = 100;  // l_r, also the map side
  Index base_hidden = 256;
  Index channels = 128;  // C
  Index samples = 32;    // N
  Index head_channels = 128;
  bool query_branch = true;
  double theta_pos = 0.6;
  double theta_neg = 0.2;
  double lambda = 10.0;
  double log_epsilon = 1e-6;

  void validate() const;
  void write(KeyValueConfig& kv) const;
  static Stage2Config read(const KeyValueConfig& kv);
};

/// C x N x L x L sampled features stored as a (C * N) x (L * L) matrix:
/// row c * N + n, column s * L + d.
struct BMFeatureMap {
  Index channels = 0;
  Index samples = 0;
  Index length = 0;
  Matrix data;

  double at(Index c, Index n, Index s, Index d) const { return data(c * samples + n, s * length + d); }
};

/// For each valid cell, N features linearly interpolated at positions
/// s + n * d / (N - 1), n = 0..N-1, spanning the first to last snippet of the
/// clip. Invalid cells are zero.
BMFeatureMap bm_sample(const Matrix& reference, Index samples);
/// Adjoint of bm_sample: scatters map gradients back onto the C x L input.
Matrix bm_sample_backward(const BMFeatureMap& grad, Index length);

/// Grid-unit intervals of `query_class` instances: seconds * L / duration.
std::vector<std::pair<double, double>> instances_to_grid(const AnnotatedVideo& video, int query_class, Index length);
LabelMap gt_label_map(const std::vector<std::pair<double, double>>& positives, Index length);

struct RlmLoss {
  double classification = 0.0;
  double regression = 0.0;
  double total = 0.0;
};

/// Balanced logistic loss on M_C (positives G > theta_pos and negatives
/// G < theta_neg, each averaged separately and summed) plus lambda times the
/// band-balanced squared error of M_R (bands G > 0.7, [0.3, 0.7], G < 0.3,
/// each averaged separately then averaged). When `grad` is given it receives
/// dL/dM_C and dL/dM_R.
RlmLoss rlm_loss(const BMScoreMaps& maps, const LabelMap& labels, const Stage2Config& config,
                 BMScoreMaps* grad = nullptr);

struct BaseOutput {
  Vector query;      // f_c, C
  Matrix reference;  // f_r, C x L
};

struct AttentionOutput {
  Matrix downsampled;   // F_r^(d), C x L^2
  RowVector attention;  // Att, L^2
  Matrix fused;         // F_r', (C * N) x L^2
};

struct Stage2Sample {
  Matrix query;      // C_o x l_q
  Matrix reference;  // C_o x l_r
  LabelMap labels;
};

class Stage2Model {
 public:
  Stage2Model(Stage2Config config, std::uint64_t seed);
  Stage2Model(Stage2Config config, ParamSet params);

  const Stage2Config& config() const { return config_; }
  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }

  BaseOutput base_module(const Matrix& query, const Matrix& reference) const;
  AttentionOutput relocalization_attention(const Vector& query, const BMFeatureMap& map) const;
  BMScoreMaps predict_maps(const Matrix& fused) const;
  BMScoreMaps forward(const Matrix& query, const Matrix& reference) const;

  Matrix prepare_query(const FeatureSequence& seq) const;
  Matrix prepare_reference(const FeatureSequence& seq) const;

  RlmLoss loss(const Stage2Sample& sample) const;
  RlmLoss loss_and_grad(const Stage2Sample& sample, ParamSet& grad, double scale = 1.0) const;

 private:
  Stage2Config config_;
  ParamSet params_;
  Matrix mask_row_;  // 1 x L^2 validity mask
};

/// Positive (query, reference) pairs: reference contains the query's class.
class Stage2PairSampler {
 public:
  Stage2PairSampler(const Corpus& corpus, QuerySplit split, const Stage2Model& model, std::uint64_t seed);
  Stage2Sample next();
  const std::vector<BuildWarning>& warnings() const { return warnings_; }

 private:
  struct Entry {
    Matrix prepared;
    int class_id;
    std::vector<std::size_t> positives;
  };
  const Corpus& corpus_;
  Index length_;
  std::vector<Entry> queries_;
  std::vector<Matrix> references_;
  std::mt19937_64 rng_;
  std::vector<BuildWarning> warnings_;
};

struct Stage2TrainConfig {
  int epochs = 10;
  int samples_per_epoch = 0;  // 0: number of training queries
  Index batch_size = 256;
  double learning_rate = 1e-4;
  int val_pairs = 200;
  double soft_nms_sigma = 0.4;
  std::uint64_t seed = 0;

  void write(KeyValueConfig& kv) const;
  static Stage2TrainConfig read(const KeyValueConfig& kv);
};

struct Stage2TrainResult {
  Stage2Model model;
  std::vector<std::pair<int, std::pair<double, double>>> history;  // epoch -> (train loss, val AUC)
  int best_epoch = 0;
  std::vector<BuildWarning> warnings;
};

Stage2TrainResult train_stage2(const Corpus& corpus, const Stage2Config& config, const Stage2TrainConfig& train);

}  // namespace svmr
