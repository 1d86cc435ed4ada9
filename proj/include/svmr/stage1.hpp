#pragma once

// Stage 1: two-branch concept-wise temporal auto-encoder producing a query
// embedding (d_e) and a reference embedding (d_e x T_emb), scored by maximum
// cosine similarity.

#include "svmr/benchmark.hpp"
#include "svmr/config.hpp"
#include "svmr/tensor.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace svmr {

struct Stage1Config {
  Index feature_channels = 2048;
  Index query_length = 4;
  Index reference_length = 100;
  Index embed_dim = 512;
  Index ref_slots = 4;  // T_emb
  std::vector<Index> ctc_filters{1, 32, 1};
  double lambda = 2.0;
  double positive_coverage = 0.5;

  void validate() const;
  void write(KeyValueConfig& kv) const;
  static Stage1Config read(const KeyValueConfig& kv);
};

/// Cosine similarity; 0 when either vector is zero.
double cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

/// Max over columns of cosine(e_q, e_r[:, i]). Throws on a zero query.
double max_cos_similarity(const Vector& query, const Matrix& reference);

/// +1 for window i when instances of `query_class` cover at least `coverage`
/// of [i D / slots, (i + 1) D / slots], else -1.
Vector make_similarity_label(const AnnotatedVideo& video, int query_class, Index slots, double coverage = 0.5);

double recon_loss(const Matrix& f, const Matrix& reconstructed);
double similarity_loss(const Vector& query, const Matrix& reference, const Vector& label);

struct Stage1Loss {
  double recon_query = 0.0;
  double recon_reference = 0.0;
  double similarity = 0.0;
  double total = 0.0;
};

struct EmbeddingPair {
  Vector query;
  Matrix reference;
};

struct Stage1Sample {
  Matrix query;      // C_o x l_q
  Matrix reference;  // C_o x l_r
  Vector label;      // T_emb entries of +-1
};

class Stage1Model {
 public:
  Stage1Model(Stage1Config config, std::uint64_t seed);
  Stage1Model(Stage1Config config, ParamSet params);

  const Stage1Config& config() const { return config_; }
  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }

  Vector encode_query(const Matrix& query) const;
  Matrix encode_reference(const Matrix& reference) const;
  Matrix decode_query(const Vector& embedding) const;
  Matrix decode_reference(const Matrix& embedding) const;
  EmbeddingPair embed(const Stage1Sample& sample) const;

  /// Resizes a raw feature sequence to the branch's input length.
  Matrix prepare_query(const FeatureSequence& seq) const;
  Matrix prepare_reference(const FeatureSequence& seq) const;

  Stage1Loss loss(const Stage1Sample& sample) const;
  /// Loss of one sample; its gradient is added to `grad` scaled by `scale`.
  Stage1Loss loss_and_grad(const Stage1Sample& sample, ParamSet& grad, double scale = 1.0) const;

 private:
  Stage1Config config_;
  ParamSet params_;
};

/// Draws (query, reference, label) triples: the query uniformly from one split,
/// the reference positive with probability 0.5.
class Stage1PairSampler {
 public:
  Stage1PairSampler(const Corpus& corpus, QuerySplit split, const Stage1Model& model, std::uint64_t seed);

  Stage1Sample next();
  /// Identity of the last drawn pair.
  const std::string& last_query() const { return last_query_; }
  const std::string& last_reference() const { return last_reference_; }
  bool last_positive() const { return last_positive_; }
  const std::vector<BuildWarning>& warnings() const { return warnings_; }
  std::size_t eligible_queries() const { return queries_.size(); }

 private:
  struct Entry {
    const QueryClip* query;
    Matrix prepared;
    std::vector<std::size_t> positives, negatives;
  };
  const Corpus& corpus_;
  std::vector<Entry> queries_;
  std::vector<Matrix> references_;
  Index slots_;
  double coverage_;
  std::mt19937_64 rng_;
  std::vector<BuildWarning> warnings_;
  std::string last_query_, last_reference_;
  bool last_positive_ = false;
};

struct Stage1TrainConfig {
  int epochs = 10;
  int samples_per_epoch = 0;  // 0: one pass worth of training queries
  Index batch_size = 256;
  double learning_rate = 1e-4;
  int val_pairs = 256;
  std::uint64_t seed = 0;

  void write(KeyValueConfig& kv) const;
  static Stage1TrainConfig read(const KeyValueConfig& kv);
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
};

struct Stage1TrainResult {
  Stage1Model model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  std::vector<BuildWarning> warnings;
};

Stage1TrainResult train_stage1(const Corpus& corpus, const Stage1Config& config, const Stage1TrainConfig& train);

/// Mean loss of `model` over a fixed stream of pairs drawn from `split`.
double stage1_eval_loss(const Stage1Model& model, const Corpus& corpus, QuerySplit split, int pairs,
                        std::uint64_t seed);

}  // namespace svmr
