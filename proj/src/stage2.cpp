#include "svmr/stage2.hpp"

#include "svmr/adam.hpp"
#include "svmr/error.hpp"
#include "svmr/metrics.hpp"
#include "svmr/ops.hpp"
#include "svmr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace svmr {
namespace {

using nn::Activation;

struct Stage2Trace {
  Matrix q0, q1, q2;  // query input and base outputs
  Matrix r0, r1, r2;  // reference input and base outputs (r2 = f_r)
  Vector fc;
  BMFeatureMap map;
  AttentionOutput att;
  Matrix h1, h2, logits, out;  // head activations; out = masked sigmoid
};

void apply_mask(Matrix& m, const Matrix& mask_row) { m.array().rowwise() *= mask_row.row(0).array(); }

// Fused map from attention weights: row c * N + n scaled by Att[j] * f_c[c].
Matrix fuse(const Matrix& map, const RowVector& att, const Vector& fc, Index samples) {
  Matrix out = map;
  out.array().rowwise() *= att.array();
  for (Index r = 0; r < out.rows(); ++r) out.row(r) *= fc[r / samples];
  return out;
}

}  // namespace

Matrix bm_mask(Index length) {
  Matrix m = Matrix::Zero(length, length);
  for (Index s = 0; s < length; ++s)
    for (Index d = 0; d < length; ++d)
      if (bm_valid(s, d, length)) m(s, d) = 1.0;
  return m;
}

void Stage2Config::validate() const {
  if (feature_channels < 1 || query_length < 1 || reference_length < 1)
    config_error("stage2: feature_channels, query_length, reference_length must be >= 1");
  if (base_hidden < 1 || channels < 1 || head_channels < 1) config_error("stage2: layer widths must be >= 1");
  if (samples < 2) config_error("stage2: samples (N) must be >= 2");
  if (!(theta_neg <= theta_pos)) config_error("stage2: theta_neg must not exceed theta_pos");
  if (!(lambda >= 0)) config_error("stage2: lambda must be >= 0");
  if (!(log_epsilon > 0 && log_epsilon < 0.5)) config_error("stage2: log_epsilon must lie in (0, 0.5)");
}

void Stage2Config::write(KeyValueConfig& kv) const {
  kv.set("stage2.feature_channels", std::to_string(feature_channels));
  kv.set("stage2.query_length", std::to_string(query_length));
  kv.set("stage2.reference_length", std::to_string(reference_length));
  kv.set("stage2.base_hidden", std::to_string(base_hidden));
  kv.set("stage2.channels", std::to_string(channels));
  kv.set("stage2.samples", std::to_string(samples));
  kv.set("stage2.head_channels", std::to_string(head_channels));
  kv.set("stage2.query_branch", query_branch ? "true" : "false");
  kv.set("stage2.theta_pos", std::to_string(theta_pos));
  kv.set("stage2.theta_neg", std::to_string(theta_neg));
  kv.set("stage2.lambda", std::to_string(lambda));
}

Stage2Config Stage2Config::read(const KeyValueConfig& kv) {
  Stage2Config c;
  c.feature_channels = kv.get_int("stage2.feature_channels", c.feature_channels);
  c.query_length = kv.get_int("stage2.query_length", c.query_length);
  c.reference_length = kv.get_int("stage2.reference_length", c.reference_length);
  c.base_hidden = kv.get_int("stage2.base_hidden", c.base_hidden);
  c.channels = kv.get_int("stage2.channels", c.channels);
  c.samples = kv.get_int("stage2.samples", c.samples);
  c.head_channels = kv.get_int("stage2.head_channels", c.head_channels);
  c.query_branch = kv.get_bool("stage2.query_branch", c.query_branch);
  c.theta_pos = kv.get_double("stage2.theta_pos", c.theta_pos);
  c.theta_neg = kv.get_double("stage2.theta_neg", c.theta_neg);
  c.lambda = kv.get_double("stage2.lambda", c.lambda);
  c.validate();
  return c;
}

BMFeatureMap bm_sample(const Matrix& reference, Index samples) {
  if (samples < 2) data_error("bm_sample: N must be >= 2");
  const Index C = reference.rows(), L = reference.cols();
  BMFeatureMap map{C, samples, L, Matrix::Zero(C * samples, L * L)};
  for (Index s = 0; s < L; ++s)
    for (Index d = 0; s + d + 1 <= L; ++d) {
      const Index col = s * L + d;
      for (Index n = 0; n < samples; ++n) {
        const double pos = static_cast<double>(s) +
                           static_cast<double>(n) * static_cast<double>(d) / static_cast<double>(samples - 1);
        const auto lo = std::min<Index>(static_cast<Index>(std::floor(pos)), L - 1);
        const double frac = pos - static_cast<double>(lo);
        const Index hi = std::min(lo + 1, L - 1);
        for (Index c = 0; c < C; ++c)
          map.data(c * samples + n, col) = (1.0 - frac) * reference(c, lo) + frac * reference(c, hi);
      }
    }
  return map;
}

Matrix bm_sample_backward(const BMFeatureMap& grad, Index length) {
  const Index C = grad.channels, N = grad.samples, L = length;
  Matrix dx = Matrix::Zero(C, L);
  for (Index s = 0; s < L; ++s)
    for (Index d = 0; s + d + 1 <= L; ++d) {
      const Index col = s * L + d;
      for (Index n = 0; n < N; ++n) {
        const double pos =
            static_cast<double>(s) + static_cast<double>(n) * static_cast<double>(d) / static_cast<double>(N - 1);
        const auto lo = std::min<Index>(static_cast<Index>(std::floor(pos)), L - 1);
        const double frac = pos - static_cast<double>(lo);
        const Index hi = std::min(lo + 1, L - 1);
        for (Index c = 0; c < C; ++c) {
          const double g = grad.data(c * N + n, col);
          dx(c, lo) += (1.0 - frac) * g;
          dx(c, hi) += frac * g;
        }
      }
    }
  return dx;
}

std::vector<std::pair<double, double>> instances_to_grid(const AnnotatedVideo& video, int query_class, Index length) {
  std::vector<std::pair<double, double>> out;
  const double scale = static_cast<double>(length) / video.duration();
  for (const auto& inst : video.instances)
    if (inst.class_id == query_class) out.emplace_back(inst.t_start * scale, inst.t_end * scale);
  return out;
}

LabelMap gt_label_map(const std::vector<std::pair<double, double>>& positives, Index length) {
  LabelMap g{Matrix::Zero(length, length)};
  for (Index s = 0; s < length; ++s)
    for (Index d = 0; s + d + 1 <= length; ++d) {
      double best = 0.0;
      for (const auto& [a, b] : positives)
        best = std::max(best, tiou({static_cast<double>(s), static_cast<double>(s + d + 1)}, {a, b}));
      g.iou(s, d) = best;
    }
  return g;
}

RlmLoss rlm_loss(const BMScoreMaps& maps, const LabelMap& labels, const Stage2Config& config, BMScoreMaps* grad) {
  const Index L = labels.length();
  if (maps.classification.rows() != L || maps.classification.cols() != L || maps.regression.rows() != L ||
      maps.regression.cols() != L || labels.iou.cols() != L)
    data_error("rlm_loss: map shapes differ from the label map");
  if (grad) {
    grad->classification = Matrix::Zero(L, L);
    grad->regression = Matrix::Zero(L, L);
  }
  const double eps = config.log_epsilon;
  Index n_pos = 0, n_neg = 0;
  Index band_count[3] = {0, 0, 0};
  auto band_of = [](double g) { return g > 0.7 ? 0 : (g >= 0.3 ? 1 : 2); };
  for (Index s = 0; s < L; ++s)
    for (Index d = 0; s + d + 1 <= L; ++d) {
      const double g = labels.iou(s, d);
      if (g > config.theta_pos) ++n_pos;
      if (g < config.theta_neg) ++n_neg;
      ++band_count[band_of(g)];
    }
  const int bands_used = (band_count[0] > 0) + (band_count[1] > 0) + (band_count[2] > 0);

  RlmLoss loss;
  for (Index s = 0; s < L; ++s)
    for (Index d = 0; s + d + 1 <= L; ++d) {
      const double g = labels.iou(s, d);
      const double pc = maps.classification(s, d);
      if (g > config.theta_pos) {
        const double w = 1.0 / static_cast<double>(n_pos);
        loss.classification -= w * std::log(std::max(pc, eps));
        if (grad && pc > eps) grad->classification(s, d) -= w / pc;
      } else if (g < config.theta_neg) {
        const double w = 1.0 / static_cast<double>(n_neg);
        loss.classification -= w * std::log(std::max(1.0 - pc, eps));
        if (grad && 1.0 - pc > eps) grad->classification(s, d) += w / (1.0 - pc);
      }
      const int b = band_of(g);
      const double w = 1.0 / (static_cast<double>(bands_used) * static_cast<double>(band_count[b]));
      const double diff = maps.regression(s, d) - g;
      loss.regression += w * diff * diff;
      if (grad) grad->regression(s, d) += config.lambda * w * 2.0 * diff;
    }
  loss.total = loss.classification + config.lambda * loss.regression;
  return loss;
}

Stage2Model::Stage2Model(Stage2Config config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const Index C = config_.channels, N = config_.samples, L = config_.reference_length;
  std::mt19937_64 rng(seed);
  params_.init_seed = seed;
  nn::dirac_init(params_.add("base.conv0.w", config_.base_hidden, 3 * config_.feature_channels), 0.1, rng);
  params_.add("base.conv0.b", config_.base_hidden, 1);
  nn::dirac_init(params_.add("base.conv1.w", C, 3 * config_.base_hidden), 0.1, rng);
  params_.add("base.conv1.b", C, 1);
  // Attention and head start as a channel-wise query/candidate correlation.
  const Index H = config_.head_channels;
  Matrix& down = params_.add("rlm.down.w", C, C * N);
  for (Index c = 0; c < C; ++c)
    for (Index n = 0; n < N; ++n) down(c, c * N + n) = 1.0 / static_cast<double>(N);
  params_.add("rlm.down.b", C, 1);
  Matrix& reduce = params_.add("head.reduce.w", H, C * N);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < reduce.size(); ++i)
    reduce.data()[i] = (1.0 + 0.5 * normal(rng)) / static_cast<double>(C * N);
  params_.add("head.reduce.b", H, 1);
  Matrix& conv = params_.add("head.conv.w", H, 9 * H);
  nn::kaiming_uniform(conv, 9 * H, rng);
  conv *= 0.1;
  for (Index k = 0; k < H; ++k) conv(k, k * 9 + 4) += 1.0;
  params_.add("head.conv.b", H, 1);
  params_.add("head.out.w", 2, H).setConstant(10.0 / static_cast<double>(H));
  params_.add("head.out.b", 2, 1).setConstant(-2.0);
  mask_row_ = Eigen::Map<const Matrix>(bm_mask(L).data(), 1, L * L);
}

Stage2Model::Stage2Model(Stage2Config config, ParamSet params) : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const Stage2Model reference(config_, 0);
  if (!same_shapes(reference.params_, params_)) data_error("stage2 parameters do not match the configured shapes");
  mask_row_ = reference.mask_row_;
}

Matrix Stage2Model::prepare_query(const FeatureSequence& seq) const {
  return nn::linear_resize(seq.data, config_.query_length);
}

Matrix Stage2Model::prepare_reference(const FeatureSequence& seq) const {
  return nn::linear_resize(seq.data, config_.reference_length);
}

BaseOutput Stage2Model::base_module(const Matrix& query, const Matrix& reference) const {
  for (const Matrix* m : {&query, &reference})
    if (m->rows() != config_.feature_channels)
      data_error("stage2 base module: expected " + std::to_string(config_.feature_channels) + " channels, got " +
                 std::to_string(m->rows()));
  if (reference.cols() != config_.reference_length)
    data_error("stage2 base module: reference length must be " + std::to_string(config_.reference_length));
  const auto& p = params_;
  auto run = [&](const Matrix& x) {
    const Matrix h = nn::temporal_conv1d(x, p.at("base.conv0.w"), p.at("base.conv0.b"), Activation::Relu);
    return nn::temporal_conv1d(h, p.at("base.conv1.w"), p.at("base.conv1.b"), Activation::Relu);
  };
  return {run(query).rowwise().mean(), run(reference)};
}

AttentionOutput Stage2Model::relocalization_attention(const Vector& query, const BMFeatureMap& map) const {
  if (query.size() != map.channels) data_error("relocalization_attention: query has wrong channel count");
  AttentionOutput out;
  out.downsampled = nn::pointwise_conv(map.data, params_.at("rlm.down.w"), params_.at("rlm.down.b"),
                                       Activation::Linear);
  out.attention = nn::sigmoid(query.transpose() * out.downsampled);
  out.fused = fuse(map.data, out.attention, query, map.samples);
  return out;
}

BMScoreMaps Stage2Model::predict_maps(const Matrix& fused) const {
  const Index L = config_.reference_length;
  Matrix h1 = nn::pointwise_conv(fused, params_.at("head.reduce.w"), params_.at("head.reduce.b"), Activation::Relu);
  apply_mask(h1, mask_row_);
  Matrix h2 = nn::conv2d_3x3(h1, L, L, params_.at("head.conv.w"), params_.at("head.conv.b"), Activation::Relu);
  apply_mask(h2, mask_row_);
  Matrix out = nn::sigmoid(nn::pointwise_conv(h2, params_.at("head.out.w"), params_.at("head.out.b"),
                                              Activation::Linear));
  apply_mask(out, mask_row_);
  BMScoreMaps maps;
  maps.classification = Eigen::Map<const Matrix>(out.row(0).data(), L, L);
  maps.regression = Eigen::Map<const Matrix>(out.row(1).data(), L, L);
  return maps;
}

BMScoreMaps Stage2Model::forward(const Matrix& query, const Matrix& reference) const {
  const BaseOutput base = base_module(query, reference);
  const BMFeatureMap map = bm_sample(base.reference, config_.samples);
  if (!config_.query_branch) return predict_maps(map.data);
  return predict_maps(relocalization_attention(base.query, map).fused);
}

RlmLoss Stage2Model::loss(const Stage2Sample& sample) const {
  return rlm_loss(forward(sample.query, sample.reference), sample.labels, config_);
}

RlmLoss Stage2Model::loss_and_grad(const Stage2Sample& sample, ParamSet& g, double scale) const {
  const auto& p = params_;
  const Index L = config_.reference_length, N = config_.samples;
  if (sample.query.rows() != config_.feature_channels || sample.reference.rows() != config_.feature_channels ||
      sample.reference.cols() != L)
    data_error("stage2 loss: input shapes do not match the configuration");
  Stage2Trace t;
  t.q0 = sample.query;
  t.q1 = nn::temporal_conv1d(t.q0, p.at("base.conv0.w"), p.at("base.conv0.b"), Activation::Relu);
  t.q2 = nn::temporal_conv1d(t.q1, p.at("base.conv1.w"), p.at("base.conv1.b"), Activation::Relu);
  t.fc = t.q2.rowwise().mean();
  t.r0 = sample.reference;
  t.r1 = nn::temporal_conv1d(t.r0, p.at("base.conv0.w"), p.at("base.conv0.b"), Activation::Relu);
  t.r2 = nn::temporal_conv1d(t.r1, p.at("base.conv1.w"), p.at("base.conv1.b"), Activation::Relu);
  t.map = bm_sample(t.r2, N);
  const Matrix* fused = &t.map.data;
  if (config_.query_branch) {
    t.att = relocalization_attention(t.fc, t.map);
    fused = &t.att.fused;
  }
  t.h1 = nn::pointwise_conv(*fused, p.at("head.reduce.w"), p.at("head.reduce.b"), Activation::Relu);
  apply_mask(t.h1, mask_row_);
  t.h2 = nn::conv2d_3x3(t.h1, L, L, p.at("head.conv.w"), p.at("head.conv.b"), Activation::Relu);
  apply_mask(t.h2, mask_row_);
  t.out = nn::sigmoid(nn::pointwise_conv(t.h2, p.at("head.out.w"), p.at("head.out.b"), Activation::Linear));
  apply_mask(t.out, mask_row_);

  BMScoreMaps maps{Eigen::Map<const Matrix>(t.out.row(0).data(), L, L),
                   Eigen::Map<const Matrix>(t.out.row(1).data(), L, L)};
  BMScoreMaps dmaps;
  const RlmLoss loss = rlm_loss(maps, sample.labels, config_, &dmaps);

  Matrix dlogit(2, L * L);
  dlogit.row(0) = Eigen::Map<const RowVector>(dmaps.classification.data(), L * L);
  dlogit.row(1) = Eigen::Map<const RowVector>(dmaps.regression.data(), L * L);
  dlogit = scale * dlogit.cwiseProduct(t.out.cwiseProduct((1.0 - t.out.array()).matrix()));

  const Matrix dh2 = nn::pointwise_conv_backward(t.h2, t.out, dlogit, p.at("head.out.w"), Activation::Linear,
                                                 g.at("head.out.w"), g.at("head.out.b"));
  const Matrix dh1 = nn::conv2d_3x3_backward(t.h1, L, L, t.h2, dh2, p.at("head.conv.w"), Activation::Relu,
                                             g.at("head.conv.w"), g.at("head.conv.b"));
  const Matrix dfused = nn::pointwise_conv_backward(*fused, t.h1, dh1, p.at("head.reduce.w"), Activation::Relu,
                                                    g.at("head.reduce.w"), g.at("head.reduce.b"));
  BMFeatureMap dmap{t.map.channels, N, L, Matrix()};
  Vector dfc = Vector::Zero(config_.channels);
  if (config_.query_branch) {
    const RowVector& att = t.att.attention;
    // F' = F * Att[j] * fc[c]
    Matrix scaled = dfused;  // dF' * fc[c]
    for (Index r = 0; r < scaled.rows(); ++r) scaled.row(r) *= t.fc[r / N];
    dmap.data = scaled;
    dmap.data.array().rowwise() *= att.array();
    const RowVector datt = scaled.cwiseProduct(t.map.data).colwise().sum();
    const Matrix weighted = dfused.cwiseProduct(t.map.data);
    for (Index r = 0; r < weighted.rows(); ++r) dfc[r / N] += weighted.row(r).dot(att);
    const RowVector dlog = datt.cwiseProduct(att.cwiseProduct((1.0 - att.array()).matrix()));
    dfc += t.att.downsampled * dlog.transpose();
    const Matrix ddown = t.fc * dlog;
    dmap.data += nn::pointwise_conv_backward(t.map.data, t.att.downsampled, ddown, p.at("rlm.down.w"),
                                             Activation::Linear, g.at("rlm.down.w"), g.at("rlm.down.b"));
  } else {
    dmap.data = dfused;
  }
  const Matrix dr2 = bm_sample_backward(dmap, L);
  const Matrix dr1 = nn::temporal_conv1d_backward(t.r1, t.r2, dr2, p.at("base.conv1.w"), Activation::Relu,
                                                  g.at("base.conv1.w"), g.at("base.conv1.b"));
  nn::temporal_conv1d_backward(t.r0, t.r1, dr1, p.at("base.conv0.w"), Activation::Relu, g.at("base.conv0.w"),
                               g.at("base.conv0.b"));
  if (config_.query_branch) {
    const Matrix dq2 = (dfc / static_cast<double>(t.q2.cols())).replicate(1, t.q2.cols());
    const Matrix dq1 = nn::temporal_conv1d_backward(t.q1, t.q2, dq2, p.at("base.conv1.w"), Activation::Relu,
                                                    g.at("base.conv1.w"), g.at("base.conv1.b"));
    nn::temporal_conv1d_backward(t.q0, t.q1, dq1, p.at("base.conv0.w"), Activation::Relu, g.at("base.conv0.w"),
                                 g.at("base.conv0.b"));
  }
  return loss;
}

Stage2PairSampler::Stage2PairSampler(const Corpus& corpus, QuerySplit split, const Stage2Model& model,
                                     std::uint64_t seed)
    : corpus_(corpus), length_(model.config().reference_length), rng_(seed) {
  references_.reserve(corpus.references.size());
  for (const auto& r : corpus.references) references_.push_back(model.prepare_reference(r.video.features));
  for (const QueryClip* q : corpus.queries_in(split)) {
    Entry e{model.prepare_query(q->features), q->class_id, {}};
    for (std::size_t i = 0; i < corpus.references.size(); ++i)
      if (corpus.references[i].video.has_class(q->class_id)) e.positives.push_back(i);
    if (e.positives.empty()) {
      warnings_.push_back({q->id, "no positive reference for class " + std::to_string(q->class_id) + "; skipped"});
      continue;
    }
    queries_.push_back(std::move(e));
  }
  if (queries_.empty()) data_error("stage2 sampler: no eligible queries in split " + std::string(split_name(split)));
}

Stage2Sample Stage2PairSampler::next() {
  const auto& e = queries_[std::uniform_int_distribution<std::size_t>(0, queries_.size() - 1)(rng_)];
  const std::size_t r = e.positives[std::uniform_int_distribution<std::size_t>(0, e.positives.size() - 1)(rng_)];
  const auto& video = corpus_.references[r].video;
  return {e.prepared, references_[r], gt_label_map(instances_to_grid(video, e.class_id, length_), length_)};
}

void Stage2TrainConfig::write(KeyValueConfig& kv) const {
  kv.set("stage2.epochs", std::to_string(epochs));
  kv.set("stage2.samples_per_epoch", std::to_string(samples_per_epoch));
  kv.set("stage2.batch_size", std::to_string(batch_size));
  kv.set("stage2.learning_rate", std::to_string(learning_rate));
  kv.set("stage2.val_pairs", std::to_string(val_pairs));
}

Stage2TrainConfig Stage2TrainConfig::read(const KeyValueConfig& kv) {
  Stage2TrainConfig t;
  t.epochs = static_cast<int>(kv.get_int("stage2.epochs", t.epochs));
  t.samples_per_epoch = static_cast<int>(kv.get_int("stage2.samples_per_epoch", t.samples_per_epoch));
  t.batch_size = kv.get_int("stage2.batch_size", t.batch_size);
  t.learning_rate = kv.get_double("stage2.learning_rate", t.learning_rate);
  t.val_pairs = static_cast<int>(kv.get_int("stage2.val_pairs", t.val_pairs));
  if (t.epochs < 1 || t.batch_size < 1 || t.val_pairs < 1 || t.samples_per_epoch < 0 || !(t.learning_rate > 0))
    config_error("stage2: epochs, batch_size, val_pairs must be >= 1 and learning_rate > 0");
  return t;
}

Stage2TrainResult train_stage2(const Corpus& corpus, const Stage2Config& config, const Stage2TrainConfig& train) {
  Stage2TrainResult result{Stage2Model(config, train.seed), {}, 0, {}};
  Stage2Model& model = result.model;
  Stage2PairSampler sampler(corpus, QuerySplit::Train, model, train.seed ^ 0x5851f42d4c957f2dULL);
  result.warnings = sampler.warnings();
  nn::Adam adam(model.params(), {train.learning_rate});
  ParamSet grad = model.params().zeros_like();
  const int per_epoch = train.samples_per_epoch > 0
                            ? train.samples_per_epoch
                            : static_cast<int>(corpus.queries_in(QuerySplit::Train).size());
  const auto batches = std::max<Index>(1, (per_epoch + train.batch_size - 1) / train.batch_size);
  const LocalizationEvalConfig eval{train.val_pairs, train.seed ^ 0x14057b7ef767814fULL, train.soft_nms_sigma, 100};

  ParamSet best = model.params();
  double best_auc = -1.0;
  for (int epoch = 1; epoch <= train.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (Index b = 0; b < batches; ++b) {
      grad.set_zero();
      double batch_loss = 0.0;
      const double scale = 1.0 / static_cast<double>(train.batch_size);
      for (Index i = 0; i < train.batch_size; ++i) batch_loss += model.loss_and_grad(sampler.next(), grad, scale).total;
      batch_loss /= static_cast<double>(train.batch_size);
      if (!std::isfinite(batch_loss) || !grad.all_finite())
        numeric_error("stage2 diverged: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                      std::to_string(b) + " (seed " + std::to_string(train.seed) + ")");
      adam.step(model.params(), grad);
      epoch_loss += batch_loss;
    }
    const double val_auc = localization_auc(model, corpus, QuerySplit::Val, eval).auc;
    result.history.push_back({epoch, {epoch_loss / static_cast<double>(batches), val_auc}});
    if (val_auc > best_auc) {
      best_auc = val_auc;
      best = model.params();
      result.best_epoch = epoch;
    }
  }
  model.params() = std::move(best);
  return result;
}

}  // namespace svmr
