#include "svmr/stage1.hpp"

#include "svmr/adam.hpp"
#include "svmr/error.hpp"
#include "svmr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace svmr {
namespace {

using nn::Activation;

constexpr double kCtcInitNoise = 0.1;

struct Branch {
  std::string prefix;  // "query" or "reference"
  Index length;
  Index slots;
};

// Intermediate values of one branch's forward pass, kept for backward.
struct BranchTrace {
  std::vector<Tensor3> enc;  // enc[0] = input, enc[i + 1] = output of encoder ctc i
  Matrix pooled;             // C_o x slots
  Matrix embedding;          // d_e x slots
  Matrix decoded;            // C_o x slots
  std::vector<Tensor3> dec;  // dec[0] = upsampled input, dec[i + 1] = output of decoder ctc i
  Matrix reconstruction;     // C_o x L
};

std::string key(const Branch& b, const std::string& part) { return b.prefix + "." + part; }

// Encoder ctc layers: 1 -> f0 -> f1 -> ... ; decoder mirrors in reverse.
std::vector<std::pair<Index, Index>> encoder_layers(const std::vector<Index>& filters) {
  std::vector<std::pair<Index, Index>> out;
  Index in = 1;
  for (Index f : filters) {
    out.emplace_back(in, f);
    in = f;
  }
  return out;
}

std::vector<std::pair<Index, Index>> decoder_layers(const std::vector<Index>& filters) {
  auto enc = encoder_layers(filters);
  std::reverse(enc.begin(), enc.end());
  for (auto& [in, out] : enc) std::swap(in, out);
  return enc;
}

// Hidden ctc layers use ReLU; the final single-filter layer of each stack is
// linear so a negative response cannot zero a whole pooled window.
Activation layer_activation(std::size_t layer, std::size_t count) {
  return layer + 1 == count ? Activation::Linear : Activation::Relu;
}

Matrix encode_branch(const ParamSet& p, const Stage1Config& cfg, const Branch& b, const Matrix& x,
                     BranchTrace* trace) {
  if (x.rows() != cfg.feature_channels)
    data_error(b.prefix + " encoder: expected " + std::to_string(cfg.feature_channels) + " channels, got " +
               std::to_string(x.rows()));
  if (x.cols() != b.length)
    data_error(b.prefix + " encoder: expected length " + std::to_string(b.length) + ", got " +
               std::to_string(x.cols()));
  const auto layers = encoder_layers(cfg.ctc_filters);
  Tensor3 h = Tensor3::from_matrix(x);
  if (trace) trace->enc.assign(1, h);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string n = key(b, "enc.ctc" + std::to_string(i));
    h = nn::ctc_forward(h, p.at(n + ".w"), p.at(n + ".b"), layer_activation(i, layers.size()));
    if (trace) trace->enc.push_back(h);
  }
  Matrix pooled = nn::avg_pool_temporal(h.to_matrix(), b.slots);
  Matrix e = nn::pointwise_conv(pooled, p.at(key(b, "enc.proj.w")), p.at(key(b, "enc.proj.b")), Activation::Linear);
  if (trace) {
    trace->pooled = std::move(pooled);
    trace->embedding = e;
  }
  return e;
}

Matrix decode_branch(const ParamSet& p, const Stage1Config& cfg, const Branch& b, const Matrix& e,
                     BranchTrace* trace) {
  if (e.rows() != cfg.embed_dim || e.cols() != b.slots)
    data_error(b.prefix + " decoder: embedding must be " + std::to_string(cfg.embed_dim) + "x" +
               std::to_string(b.slots));
  Matrix y = nn::pointwise_conv(e, p.at(key(b, "dec.proj.w")), p.at(key(b, "dec.proj.b")), Activation::Linear);
  Tensor3 h = Tensor3::from_matrix(y * nn::resize_matrix(b.slots, b.length));
  if (trace) {
    trace->decoded = std::move(y);
    trace->dec.assign(1, h);
  }
  const auto layers = decoder_layers(cfg.ctc_filters);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string n = key(b, "dec.ctc" + std::to_string(i));
    h = nn::ctc_forward(h, p.at(n + ".w"), p.at(n + ".b"), layer_activation(i, layers.size()));
    if (trace) trace->dec.push_back(h);
  }
  Matrix out = h.to_matrix();
  if (trace) trace->reconstruction = out;
  return out;
}

// Backward through decoder then encoder. d_recon is dL/d(reconstruction),
// d_embed_extra is an additional dL/d(embedding) from the similarity term.
void branch_backward(const ParamSet& p, const Stage1Config& cfg, const Branch& b, const BranchTrace& t,
                     const Matrix& d_recon, const Matrix& d_embed_extra, ParamSet& g) {
  const auto dlayers = decoder_layers(cfg.ctc_filters);
  Tensor3 dh = Tensor3::from_matrix(d_recon);
  for (std::size_t i = dlayers.size(); i-- > 0;) {
    const std::string n = key(b, "dec.ctc" + std::to_string(i));
    dh = nn::ctc_backward(t.dec[i], t.dec[i + 1], dh, p.at(n + ".w"), layer_activation(i, dlayers.size()),
                          g.at(n + ".w"), g.at(n + ".b"));
  }
  const Matrix d_decoded = dh.to_matrix() * nn::resize_matrix(b.slots, b.length).transpose();
  Matrix d_embed = nn::pointwise_conv_backward(t.embedding, t.decoded, d_decoded, p.at(key(b, "dec.proj.w")),
                                               Activation::Linear, g.at(key(b, "dec.proj.w")),
                                               g.at(key(b, "dec.proj.b")));
  d_embed += d_embed_extra;
  const Matrix d_pooled =
      nn::pointwise_conv_backward(t.pooled, t.embedding, d_embed, p.at(key(b, "enc.proj.w")), Activation::Linear,
                                  g.at(key(b, "enc.proj.w")), g.at(key(b, "enc.proj.b")));
  dh = Tensor3::from_matrix(d_pooled * nn::pool_matrix(b.length, b.slots).transpose());
  const auto elayers = encoder_layers(cfg.ctc_filters);
  for (std::size_t i = elayers.size(); i-- > 0;) {
    const std::string n = key(b, "enc.ctc" + std::to_string(i));
    dh = nn::ctc_backward(t.enc[i], t.enc[i + 1], dh, p.at(n + ".w"), layer_activation(i, elayers.size()),
                          g.at(n + ".w"), g.at(n + ".b"));
  }
}

// Gradient of cosine(a, b) with respect to a; zero when either is zero.
Vector cosine_grad(const Vector& a, const Vector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return Vector::Zero(a.size());
  const double c = a.dot(b) / (na * nb);
  return b / (na * nb) - c * a / (na * na);
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) numeric_error(std::string(what) + ": non-finite input");
}

}  // namespace

void Stage1Config::validate() const {
  if (feature_channels < 1) config_error("stage1: feature_channels must be >= 1");
  if (query_length < 1 || reference_length < 1) config_error("stage1: input lengths must be >= 1");
  if (embed_dim < 1) config_error("stage1: embed_dim must be >= 1");
  if (ref_slots < 1 || ref_slots > reference_length) config_error("stage1: ref_slots must lie in [1, reference_length]");
  if (ctc_filters.empty() || ctc_filters.back() != 1) config_error("stage1: ctc_filters must end with 1");
  for (Index f : ctc_filters)
    if (f < 1) config_error("stage1: ctc filter counts must be >= 1");
  if (!(lambda >= 0)) config_error("stage1: lambda must be >= 0");
  if (!(positive_coverage > 0 && positive_coverage <= 1)) config_error("stage1: positive_coverage must lie in (0, 1]");
}

void Stage1Config::write(KeyValueConfig& kv) const {
  kv.set("stage1.feature_channels", std::to_string(feature_channels));
  kv.set("stage1.query_length", std::to_string(query_length));
  kv.set("stage1.reference_length", std::to_string(reference_length));
  kv.set("stage1.embed_dim", std::to_string(embed_dim));
  kv.set("stage1.ref_slots", std::to_string(ref_slots));
  std::string f;
  for (std::size_t i = 0; i < ctc_filters.size(); ++i) f += (i ? "," : "") + std::to_string(ctc_filters[i]);
  kv.set("stage1.ctc_filters", f);
  kv.set("stage1.lambda", std::to_string(lambda));
  kv.set("stage1.positive_coverage", std::to_string(positive_coverage));
}

Stage1Config Stage1Config::read(const KeyValueConfig& kv) {
  Stage1Config c;
  c.feature_channels = kv.get_int("stage1.feature_channels", c.feature_channels);
  c.query_length = kv.get_int("stage1.query_length", c.query_length);
  c.reference_length = kv.get_int("stage1.reference_length", c.reference_length);
  c.embed_dim = kv.get_int("stage1.embed_dim", c.embed_dim);
  c.ref_slots = kv.get_int("stage1.ref_slots", c.ref_slots);
  const auto f = kv.get_int_list("stage1.ctc_filters", {1, 32, 1});
  c.ctc_filters.assign(f.begin(), f.end());
  c.lambda = kv.get_double("stage1.lambda", c.lambda);
  c.positive_coverage = kv.get_double("stage1.positive_coverage", c.positive_coverage);
  c.validate();
  return c;
}

double cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double max_cos_similarity(const Vector& query, const Matrix& reference) {
  if (query.size() != reference.rows()) data_error("max_cos_similarity: embedding dims differ");
  if (reference.cols() < 1) data_error("max_cos_similarity: empty reference embedding");
  if (query.norm() == 0.0) data_error("degenerate query embedding");
  double best = -1.0;
  for (Index i = 0; i < reference.cols(); ++i) best = std::max(best, cosine(query, reference.col(i)));
  return best;
}

Vector make_similarity_label(const AnnotatedVideo& video, int query_class, Index slots, double coverage) {
  Vector g = Vector::Constant(slots, -1.0);
  const double duration = video.duration();
  for (Index i = 0; i < slots; ++i) {
    const double lo = duration * static_cast<double>(i) / static_cast<double>(slots);
    const double hi = duration * static_cast<double>(i + 1) / static_cast<double>(slots);
    // Union length of query-class instances inside the window.
    std::vector<std::pair<double, double>> spans;
    for (const auto& inst : video.instances)
      if (inst.class_id == query_class) {
        const double a = std::max(lo, inst.t_start), b = std::min(hi, inst.t_end);
        if (b > a) spans.emplace_back(a, b);
      }
    std::sort(spans.begin(), spans.end());
    double covered = 0.0, cur_a = 0.0, cur_b = -1.0;
    for (const auto& [a, b] : spans) {
      if (a > cur_b) {
        if (cur_b > cur_a) covered += cur_b - cur_a;
        cur_a = a;
        cur_b = b;
      } else {
        cur_b = std::max(cur_b, b);
      }
    }
    if (cur_b > cur_a) covered += cur_b - cur_a;
    if (covered >= coverage * (hi - lo) - 1e-12) g[i] = 1.0;
  }
  return g;
}

double recon_loss(const Matrix& f, const Matrix& reconstructed) {
  if (f.rows() != reconstructed.rows() || f.cols() != reconstructed.cols()) data_error("recon_loss: shape mismatch");
  check_finite(f, "recon_loss");
  check_finite(reconstructed, "recon_loss");
  return (f - reconstructed).squaredNorm() / static_cast<double>(f.size());
}

double similarity_loss(const Vector& query, const Matrix& reference, const Vector& label) {
  if (label.size() != reference.cols()) data_error("similarity_loss: label length differs from T_emb");
  if (query.size() != reference.rows()) data_error("similarity_loss: embedding dims differ");
  check_finite(query, "similarity_loss");
  check_finite(reference, "similarity_loss");
  double s = 0.0;
  for (Index i = 0; i < reference.cols(); ++i) {
    const double d = cosine(query, reference.col(i)) - label[i];
    s += d * d;
  }
  return s / static_cast<double>(reference.cols());
}

Stage1Model::Stage1Model(Stage1Config config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  params_.init_seed = seed;
  const auto enc = encoder_layers(config_.ctc_filters);
  const auto dec = decoder_layers(config_.ctc_filters);
  // Both branches start from the same values but own separate parameters.
  for (const char* prefix : {"query", "reference"}) {
    std::mt19937_64 rng(seed);
    const std::string p = prefix;
    for (std::size_t i = 0; i < enc.size(); ++i) {
      Matrix& w = params_.add(p + ".enc.ctc" + std::to_string(i) + ".w", enc[i].second, 3 * enc[i].first);
      nn::dirac_init(w, kCtcInitNoise, rng);
      params_.add(p + ".enc.ctc" + std::to_string(i) + ".b", enc[i].second, 1);
    }
    nn::kaiming_uniform(params_.add(p + ".enc.proj.w", config_.embed_dim, config_.feature_channels),
                        config_.feature_channels, rng);
    params_.add(p + ".enc.proj.b", config_.embed_dim, 1);
    nn::kaiming_uniform(params_.add(p + ".dec.proj.w", config_.feature_channels, config_.embed_dim),
                        config_.embed_dim, rng);
    params_.add(p + ".dec.proj.b", config_.feature_channels, 1);
    for (std::size_t i = 0; i < dec.size(); ++i) {
      Matrix& w = params_.add(p + ".dec.ctc" + std::to_string(i) + ".w", dec[i].second, 3 * dec[i].first);
      nn::dirac_init(w, kCtcInitNoise, rng);
      params_.add(p + ".dec.ctc" + std::to_string(i) + ".b", dec[i].second, 1);
    }
  }
}

Stage1Model::Stage1Model(Stage1Config config, ParamSet params) : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const Stage1Model reference(config_, 0);
  if (!same_shapes(reference.params_, params_)) data_error("stage1 parameters do not match the configured shapes");
}

Vector Stage1Model::encode_query(const Matrix& query) const {
  return encode_branch(params_, config_, {"query", config_.query_length, 1}, query, nullptr).col(0);
}

Matrix Stage1Model::encode_reference(const Matrix& reference) const {
  return encode_branch(params_, config_, {"reference", config_.reference_length, config_.ref_slots}, reference,
                       nullptr);
}

Matrix Stage1Model::decode_query(const Vector& embedding) const {
  return decode_branch(params_, config_, {"query", config_.query_length, 1}, embedding, nullptr);
}

Matrix Stage1Model::decode_reference(const Matrix& embedding) const {
  return decode_branch(params_, config_, {"reference", config_.reference_length, config_.ref_slots}, embedding,
                       nullptr);
}

EmbeddingPair Stage1Model::embed(const Stage1Sample& sample) const {
  return {encode_query(sample.query), encode_reference(sample.reference)};
}

Matrix Stage1Model::prepare_query(const FeatureSequence& seq) const {
  return nn::linear_resize(seq.data, config_.query_length);
}

Matrix Stage1Model::prepare_reference(const FeatureSequence& seq) const {
  return nn::linear_resize(seq.data, config_.reference_length);
}

Stage1Loss Stage1Model::loss(const Stage1Sample& sample) const {
  const Branch qb{"query", config_.query_length, 1};
  const Branch rb{"reference", config_.reference_length, config_.ref_slots};
  const Matrix eq = encode_branch(params_, config_, qb, sample.query, nullptr);
  const Matrix er = encode_branch(params_, config_, rb, sample.reference, nullptr);
  Stage1Loss l;
  l.recon_query = recon_loss(sample.query, decode_branch(params_, config_, qb, eq, nullptr));
  l.recon_reference = recon_loss(sample.reference, decode_branch(params_, config_, rb, er, nullptr));
  l.similarity = similarity_loss(eq.col(0), er, sample.label);
  l.total = l.recon_query + l.recon_reference + config_.lambda * l.similarity;
  return l;
}

Stage1Loss Stage1Model::loss_and_grad(const Stage1Sample& sample, ParamSet& grad, double scale) const {
  const Branch qb{"query", config_.query_length, 1};
  const Branch rb{"reference", config_.reference_length, config_.ref_slots};
  BranchTrace qt, rt;
  encode_branch(params_, config_, qb, sample.query, &qt);
  encode_branch(params_, config_, rb, sample.reference, &rt);
  decode_branch(params_, config_, qb, qt.embedding, &qt);
  decode_branch(params_, config_, rb, rt.embedding, &rt);

  Stage1Loss l;
  l.recon_query = recon_loss(sample.query, qt.reconstruction);
  l.recon_reference = recon_loss(sample.reference, rt.reconstruction);
  const Vector eq = qt.embedding.col(0);
  l.similarity = similarity_loss(eq, rt.embedding, sample.label);
  l.total = l.recon_query + l.recon_reference + config_.lambda * l.similarity;

  const double slots = static_cast<double>(config_.ref_slots);
  Matrix d_eq = Matrix::Zero(config_.embed_dim, 1);
  Matrix d_er = Matrix::Zero(config_.embed_dim, config_.ref_slots);
  for (Index i = 0; i < config_.ref_slots; ++i) {
    const Vector er_i = rt.embedding.col(i);
    const double c = cosine(eq, er_i);
    const double coef = scale * config_.lambda * 2.0 * (c - sample.label[i]) / slots;
    d_eq.col(0) += coef * cosine_grad(eq, er_i);
    d_er.col(i) += coef * cosine_grad(er_i, eq);
  }
  const Matrix d_rq =
      scale * 2.0 * (qt.reconstruction - sample.query) / static_cast<double>(sample.query.size());
  const Matrix d_rr =
      scale * 2.0 * (rt.reconstruction - sample.reference) / static_cast<double>(sample.reference.size());
  branch_backward(params_, config_, qb, qt, d_rq, d_eq, grad);
  branch_backward(params_, config_, rb, rt, d_rr, d_er, grad);
  return l;
}

Stage1PairSampler::Stage1PairSampler(const Corpus& corpus, QuerySplit split, const Stage1Model& model,
                                     std::uint64_t seed)
    : corpus_(corpus),
      slots_(model.config().ref_slots),
      coverage_(model.config().positive_coverage),
      rng_(seed) {
  references_.reserve(corpus.references.size());
  for (const auto& r : corpus.references) references_.push_back(model.prepare_reference(r.video.features));
  for (const QueryClip* q : corpus.queries_in(split)) {
    Entry e{q, model.prepare_query(q->features), {}, {}};
    for (std::size_t i = 0; i < corpus.references.size(); ++i)
      (corpus.references[i].video.has_class(q->class_id) ? e.positives : e.negatives).push_back(i);
    if (e.positives.empty()) {
      warnings_.push_back({q->id, "no positive reference for class " + std::to_string(q->class_id) + "; skipped"});
      continue;
    }
    if (e.negatives.empty()) {
      warnings_.push_back({q->id, "no negative reference for class " + std::to_string(q->class_id) + "; skipped"});
      continue;
    }
    queries_.push_back(std::move(e));
  }
  if (queries_.empty()) data_error("stage1 sampler: no eligible queries in split " + std::string(split_name(split)));
}

Stage1Sample Stage1PairSampler::next() {
  const auto& e = queries_[std::uniform_int_distribution<std::size_t>(0, queries_.size() - 1)(rng_)];
  last_positive_ = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < 0.5;
  const auto& pool = last_positive_ ? e.positives : e.negatives;
  const std::size_t r = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng_)];
  const auto& video = corpus_.references[r].video;
  last_query_ = e.query->id;
  last_reference_ = video.id();
  return {e.prepared, references_[r], make_similarity_label(video, e.query->class_id, slots_, coverage_)};
}

void Stage1TrainConfig::write(KeyValueConfig& kv) const {
  kv.set("stage1.epochs", std::to_string(epochs));
  kv.set("stage1.samples_per_epoch", std::to_string(samples_per_epoch));
  kv.set("stage1.batch_size", std::to_string(batch_size));
  kv.set("stage1.learning_rate", std::to_string(learning_rate));
  kv.set("stage1.val_pairs", std::to_string(val_pairs));
}

Stage1TrainConfig Stage1TrainConfig::read(const KeyValueConfig& kv) {
  Stage1TrainConfig t;
  t.epochs = static_cast<int>(kv.get_int("stage1.epochs", t.epochs));
  t.samples_per_epoch = static_cast<int>(kv.get_int("stage1.samples_per_epoch", t.samples_per_epoch));
  t.batch_size = kv.get_int("stage1.batch_size", t.batch_size);
  t.learning_rate = kv.get_double("stage1.learning_rate", t.learning_rate);
  t.val_pairs = static_cast<int>(kv.get_int("stage1.val_pairs", t.val_pairs));
  if (t.epochs < 1 || t.batch_size < 1 || t.val_pairs < 1 || t.samples_per_epoch < 0 || !(t.learning_rate > 0))
    config_error("stage1: epochs, batch_size, val_pairs must be >= 1 and learning_rate > 0");
  return t;
}

double stage1_eval_loss(const Stage1Model& model, const Corpus& corpus, QuerySplit split, int pairs,
                        std::uint64_t seed) {
  Stage1PairSampler sampler(corpus, split, model, seed);
  double total = 0.0;
  for (int i = 0; i < pairs; ++i) total += model.loss(sampler.next()).total;
  return total / static_cast<double>(pairs);
}

Stage1TrainResult train_stage1(const Corpus& corpus, const Stage1Config& config, const Stage1TrainConfig& train) {
  Stage1TrainResult result{Stage1Model(config, train.seed), {}, 0, {}};
  Stage1Model& model = result.model;
  Stage1PairSampler sampler(corpus, QuerySplit::Train, model, train.seed ^ 0x5851f42d4c957f2dULL);
  result.warnings = sampler.warnings();
  const std::uint64_t val_seed = train.seed ^ 0x14057b7ef767814fULL;
  nn::Adam adam(model.params(), {train.learning_rate});
  ParamSet grad = model.params().zeros_like();

  const int per_epoch = train.samples_per_epoch > 0 ? train.samples_per_epoch
                                                    : static_cast<int>(std::max<std::size_t>(
                                                          sampler.eligible_queries(), train.batch_size));
  const auto batches = std::max<Index>(1, (per_epoch + train.batch_size - 1) / train.batch_size);
  ParamSet best = model.params();
  double best_val = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= train.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (Index b = 0; b < batches; ++b) {
      grad.set_zero();
      double batch_loss = 0.0;
      const double scale = 1.0 / static_cast<double>(train.batch_size);
      for (Index i = 0; i < train.batch_size; ++i) batch_loss += model.loss_and_grad(sampler.next(), grad, scale).total;
      batch_loss /= static_cast<double>(train.batch_size);
      if (!std::isfinite(batch_loss) || !grad.all_finite())
        numeric_error("stage1 diverged: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                      std::to_string(b) + " (seed " + std::to_string(train.seed) + ")");
      adam.step(model.params(), grad);
      epoch_loss += batch_loss;
    }
    const double val = stage1_eval_loss(model, corpus, QuerySplit::Val, train.val_pairs, val_seed);
    result.history.push_back({epoch, epoch_loss / static_cast<double>(batches), val});
    if (val < best_val) {
      best_val = val;
      best = model.params();
      result.best_epoch = epoch;
    }
  }
  model.params() = std::move(best);
  return result;
}

}  // namespace svmr
