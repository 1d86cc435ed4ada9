#include "helpers.hpp"

#include "svmr/error.hpp"
#include "svmr/stage1.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace svmr;
using testing::random_matrix;

namespace {

Stage1Config small_config() {
  Stage1Config c;
  c.feature_channels = 6;
  c.query_length = 4;
  c.reference_length = 12;
  c.embed_dim = 5;
  c.ref_slots = 4;
  c.ctc_filters = {1, 4, 1};
  return c;
}

AnnotatedVideo annotated(double duration, std::vector<TemporalInstance> inst) {
  AnnotatedVideo v;
  v.features = {"v", duration, Matrix::Zero(1, static_cast<Index>(duration))};
  v.instances = std::move(inst);
  return v;
}

// Tiny corpus: query classes 0 (train) and 1 (val); references with either.
Corpus tiny_corpus() {
  std::mt19937_64 rng(12);
  Corpus c;
  c.split = {{0}, {1}, {}};
  auto feat = [&](const std::string& id, Index len) {
    return FeatureSequence{id, static_cast<double>(len), random_matrix(6, len, rng)};
  };
  c.queries.push_back({"q0", "s", 0, QuerySplit::Train, feat("q0", 5)});
  c.queries.push_back({"q1", "s", 1, QuerySplit::Val, feat("q1", 5)});
  c.references.push_back({{feat("pos", 20), {{0, 2.0, 8.0}}}, 1, {"pos"}});
  c.references.push_back({{feat("neg", 20), {{1, 2.0, 8.0}}}, 1, {"neg"}});
  return c;
}

}  // namespace

TEST_CASE("max cosine similarity examples") {
  Vector q(2);
  Matrix r(2, 2);
  q << 1, 0;
  r << 1, 0, 0, 1;
  CHECK(max_cos_similarity(q, r) == doctest::Approx(1.0));
  q << 1, 1;
  r << 1, -1, 0, 0;
  CHECK(max_cos_similarity(q, r) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  q << 0, 1;
  r << 1, -1, 0, 0;
  CHECK(max_cos_similarity(q, r) == doctest::Approx(0.0));
  q << 0, 0;
  CHECK_THROWS_WITH_AS(max_cos_similarity(q, r), "degenerate query embedding", Error);
  // Zero reference columns score 0.
  q << 1, 0;
  r << 0, -1, 0, 0;
  CHECK(max_cos_similarity(q, r) == 0.0);
}

TEST_CASE("max cosine is invariant to positive rescaling") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Vector q = testing::random_vector(7, rng);
    Matrix r = random_matrix(7, 4, rng);
    const double p = max_cos_similarity(q, r);
    CHECK(max_cos_similarity(3.5 * q, r) == doctest::Approx(p).epsilon(1e-9));
    r.col(2) *= 0.01;
    CHECK(max_cos_similarity(q, r) == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("similarity label windows") {
  CHECK(make_similarity_label(annotated(100, {{3, 0.0, 30.0}}), 3, 4) == Vector{{1.0, -1.0, -1.0, -1.0}});
  CHECK(make_similarity_label(annotated(100, {{3, 0.0, 100.0}}), 3, 4) == Vector::Ones(4));
  CHECK(make_similarity_label(annotated(100, {{2, 0.0, 100.0}}), 3, 4) == -Vector::Ones(4));
  // Coverage is the union of same-class instances.
  CHECK(make_similarity_label(annotated(100, {{3, 25.0, 35.0}, {3, 40.0, 45.0}}), 3, 4)(1) == 1.0);
  CHECK(make_similarity_label(annotated(100, {{3, 25.0, 30.0}, {3, 26.0, 31.0}, {3, 27.0, 32.0}}), 3, 4)(1) == -1.0);
}

TEST_CASE("loss term examples") {
  std::mt19937_64 rng(1);
  const Matrix f = random_matrix(3, 5, rng);
  CHECK(recon_loss(f, f) == 0.0);
  Vector q(2);
  q << 1, 0;
  Matrix r(2, 2);
  r << 1, 1, 0, 0;
  CHECK(similarity_loss(q, r, Vector{{1.0, -1.0}}) == doctest::Approx(2.0));
  CHECK(similarity_loss(q, r, Vector{{1.0, 1.0}}) == doctest::Approx(0.0));
  Matrix nan = f;
  nan(0, 0) = std::nan("");
  CHECK_THROWS_AS(recon_loss(f, nan), Error);
}

TEST_CASE("encoder and decoder shapes") {
  Stage1Model m(small_config(), 3);
  std::mt19937_64 rng(3);
  const Matrix q = random_matrix(6, 4, rng), r = random_matrix(6, 12, rng);
  CHECK(m.encode_query(q).size() == 5);
  const Matrix er = m.encode_reference(r);
  CHECK(er.rows() == 5);
  CHECK(er.cols() == 4);
  CHECK(m.decode_query(m.encode_query(q)).rows() == 6);
  CHECK(m.decode_query(m.encode_query(q)).cols() == 4);
  CHECK(m.decode_reference(er).cols() == 12);
  CHECK_THROWS_AS(m.encode_query(random_matrix(5, 4, rng)), Error);
  CHECK(m.encode_reference(r) == er);
}

TEST_CASE("default embedding shapes") {
  Stage1Config c;
  c.feature_channels = 16;
  Stage1Model m(c, 1);
  std::mt19937_64 rng(3);
  CHECK(m.encode_query(random_matrix(16, 4, rng)).size() == 512);
  const Matrix er = m.encode_reference(random_matrix(16, 100, rng));
  CHECK(er.rows() == 512);
  CHECK(er.cols() == 4);
}

TEST_CASE("zero input with zero biases gives zero embedding and reconstruction") {
  Stage1Model m(small_config(), 3);
  CHECK(m.encode_query(Matrix::Zero(6, 4)).isZero(0.0));
  CHECK(m.encode_reference(Matrix::Zero(6, 12)).isZero(0.0));
  CHECK(m.decode_reference(Matrix::Zero(5, 4)).isZero(0.0));
}

TEST_CASE("branches share no weights") {
  Stage1Model m(small_config(), 3);
  std::mt19937_64 rng(9);
  const Matrix q = random_matrix(6, 4, rng), r = random_matrix(6, 12, rng);
  const Matrix er = m.encode_reference(r);
  const Vector eq = m.encode_query(q);
  for (auto& [name, w] : m.params().entries())
    if (name.rfind("query.", 0) == 0) w.array() += 0.3;
  CHECK(m.encode_reference(r) == er);
  CHECK(m.encode_query(q) != eq);
}

TEST_CASE("total loss is the sum of its non-negative parts") {
  Stage1Model m(small_config(), 4);
  std::mt19937_64 rng(4);
  Stage1Sample s{random_matrix(6, 4, rng), random_matrix(6, 12, rng), Vector{{1.0, -1.0, -1.0, 1.0}}};
  const auto l = m.loss(s);
  CHECK(l.recon_query >= 0);
  CHECK(l.recon_reference >= 0);
  CHECK(l.similarity >= 0);
  CHECK(l.total == l.recon_query + l.recon_reference + 2.0 * l.similarity);
  ParamSet g = m.params().zeros_like();
  CHECK(m.loss_and_grad(s, g).total == l.total);
}

TEST_CASE("one small step decreases a frozen batch loss") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Stage1Model m(small_config(), seed);
    std::mt19937_64 rng(seed);
    std::vector<Stage1Sample> batch;
    for (int i = 0; i < 4; ++i)
      batch.push_back({random_matrix(6, 4, rng), random_matrix(6, 12, rng), Vector{{1.0, -1.0, 1.0, -1.0}}});
    ParamSet g = m.params().zeros_like();
    double before = 0;
    for (const auto& s : batch) before += m.loss_and_grad(s, g, 0.25).total / 4;
    m.params().axpy(-1e-3, g);
    double after = 0;
    for (const auto& s : batch) after += m.loss(s).total / 4;
    CHECK(after < before);
  }
}

TEST_CASE("pair sampler") {
  const Corpus c = tiny_corpus();
  Stage1Model m(small_config(), 1);
  Stage1PairSampler a(c, QuerySplit::Train, m, 5), b(c, QuerySplit::Train, m, 5);
  std::set<std::string> refs;
  int positives = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto sa = a.next();
    const auto sb = b.next();
    CHECK(a.last_reference() == b.last_reference());
    CHECK(a.last_query() == "q0");
    refs.insert(a.last_reference());
    if (a.last_positive()) {
      ++positives;
      CHECK(a.last_reference() == "pos");
      CHECK(sa.label.maxCoeff() == 1.0);
    } else {
      CHECK(a.last_reference() == "neg");
      CHECK(sa.label == -Vector::Ones(4));
    }
  }
  CHECK(refs == std::set<std::string>{"pos", "neg"});
  CHECK(std::abs(static_cast<double>(positives) / n - 0.5) <= 0.02);
}

TEST_CASE("sampler skips classes without positives") {
  Corpus c = tiny_corpus();
  c.references.pop_back();
  c.references.push_back({{FeatureSequence{"bg", 20.0, Matrix::Zero(6, 20)}, {}}, 1, {"bg"}});
  Stage1Model m(small_config(), 1);
  Stage1PairSampler s(c, QuerySplit::Train, m, 5);
  CHECK(s.eligible_queries() == 1);
  CHECK_THROWS_AS(Stage1PairSampler(c, QuerySplit::Val, m, 5), Error);
}

TEST_CASE("training is deterministic and records history") {
  const Corpus c = tiny_corpus();
  Stage1TrainConfig t;
  t.epochs = 2;
  t.batch_size = 4;
  t.samples_per_epoch = 8;
  t.learning_rate = 1e-3;
  t.val_pairs = 4;
  t.seed = 3;
  Corpus c2 = c;
  c2.queries[1].split = QuerySplit::Val;
  const auto a = train_stage1(c2, small_config(), t), b = train_stage1(c2, small_config(), t);
  REQUIRE(a.history.size() == 2);
  for (std::size_t i = 0; i < a.model.params().entries().size(); ++i)
    CHECK(a.model.params().entries()[i].second == b.model.params().entries()[i].second);
  CHECK(a.best_epoch >= 1);
}

TEST_CASE("config round trip and validation") {
  KeyValueConfig kv;
  Stage1Config c = small_config();
  c.write(kv);
  const Stage1Config back = Stage1Config::read(kv);
  CHECK(back.embed_dim == 5);
  CHECK(back.ctc_filters == std::vector<Index>{1, 4, 1});
  kv.set("stage1.ref_slots", "40");
  CHECK_THROWS_AS(Stage1Config::read(kv), Error);
}
