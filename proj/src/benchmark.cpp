#include "svmr/benchmark.hpp"

#include "svmr/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace svmr {
namespace {

constexpr double kTimeEps = 1e-9;

bool classes_disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  for (int c : a)
    if (std::binary_search(b.begin(), b.end(), c)) return false;
  return true;
}

std::vector<int> merged_classes(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void sort_instances(AnnotatedVideo& v) {
  std::stable_sort(v.instances.begin(), v.instances.end(),
                   [](const auto& a, const auto& b) { return a.t_start < b.t_start; });
}

template <class T>
T uniform_int(std::mt19937_64& rng, T lo, T hi) {
  return std::uniform_int_distribution<T>(lo, hi)(rng);
}

}  // namespace

const char* split_name(QuerySplit s) {
  switch (s) {
    case QuerySplit::Train: return "train";
    case QuerySplit::Val: return "val";
    case QuerySplit::Test: return "test";
  }
  return "?";
}

ClassSplit ClassSplit::from_proportions(std::vector<int> classes, double val_fraction, double test_fraction) {
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  const auto n = classes.size();
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_fraction + kTimeEps));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction + kTimeEps));
  if (n_val + n_test > n) config_error("class split fractions exceed the number of classes");
  const auto n_train = n - n_val - n_test;
  ClassSplit s;
  s.train_classes.assign(classes.begin(), classes.begin() + static_cast<long>(n_train));
  s.val_classes.assign(classes.begin() + static_cast<long>(n_train),
                       classes.begin() + static_cast<long>(n_train + n_val));
  s.test_classes.assign(classes.begin() + static_cast<long>(n_train + n_val), classes.end());
  return s;
}

bool ClassSplit::contains(int class_id) const {
  for (const auto* set : {&train_classes, &val_classes, &test_classes})
    if (std::find(set->begin(), set->end(), class_id) != set->end()) return true;
  return false;
}

QuerySplit ClassSplit::split_of(int class_id) const {
  auto has = [&](const std::vector<int>& v) { return std::find(v.begin(), v.end(), class_id) != v.end(); };
  if (has(train_classes)) return QuerySplit::Train;
  if (has(val_classes)) return QuerySplit::Val;
  if (has(test_classes)) return QuerySplit::Test;
  data_error("class " + std::to_string(class_id) + " is not in the class split");
}

SnippetRange snippet_range(const FeatureSequence& seq, double t_start, double t_end) {
  const double sps = seq.snippets_per_second();
  auto b = static_cast<Index>(std::floor(t_start * sps + kTimeEps));
  auto e = static_cast<Index>(std::ceil(t_end * sps - kTimeEps));
  b = std::clamp<Index>(b, 0, seq.length());
  e = std::clamp<Index>(e, 0, seq.length());
  return {b, std::max(b, e)};
}

QuerySets extract_query_clips(const std::vector<AnnotatedVideo>& v1, const ClassSplit& split) {
  QuerySets out;
  for (const auto& video : v1) {
    for (std::size_t i = 0; i < video.instances.size(); ++i) {
      const auto& inst = video.instances[i];
      if (!split.contains(inst.class_id)) {
        out.warnings.push_back({video.id(), "instance " + std::to_string(i) + " class " +
                                                std::to_string(inst.class_id) + " not in class split"});
        continue;
      }
      const SnippetRange r = snippet_range(video.features, inst.t_start, inst.t_end);
      if (r.size() < 1 || (inst.t_end - inst.t_start) * video.features.snippets_per_second() < 1.0 - kTimeEps) {
        out.warnings.push_back({video.id(), "instance " + std::to_string(i) + " shorter than one snippet"});
        continue;
      }
      QueryClip q;
      q.id = video.id() + "_q" + std::to_string(i);
      q.source_video = video.id();
      q.class_id = inst.class_id;
      q.split = split.split_of(inst.class_id);
      q.features.video_id = q.id;
      q.features.data = video.features.data.middleCols(r.begin, r.size());
      q.features.duration_sec = static_cast<double>(r.size()) / video.features.snippets_per_second();
      switch (q.split) {
        case QuerySplit::Train: out.train.push_back(std::move(q)); break;
        case QuerySplit::Val: out.val.push_back(std::move(q)); break;
        case QuerySplit::Test: out.test.push_back(std::move(q)); break;
      }
    }
  }
  return out;
}

void splice_segment(AnnotatedVideo& target, const AnnotatedVideo& source, SnippetRange segment,
                    const TemporalInstance& instance, Index at) {
  auto& tf = target.features;
  const auto& sf = source.features;
  if (tf.channels() != sf.channels()) data_error("splice_segment: channel count mismatch");
  if (at < 0 || at > tf.length()) data_error("splice_segment: insertion point out of range");
  if (segment.begin < 0 || segment.end > sf.length() || segment.size() < 1)
    data_error("splice_segment: empty or out-of-range segment");
  const double target_sps = tf.snippets_per_second();
  const double t_insert = static_cast<double>(at) / target_sps;
  const double seg_sec = static_cast<double>(segment.size()) / target_sps;

  Matrix data(tf.channels(), tf.length() + segment.size());
  data.leftCols(at) = tf.data.leftCols(at);
  data.middleCols(at, segment.size()) = sf.data.middleCols(segment.begin, segment.size());
  data.rightCols(tf.length() - at) = tf.data.rightCols(tf.length() - at);
  tf.data = std::move(data);

  for (auto& inst : target.instances)
    if (inst.t_start >= t_insert - kTimeEps) {
      inst.t_start += seg_sec;
      inst.t_end += seg_sec;
    }
  const double src_sps = sf.snippets_per_second();
  TemporalInstance moved = instance;
  moved.t_start = t_insert + (instance.t_start * src_sps - static_cast<double>(segment.begin)) / target_sps;
  moved.t_end = t_insert + (instance.t_end * src_sps - static_cast<double>(segment.begin)) / target_sps;
  target.instances.push_back(moved);
  tf.duration_sec += seg_sec;
  sort_instances(target);
}

std::vector<Index> background_insertion_points(const AnnotatedVideo& video) {
  const auto& f = video.features;
  const Index len = f.length();
  const double sps = f.snippets_per_second();
  std::vector<bool> is_background(static_cast<std::size_t>(len), true);
  for (const auto& inst : video.instances) {
    const SnippetRange r = snippet_range(f, inst.t_start, inst.t_end);
    for (Index i = r.begin; i < r.end; ++i) is_background[static_cast<std::size_t>(i)] = false;
  }
  std::vector<Index> points;
  for (Index k = 0; k <= len; ++k) {
    const double t = static_cast<double>(k) / sps;
    const bool inside = std::any_of(video.instances.begin(), video.instances.end(), [&](const auto& inst) {
      return t > inst.t_start + kTimeEps && t < inst.t_end - kTimeEps;
    });
    if (inside) continue;
    const bool left_bg = k > 0 && is_background[static_cast<std::size_t>(k - 1)];
    const bool right_bg = k < len && is_background[static_cast<std::size_t>(k)];
    if (left_bg || right_bg) points.push_back(k);
  }
  return points;
}

AnnotatedVideo merge_videos(const AnnotatedVideo& base, const std::vector<AnnotatedVideo>& supplements,
                            std::mt19937_64& rng, std::vector<BuildWarning>* failures) {
  const auto base_classes = base.classes();
  for (const auto& s : supplements) {
    if (s.instances.empty()) data_error("merge_videos: supplement " + s.id() + " has no instances");
    if (!classes_disjoint(s.classes(), base_classes))
      data_error("merge_videos: supplement " + s.id() + " shares a class label with base " + base.id());
    if (s.features.channels() != base.features.channels())
      data_error("merge_videos: supplement " + s.id() + " has a different channel count");
  }

  AnnotatedVideo merged = base;
  for (const auto& supp : supplements) {
    const auto& sf = supp.features;
    const std::size_t n = supp.instances.size();
    const auto take = uniform_int<std::size_t>(rng, 1, n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(take);
    std::sort(order.begin(), order.end());

    const auto margin = static_cast<Index>(std::llround(kSegmentContextSec * sf.snippets_per_second()));
    for (std::size_t idx : order) {
      const auto& inst = supp.instances[idx];
      const SnippetRange core = snippet_range(sf, inst.t_start, inst.t_end);
      Index lo = std::max<Index>(0, core.begin - margin);
      Index hi = std::min<Index>(sf.length(), core.end + margin);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == idx) continue;
        const SnippetRange other = snippet_range(sf, supp.instances[j].t_start, supp.instances[j].t_end);
        if (other.end <= core.begin) lo = std::max(lo, other.end);
        if (other.begin >= core.end) hi = std::min(hi, other.begin);
      }
      const auto points = background_insertion_points(merged);
      if (points.empty()) {
        if (failures) failures->push_back({supp.id(), "no background insertion point in " + base.id()});
        continue;
      }
      const Index at = points[uniform_int<std::size_t>(rng, 0, points.size() - 1)];
      splice_segment(merged, supp, {lo, hi}, inst, at);
    }
  }
  return merged;
}

ReferenceSet build_reference_set(const std::vector<AnnotatedVideo>& v2, std::mt19937_64& rng, int max_retries) {
  const std::size_t n = v2.size();
  if (n < 3) data_error("build_reference_set: need at least 3 videos, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_keep = (n + 2) / 3;
  const std::size_t n_two = n / 3;
  const std::vector<std::size_t> pool(order.begin() + static_cast<long>(n_keep), order.end());

  ReferenceSet out;
  out.videos.reserve(n);
  for (std::size_t i = 0; i < n_keep; ++i) {
    const auto& v = v2[order[i]];
    out.videos.push_back({v, 1, {v.id()}});
  }

  for (std::size_t p = 0; p < pool.size(); ++p) {
    const auto& base = v2[pool[p]];
    const std::size_t wanted = p < n_two ? 1 : 2;
    std::vector<int> used = base.classes();
    std::vector<std::size_t> chosen;
    for (std::size_t s = 0; s < wanted; ++s) {
      bool found = false;
      for (int attempt = 0; attempt < max_retries && !found; ++attempt) {
        const std::size_t cand = uniform_int<std::size_t>(rng, 0, n - 1);
        if (cand == pool[p] || std::find(chosen.begin(), chosen.end(), cand) != chosen.end()) continue;
        const auto& sv = v2[cand];
        if (sv.instances.empty() || !classes_disjoint(sv.classes(), used)) continue;
        chosen.push_back(cand);
        used = merged_classes(used, sv.classes());
        found = true;
      }
      if (!found) break;
    }
    if (chosen.size() != wanted) {
      out.warnings.push_back({base.id(), "no class-disjoint supplement found after " + std::to_string(max_retries) +
                                             " retries; kept unchanged"});
      out.videos.push_back({base, 1, {base.id()}});
      continue;
    }
    std::vector<AnnotatedVideo> supplements;
    ReferenceVideo ref;
    ref.sources.push_back(base.id());
    std::string id = base.id();
    for (std::size_t c : chosen) {
      supplements.push_back(v2[c]);
      ref.sources.push_back(v2[c].id());
      id += "+" + v2[c].id();
    }
    std::vector<BuildWarning> failures;
    ref.video = merge_videos(base, supplements, rng, &failures);
    ref.video.features.video_id = id;
    ref.num_sources = static_cast<int>(1 + chosen.size());
    for (auto& f : failures) out.warnings.push_back({id, f.video_id + ": " + f.message});
    out.videos.push_back(std::move(ref));
  }
  return out;
}

void SynthConfig::validate() const {
  if (num_classes < 1) config_error("synth: num_classes must be >= 1");
  if (feature_channels < 1) config_error("synth: feature_channels must be >= 1");
  if (!(snippets_per_second > 0)) config_error("synth: snippets_per_second must be > 0");
  if (!(sigma_proto > 0)) config_error("synth: sigma_proto must be > 0");
  if (!(sigma_inst >= 0) || !(sigma_bg >= 0)) config_error("synth: noise sigmas must be >= 0");
  if (min_video_sec < 1 || max_video_sec < min_video_sec) config_error("synth: bad video duration range");
  if (min_instances < 1 || max_instances < min_instances) config_error("synth: bad instance count range");
  if (min_instance_sec < 1 || max_instance_sec < min_instance_sec) config_error("synth: bad instance duration range");
  if (max_instances * (max_instance_sec + 1) + 1 > min_video_sec)
    config_error("synth: videos too short for the instance count and duration ranges");
}

void SynthConfig::write(KeyValueConfig& kv) const {
  kv.set("synth.num_classes", std::to_string(num_classes));
  kv.set("synth.feature_channels", std::to_string(feature_channels));
  kv.set("synth.snippets_per_second", std::to_string(snippets_per_second));
  kv.set("synth.sigma_proto", std::to_string(sigma_proto));
  kv.set("synth.sigma_inst", std::to_string(sigma_inst));
  kv.set("synth.sigma_bg", std::to_string(sigma_bg));
  kv.set("synth.feature_offset", std::to_string(feature_offset));
  kv.set("synth.min_video_sec", std::to_string(min_video_sec));
  kv.set("synth.max_video_sec", std::to_string(max_video_sec));
  kv.set("synth.min_instances", std::to_string(min_instances));
  kv.set("synth.max_instances", std::to_string(max_instances));
  kv.set("synth.min_instance_sec", std::to_string(min_instance_sec));
  kv.set("synth.max_instance_sec", std::to_string(max_instance_sec));
}

SynthConfig SynthConfig::read(const KeyValueConfig& kv) {
  SynthConfig c;
  auto i = [&](const char* key, int fallback) { return static_cast<int>(kv.get_int(key, fallback)); };
  c.num_classes = i("synth.num_classes", c.num_classes);
  c.feature_channels = i("synth.feature_channels", c.feature_channels);
  c.snippets_per_second = kv.get_double("synth.snippets_per_second", c.snippets_per_second);
  c.sigma_proto = kv.get_double("synth.sigma_proto", c.sigma_proto);
  c.sigma_inst = kv.get_double("synth.sigma_inst", c.sigma_inst);
  c.sigma_bg = kv.get_double("synth.sigma_bg", c.sigma_bg);
  c.feature_offset = kv.get_double("synth.feature_offset", c.feature_offset);
  c.min_video_sec = i("synth.min_video_sec", c.min_video_sec);
  c.max_video_sec = i("synth.max_video_sec", c.max_video_sec);
  c.min_instances = i("synth.min_instances", c.min_instances);
  c.max_instances = i("synth.max_instances", c.max_instances);
  c.min_instance_sec = i("synth.min_instance_sec", c.min_instance_sec);
  c.max_instance_sec = i("synth.max_instance_sec", c.max_instance_sec);
  c.validate();
  return c;
}

void SynthSizes::write(KeyValueConfig& kv) const {
  kv.set("synth.query_videos", std::to_string(query_videos));
  kv.set("synth.reference_videos", std::to_string(reference_videos));
}

SynthSizes SynthSizes::read(const KeyValueConfig& kv) {
  SynthSizes s;
  s.query_videos = static_cast<int>(kv.get_int("synth.query_videos", s.query_videos));
  s.reference_videos = static_cast<int>(kv.get_int("synth.reference_videos", s.reference_videos));
  if (s.query_videos < 1) config_error("synth.query_videos must be >= 1");
  if (s.reference_videos < 3) config_error("synth.reference_videos must be >= 3");
  return s;
}

SynthCorpus synth_generate(const SynthConfig& config, const SynthSizes& sizes) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const Index channels = config.feature_channels;

  SynthCorpus out;
  auto draw_prototype = [&] {
    Vector v(channels);
    for (Index i = 0; i < channels; ++i) v[i] = config.feature_offset + config.sigma_proto * unit(rng);
    return v;
  };
  for (int c = 0; c < config.num_classes; ++c) out.prototypes.push_back(draw_prototype());
  out.background = draw_prototype();

  auto make_video = [&](const std::string& id) {
    const int dur_sec = uniform_int<int>(rng, config.min_video_sec, config.max_video_sec);
    const auto len = std::max<Index>(1, std::llround(dur_sec * config.snippets_per_second));
    const int cls = uniform_int<int>(rng, 0, config.num_classes - 1);
    const int count = uniform_int<int>(rng, config.min_instances, config.max_instances);

    std::vector<Index> lengths;
    Index used = 0;
    for (int i = 0; i < count; ++i) {
      const int sec = uniform_int<int>(rng, config.min_instance_sec, config.max_instance_sec);
      lengths.push_back(std::max<Index>(1, std::llround(sec * config.snippets_per_second)));
      used += lengths.back();
    }
    // Split the remaining background into count + 1 gaps; interior gaps get at
    // least one snippet so same-class instances never touch.
    Index free = len - used - (count - 1);
    if (free < 0) free = 0;
    std::vector<double> w(static_cast<std::size_t>(count + 1));
    double wsum = 0;
    for (auto& x : w) wsum += (x = std::uniform_real_distribution<double>(0.0, 1.0)(rng) + 1e-3);
    std::vector<Index> gaps(w.size());
    Index assigned = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      gaps[i] = static_cast<Index>(std::floor(static_cast<double>(free) * w[i] / wsum));
      assigned += gaps[i];
    }
    gaps.back() += free - assigned;

    AnnotatedVideo v;
    v.features.video_id = id;
    v.features.duration_sec = static_cast<double>(len) / config.snippets_per_second;
    v.features.data.resize(channels, len);
    std::vector<int> label(static_cast<std::size_t>(len), -1);
    Index pos = gaps[0];
    for (int i = 0; i < count; ++i) {
      const Index b = pos, e = std::min(len, pos + lengths[static_cast<std::size_t>(i)]);
      if (e > b) {
        for (Index k = b; k < e; ++k) label[static_cast<std::size_t>(k)] = cls;
        v.instances.push_back({cls, static_cast<double>(b) / config.snippets_per_second,
                               static_cast<double>(e) / config.snippets_per_second});
      }
      pos = e + 1 + gaps[static_cast<std::size_t>(i + 1)];
    }
    for (Index k = 0; k < len; ++k) {
      const int l = label[static_cast<std::size_t>(k)];
      const Vector& proto = l < 0 ? out.background : out.prototypes[static_cast<std::size_t>(l)];
      const double sigma = l < 0 ? config.sigma_bg : config.sigma_inst;
      // Values are kept float-representable so a corpus written to disk reads back identically.
      for (Index c = 0; c < channels; ++c)
        v.features.data(c, k) = static_cast<double>(static_cast<float>(proto[c] + sigma * unit(rng)));
    }
    return v;
  };

  for (int i = 0; i < sizes.query_videos; ++i) out.v1.push_back(make_video("q" + std::to_string(i)));
  for (int i = 0; i < sizes.reference_videos; ++i) out.v2.push_back(make_video("r" + std::to_string(i)));
  return out;
}

std::vector<const QueryClip*> Corpus::queries_in(QuerySplit s) const {
  std::vector<const QueryClip*> out;
  for (const auto& q : queries)
    if (q.split == s) out.push_back(&q);
  return out;
}

const ReferenceVideo* Corpus::find_reference(const std::string& id) const {
  for (const auto& r : references)
    if (r.video.id() == id) return &r;
  return nullptr;
}

const QueryClip* Corpus::find_query(const std::string& id) const {
  for (const auto& q : queries)
    if (q.id == id) return &q;
  return nullptr;
}

Corpus build_corpus(const std::vector<AnnotatedVideo>& v1, const std::vector<AnnotatedVideo>& v2,
                    const ClassSplit& split, std::mt19937_64& rng) {
  Corpus c;
  c.split = split;
  QuerySets qs = extract_query_clips(v1, split);
  for (auto* set : {&qs.train, &qs.val, &qs.test})
    for (auto& q : *set) c.queries.push_back(std::move(q));
  c.warnings = std::move(qs.warnings);
  ReferenceSet refs = build_reference_set(v2, rng);
  c.references = std::move(refs.videos);
  c.warnings.insert(c.warnings.end(), refs.warnings.begin(), refs.warnings.end());
  return c;
}

std::pair<std::vector<AnnotatedVideo>, std::vector<AnnotatedVideo>> split_halves(std::vector<AnnotatedVideo> videos,
                                                                                 std::mt19937_64& rng) {
  std::shuffle(videos.begin(), videos.end(), rng);
  const auto half = static_cast<long>(videos.size() / 2);
  std::vector<AnnotatedVideo> a(std::make_move_iterator(videos.begin()), std::make_move_iterator(videos.begin() + half));
  std::vector<AnnotatedVideo> b(std::make_move_iterator(videos.begin() + half), std::make_move_iterator(videos.end()));
  return {std::move(a), std::move(b)};
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "features" / "queries");
  fs::create_directories(dir / "features" / "references");

  std::vector<AnnotationRecord> qrec, rrec;
  nlohmann::json manifest;
  manifest["class_split"] = {{"train", corpus.split.train_classes},
                             {"val", corpus.split.val_classes},
                             {"test", corpus.split.test_classes}};
  nlohmann::json qsplits = {{"train", nlohmann::json::array()},
                            {"val", nlohmann::json::array()},
                            {"test", nlohmann::json::array()}};
  for (const auto& q : corpus.queries) {
    const std::string rel = "features/queries/" + q.id + ".svmf";
    save_features(q.features, dir / rel);
    qrec.push_back({q.id, q.features.duration_sec, rel, {{q.class_id, 0.0, q.features.duration_sec}}});
    qsplits[split_name(q.split)].push_back(q.id);
  }
  manifest["queries"] = qsplits;
  manifest["references"] = nlohmann::json::array();
  for (const auto& r : corpus.references) {
    const std::string rel = "features/references/" + r.video.id() + ".svmf";
    save_features(r.video.features, dir / rel);
    rrec.push_back({r.video.id(), r.video.duration(), rel, r.video.instances});
    manifest["references"].push_back({{"video_id", r.video.id()}, {"num_sources", r.num_sources}, {"sources", r.sources}});
  }
  manifest["warnings"] = nlohmann::json::array();
  for (const auto& w : corpus.warnings) manifest["warnings"].push_back({{"video_id", w.video_id}, {"message", w.message}});
  write_annotation_file(qrec, dir / "queries.jsonl");
  write_annotation_file(rrec, dir / "references.jsonl");
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) data_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Corpus read_corpus(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) data_error("cannot open corpus manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    data_error("corpus manifest: " + std::string(e.what()));
  }
  Corpus c;
  c.split.train_classes = manifest.at("class_split").at("train").get<std::vector<int>>();
  c.split.val_classes = manifest.at("class_split").at("val").get<std::vector<int>>();
  c.split.test_classes = manifest.at("class_split").at("test").get<std::vector<int>>();

  for (auto& v : load_annotated_videos(dir / "queries.jsonl")) {
    if (v.instances.size() != 1) data_error("query " + v.id() + " must carry exactly one instance");
    QueryClip q;
    q.id = v.id();
    q.source_video = v.id();
    q.class_id = v.instances.front().class_id;
    q.split = c.split.split_of(q.class_id);
    q.features = std::move(v.features);
    c.queries.push_back(std::move(q));
  }
  std::map<std::string, nlohmann::json> ref_meta;
  for (const auto& r : manifest.at("references")) ref_meta[r.at("video_id").get<std::string>()] = r;
  for (auto& v : load_annotated_videos(dir / "references.jsonl")) {
    ReferenceVideo r;
    const auto it = ref_meta.find(v.id());
    if (it != ref_meta.end()) {
      r.num_sources = it->second.at("num_sources").get<int>();
      r.sources = it->second.at("sources").get<std::vector<std::string>>();
    } else {
      r.sources = {v.id()};
    }
    r.video = std::move(v);
    c.references.push_back(std::move(r));
  }
  if (manifest.contains("warnings"))
    for (const auto& w : manifest["warnings"])
      c.warnings.push_back({w.at("video_id").get<std::string>(), w.at("message").get<std::string>()});
  return c;
}

}  // namespace svmr
