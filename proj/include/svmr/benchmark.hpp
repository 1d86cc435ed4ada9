#pragma once

// Benchmark construction: class-disjoint query splits, multi-action reference
// videos made by splicing instance segments into background, and a synthetic
// class-conditioned feature generator.

#include "svmr/config.hpp"
#include "svmr/data_model.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace svmr {

enum class QuerySplit { Train, Val, Test };
const char* split_name(QuerySplit s);

struct ClassSplit {
  std::vector<int> train_classes;
  std::vector<int> val_classes;
  std::vector<int> test_classes;

  /// Sorted classes; the first go to train, then floor(n * val_fraction) to
  /// val, and the last floor(n * test_fraction) to test.
  static ClassSplit from_proportions(std::vector<int> classes, double val_fraction = 0.1,
                                     double test_fraction = 0.1);
  /// Throws if the class is in none of the three sets.
  QuerySplit split_of(int class_id) const;
  bool contains(int class_id) const;
};

struct QueryClip {
  std::string id;
  std::string source_video;
  int class_id = 0;
  QuerySplit split = QuerySplit::Train;
  FeatureSequence features;
};

struct BuildWarning {
  std::string video_id;
  std::string message;
};

struct QuerySets {
  std::vector<QueryClip> train, val, test;
  std::vector<BuildWarning> warnings;
};

/// Half-open snippet range [begin, end) covered by a time interval.
struct SnippetRange {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
};
SnippetRange snippet_range(const FeatureSequence& seq, double t_start, double t_end);

QuerySets extract_query_clips(const std::vector<AnnotatedVideo>& v1, const ClassSplit& split);

/// Inserts source snippets [segment.begin, segment.end) into target before
/// snippet `at`. Target instances at or after the insertion time shift by the
/// segment duration; `instance` (in source seconds) is added at its new time.
void splice_segment(AnnotatedVideo& target, const AnnotatedVideo& source, SnippetRange segment,
                    const TemporalInstance& instance, Index at);

/// Snippet boundaries of `video` that are a background timestamp: not strictly
/// inside any instance and adjacent to at least one background snippet.
std::vector<Index> background_insertion_points(const AnnotatedVideo& video);

inline constexpr double kSegmentContextSec = 1.0;

/// Splices one or more instance segments of every supplement into base.
/// Supplements whose segments cannot be placed are listed in `failures`.
AnnotatedVideo merge_videos(const AnnotatedVideo& base, const std::vector<AnnotatedVideo>& supplements,
                            std::mt19937_64& rng, std::vector<BuildWarning>* failures = nullptr);

struct ReferenceVideo {
  AnnotatedVideo video;
  int num_sources = 1;
  std::vector<std::string> sources;
};

struct ReferenceSet {
  std::vector<ReferenceVideo> videos;
  std::vector<BuildWarning> warnings;
};

/// ceil(n/3) videos pass through, floor(n/3) become two-source merges and the
/// rest three-source merges. The non-kept videos serve once each as a base;
/// supplements are drawn from the whole set.
ReferenceSet build_reference_set(const std::vector<AnnotatedVideo>& v2, std::mt19937_64& rng,
                                 int max_retries = 100);

struct SynthConfig {
  int num_classes = 20;
  int feature_channels = 64;
  double snippets_per_second = 1.0;
  double sigma_proto = 1.0;
  double sigma_inst = 0.6;
  double sigma_bg = 0.6;
  double feature_offset = 0.0;
  int min_video_sec = 40;
  int max_video_sec = 100;
  int min_instances = 1;
  int max_instances = 2;
  int min_instance_sec = 6;
  int max_instance_sec = 18;
  std::uint64_t seed = 0;

  void validate() const;
  /// Keys "synth.*"; the seed is not read.
  void write(KeyValueConfig& kv) const;
  static SynthConfig read(const KeyValueConfig& kv);
};

struct SynthSizes {
  int query_videos = 200;
  int reference_videos = 400;

  void write(KeyValueConfig& kv) const;
  static SynthSizes read(const KeyValueConfig& kv);
};

struct SynthCorpus {
  std::vector<Vector> prototypes;  // one per class
  Vector background;
  std::vector<AnnotatedVideo> v1;
  std::vector<AnnotatedVideo> v2;
};

/// Raw single-class videos for both halves. Every video carries instances of
/// one class; the reference set later mixes classes by merging.
SynthCorpus synth_generate(const SynthConfig& config, const SynthSizes& sizes);

/// Queries, reference set and class split: everything training and
/// evaluation consume.
struct Corpus {
  ClassSplit split;
  std::vector<QueryClip> queries;
  std::vector<ReferenceVideo> references;
  std::vector<BuildWarning> warnings;

  std::vector<const QueryClip*> queries_in(QuerySplit s) const;
  const ReferenceVideo* find_reference(const std::string& id) const;
  const QueryClip* find_query(const std::string& id) const;
};

Corpus build_corpus(const std::vector<AnnotatedVideo>& v1, const std::vector<AnnotatedVideo>& v2,
                    const ClassSplit& split, std::mt19937_64& rng);

/// Randomly splits annotated videos into two even halves (V1, V2).
std::pair<std::vector<AnnotatedVideo>, std::vector<AnnotatedVideo>> split_halves(std::vector<AnnotatedVideo> videos,
                                                                                 std::mt19937_64& rng);

/// Layout: manifest.json, queries.jsonl, references.jsonl, features/.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace svmr
