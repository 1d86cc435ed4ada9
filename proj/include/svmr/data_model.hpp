#pragma once

#include "svmr/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace svmr {

/// C_o x L matrix of per-snippet features plus the clip duration it spans.
struct FeatureSequence {
  std::string video_id;
  double duration_sec = 0.0;
  Matrix data;

  Index channels() const { return data.rows(); }
  Index length() const { return data.cols(); }
  double snippets_per_second() const { return static_cast<double>(length()) / duration_sec; }
};

struct TemporalInstance {
  int class_id = 0;
  double t_start = 0.0;
  double t_end = 0.0;

  bool operator==(const TemporalInstance&) const = default;
};

struct AnnotatedVideo {
  FeatureSequence features;
  std::vector<TemporalInstance> instances;

  const std::string& id() const { return features.video_id; }
  double duration() const { return features.duration_sec; }
  bool has_class(int class_id) const;
  std::vector<int> classes() const;  // sorted, unique
};

struct MomentPrediction {
  std::string video_id;
  double t_start = 0.0;
  double t_end = 0.0;
  double score = 0.0;
};

// SVMF feature files: "SVMF", u32 version = 1, u32 C_o, u32 L, f32 duration,
// then C_o * L f32 values, channel-major. All little-endian.
inline constexpr std::uint32_t kFeatureFormatVersion = 1;

FeatureSequence load_features(const std::filesystem::path& path);
void save_features(const FeatureSequence& seq, const std::filesystem::path& path);
std::string encode_features(const FeatureSequence& seq);
FeatureSequence decode_features(const std::string& bytes, const std::string& video_id);

struct AnnotationViolation {
  int instance = -1;
  std::string message;
};

std::vector<AnnotationViolation> validate_annotations(const AnnotatedVideo& video);

/// One line of an annotation file.
struct AnnotationRecord {
  std::string video_id;
  double duration_sec = 0.0;
  std::string feature_path;
  std::vector<TemporalInstance> instances;
};

std::vector<AnnotationRecord> read_annotation_file(const std::filesystem::path& path);
void write_annotation_file(const std::vector<AnnotationRecord>& records, const std::filesystem::path& path);

/// Loads every record's feature file (relative paths resolve against the
/// annotation file's directory) and checks the record against the features.
std::vector<AnnotatedVideo> load_annotated_videos(const std::filesystem::path& annotation_path);

}  // namespace svmr
