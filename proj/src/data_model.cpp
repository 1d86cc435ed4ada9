#include "svmr/data_model.hpp"

#include "svmr/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace svmr {
namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_f32(std::string& out, float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

}  // namespace

bool AnnotatedVideo::has_class(int class_id) const {
  return std::any_of(instances.begin(), instances.end(), [&](const auto& i) { return i.class_id == class_id; });
}

std::vector<int> AnnotatedVideo::classes() const {
  std::set<int> s;
  for (const auto& i : instances) s.insert(i.class_id);
  return {s.begin(), s.end()};
}

std::string encode_features(const FeatureSequence& seq) {
  if (seq.channels() < 1) data_error("invalid channel count");
  if (seq.length() < 1) data_error("invalid length");
  if (!(seq.duration_sec > 0.0) || !std::isfinite(seq.duration_sec)) data_error("invalid duration");
  std::string out = "SVMF";
  out.reserve(20 + 4 * static_cast<std::size_t>(seq.data.size()));
  put_u32(out, kFeatureFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(seq.channels()));
  put_u32(out, static_cast<std::uint32_t>(seq.length()));
  put_f32(out, static_cast<float>(seq.duration_sec));
  for (Index i = 0; i < seq.data.size(); ++i) {
    const double v = seq.data.data()[i];
    if (!std::isfinite(v)) data_error("non-finite feature value");
    put_f32(out, static_cast<float>(v));
  }
  return out;
}

FeatureSequence decode_features(const std::string& bytes, const std::string& video_id) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "SVMF") != 0) data_error("bad magic: not an SVMF feature file");
  if (bytes.size() < 20) data_error("truncated header");
  std::uint32_t version, channels, length;
  float duration;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&channels, bytes.data() + 8, 4);
  std::memcpy(&length, bytes.data() + 12, 4);
  std::memcpy(&duration, bytes.data() + 16, 4);
  if (version != kFeatureFormatVersion) data_error("unsupported SVMF version " + std::to_string(version));
  if (channels == 0) data_error("invalid channel count");
  if (length == 0) data_error("invalid length");
  if (!(duration > 0.0f) || !std::isfinite(duration)) data_error("invalid duration");
  const std::size_t count = static_cast<std::size_t>(channels) * length;
  if (bytes.size() != 20 + 4 * count)
    data_error("truncated payload: expected " + std::to_string(4 * count) + " bytes, got " +
               std::to_string(bytes.size() - 20));
  FeatureSequence seq;
  seq.video_id = video_id;
  seq.duration_sec = duration;
  seq.data.resize(channels, length);
  for (std::size_t i = 0; i < count; ++i) {
    float v;
    std::memcpy(&v, bytes.data() + 20 + 4 * i, 4);
    if (!std::isfinite(v)) data_error("non-finite feature value at index " + std::to_string(i));
    seq.data.data()[i] = v;
  }
  return seq;
}

FeatureSequence load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) data_error("cannot open feature file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_features(ss.str(), path.stem().string());
}

void save_features(const FeatureSequence& seq, const std::filesystem::path& path) {
  const std::string bytes = encode_features(seq);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) data_error("cannot write feature file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<AnnotationViolation> validate_annotations(const AnnotatedVideo& video) {
  std::vector<AnnotationViolation> out;
  const auto& inst = video.instances;
  const double duration = video.duration();
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const int idx = static_cast<int>(i);
    const auto& a = inst[i];
    if (!std::isfinite(a.t_start) || !std::isfinite(a.t_end)) {
      out.push_back({idx, "non-finite bound"});
      continue;
    }
    if (a.t_end <= a.t_start) out.push_back({idx, "empty interval"});
    if (a.t_start < 0.0) out.push_back({idx, "negative start"});
    if (a.t_end > duration) out.push_back({idx, "exceeds duration"});
    if (i > 0 && a.t_start < inst[i - 1].t_start) out.push_back({idx, "not sorted by t_start"});
    for (std::size_t j = 0; j < inst.size(); ++j) {
      const auto& b = inst[j];
      if (j == i || b.class_id != a.class_id) continue;
      const bool inside = b.t_start <= a.t_start && a.t_end <= b.t_end;
      // Identical same-class pairs are reported once, on the later index.
      if (inside && !(a == b && i < j)) {
        out.push_back({idx, "nested within instance " + std::to_string(j) + " of the same class"});
        break;
      }
    }
  }
  return out;
}

std::vector<AnnotationRecord> read_annotation_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) data_error("cannot open annotation file " + path.string());
  std::vector<AnnotationRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AnnotationRecord r;
      r.video_id = j.at("video_id").get<std::string>();
      r.duration_sec = j.at("duration_sec").get<double>();
      r.feature_path = j.at("feature_path").get<std::string>();
      for (const auto& i : j.at("instances"))
        r.instances.push_back({i.at("class_id").get<int>(), i.at("t_start").get<double>(), i.at("t_end").get<double>()});
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      data_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

void write_annotation_file(const std::vector<AnnotationRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) data_error("cannot write annotation file " + path.string());
  for (const auto& r : records) {
    nlohmann::json j;
    j["video_id"] = r.video_id;
    j["duration_sec"] = r.duration_sec;
    j["feature_path"] = r.feature_path;
    j["instances"] = nlohmann::json::array();
    for (const auto& i : r.instances)
      j["instances"].push_back({{"class_id", i.class_id}, {"t_start", i.t_start}, {"t_end", i.t_end}});
    out << j.dump() << '\n';
  }
}

std::vector<AnnotatedVideo> load_annotated_videos(const std::filesystem::path& annotation_path) {
  const auto records = read_annotation_file(annotation_path);
  const auto base = annotation_path.parent_path();
  std::vector<AnnotatedVideo> videos;
  videos.reserve(records.size());
  for (const auto& r : records) {
    std::filesystem::path fp = r.feature_path;
    if (fp.is_relative()) fp = base / fp;
    AnnotatedVideo v;
    v.features = load_features(fp);
    v.features.video_id = r.video_id;
    // The record's duration is authoritative; the f32 header copy may be rounded.
    v.features.duration_sec = r.duration_sec;
    v.instances = r.instances;
    std::stable_sort(v.instances.begin(), v.instances.end(),
                     [](const auto& a, const auto& b) { return a.t_start < b.t_start; });
    const auto violations = validate_annotations(v);
    if (!violations.empty())
      data_error("video " + r.video_id + " instance " + std::to_string(violations.front().instance) + ": " +
                 violations.front().message);
    videos.push_back(std::move(v));
  }
  return videos;
}

}  // namespace svmr
