#pragma once

#include "svmr/tensor.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace svmr {

using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct GalleryEntry {
  std::string video_id;
  FloatMatrix embedding;  // d_e x T_emb
};

struct SearchHit {
  std::string video_id;
  double score = 0.0;
};

/// Exhaustive max-cosine index over reference embeddings. Immutable once built.
class GalleryIndex {
 public:
  GalleryIndex() = default;
  /// Order-preserving; rejects duplicate ids and inconsistent shapes.
  static GalleryIndex build(std::vector<GalleryEntry> entries);
  static GalleryIndex build(const std::vector<std::pair<std::string, Matrix>>& entries);

  /// Top-K by descending score, ties by ascending video id.
  std::vector<SearchHit> search(const Vector& query, std::size_t k) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  Index embed_dim() const { return embed_dim_; }
  Index slots() const { return slots_; }
  const std::vector<GalleryEntry>& entries() const { return entries_; }

  // "SVMIDX", u32 version = 1, u32 d_e, u32 T_emb, u32 count, then per entry
  // u32 id length, id bytes, d_e * T_emb f32 values (row-major d_e x T_emb).
  std::string encode() const;
  static GalleryIndex decode(const std::string& bytes);
  void save(const std::filesystem::path& path) const;
  static GalleryIndex load(const std::filesystem::path& path);

 private:
  std::vector<GalleryEntry> entries_;
  std::vector<std::vector<double>> inv_norms_;  // per entry, per column
  Index embed_dim_ = 0;
  Index slots_ = 0;
};

}  // namespace svmr
