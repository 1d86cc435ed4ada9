#include "svmr/gallery.hpp"

#include "svmr/checkpoint.hpp"
#include "svmr/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

namespace svmr {
namespace {

constexpr std::uint32_t kIndexVersion = 1;
const std::string kIndexMagic = "SVMIDX";

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }

}  // namespace

GalleryIndex GalleryIndex::build(std::vector<GalleryEntry> entries) {
  GalleryIndex idx;
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.video_id).second) data_error("gallery: duplicate video_id '" + e.video_id + "'");
    if (idx.entries_.empty() && idx.embed_dim_ == 0) {
      idx.embed_dim_ = e.embedding.rows();
      idx.slots_ = e.embedding.cols();
    }
    if (e.embedding.rows() != idx.embed_dim_ || e.embedding.cols() != idx.slots_)
      data_error("gallery: embedding of '" + e.video_id + "' has shape " + std::to_string(e.embedding.rows()) + "x" +
                 std::to_string(e.embedding.cols()) + ", expected " + std::to_string(idx.embed_dim_) + "x" +
                 std::to_string(idx.slots_));
    if (!e.embedding.allFinite()) data_error("gallery: non-finite embedding for '" + e.video_id + "'");
  }
  idx.entries_ = std::move(entries);
  idx.inv_norms_.reserve(idx.entries_.size());
  for (const auto& e : idx.entries_) {
    std::vector<double> inv(static_cast<std::size_t>(idx.slots_));
    for (Index c = 0; c < idx.slots_; ++c) {
      const double n = e.embedding.col(c).cast<double>().norm();
      inv[static_cast<std::size_t>(c)] = n > 0.0 ? 1.0 / n : 0.0;
    }
    idx.inv_norms_.push_back(std::move(inv));
  }
  return idx;
}

GalleryIndex GalleryIndex::build(const std::vector<std::pair<std::string, Matrix>>& entries) {
  std::vector<GalleryEntry> out;
  out.reserve(entries.size());
  for (const auto& [id, m] : entries) out.push_back({id, m.cast<float>()});
  return build(std::move(out));
}

std::vector<SearchHit> GalleryIndex::search(const Vector& query, std::size_t k) const {
  if (k < 1) data_error("gallery search: K must be >= 1");
  if (entries_.empty()) return {};
  if (query.size() != embed_dim_)
    data_error("gallery search: query dim " + std::to_string(query.size()) + " != index dim " +
               std::to_string(embed_dim_));
  const double qn = query.norm();
  if (qn == 0.0) data_error("degenerate query embedding");
  const Vector q = query / qn;

  std::vector<SearchHit> hits;
  hits.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const RowVector dots = q.transpose() * entries_[i].embedding.cast<double>();
    double best = -1.0;
    for (Index c = 0; c < slots_; ++c) {
      const double cs = dots[c] * inv_norms_[i][static_cast<std::size_t>(c)];
      best = std::max(best, std::clamp(cs, -1.0, 1.0));
    }
    hits.push_back({entries_[i].video_id, best});
  }
  const std::size_t top = std::min(k, hits.size());
  auto better = [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.video_id < b.video_id;
  };
  std::partial_sort(hits.begin(), hits.begin() + static_cast<long>(top), hits.end(), better);
  hits.resize(top);
  return hits;
}

std::string GalleryIndex::encode() const {
  std::string out = kIndexMagic;
  put_u32(out, kIndexVersion);
  put_u32(out, static_cast<std::uint32_t>(embed_dim_));
  put_u32(out, static_cast<std::uint32_t>(slots_));
  put_u32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    put_u32(out, static_cast<std::uint32_t>(e.video_id.size()));
    out += e.video_id;
    out.append(reinterpret_cast<const char*>(e.embedding.data()), 4 * static_cast<std::size_t>(e.embedding.size()));
  }
  return out;
}

GalleryIndex GalleryIndex::decode(const std::string& bytes) {
  if (bytes.compare(0, kIndexMagic.size(), kIndexMagic) != 0) data_error("bad index magic");
  std::size_t pos = kIndexMagic.size();
  auto u32 = [&] {
    if (pos + 4 > bytes.size()) data_error("index truncated");
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  };
  const auto version = u32();
  if (version != kIndexVersion) data_error("unsupported index version " + std::to_string(version));
  const Index dim = u32(), slots = u32();
  const auto count = u32();
  std::vector<GalleryEntry> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = u32();
    if (pos + len > bytes.size()) data_error("index truncated");
    GalleryEntry e{bytes.substr(pos, len), FloatMatrix(dim, slots)};
    pos += len;
    const std::size_t nbytes = 4 * static_cast<std::size_t>(dim * slots);
    if (pos + nbytes > bytes.size()) data_error("index truncated");
    std::memcpy(e.embedding.data(), bytes.data() + pos, nbytes);
    pos += nbytes;
    entries.push_back(std::move(e));
  }
  if (pos != bytes.size()) data_error("index has trailing bytes");
  GalleryIndex idx = build(std::move(entries));
  idx.embed_dim_ = dim;
  idx.slots_ = slots;
  return idx;
}

void GalleryIndex::save(const std::filesystem::path& path) const { write_file_bytes(path, encode()); }

GalleryIndex GalleryIndex::load(const std::filesystem::path& path) { return decode(read_file_bytes(path)); }

}  // namespace svmr
