#include "svmr/checkpoint.hpp"

#include "svmr/error.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace svmr {
namespace {

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }

struct Reader {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) data_error("checkpoint truncated at byte " + std::to_string(pos));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  float f32() {
    need(4);
    float v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

std::string encode_checkpoint(const std::string& magic, const ParamSet& params) {
  std::string out = magic;
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(params.entries().size()));
  for (const auto& [name, m] : params.entries()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Index i = 0; i < m.size(); ++i) {
      if (!std::isfinite(m.data()[i])) numeric_error("checkpoint: non-finite value in block " + name);
      const auto v = static_cast<float>(m.data()[i]);
      out.append(reinterpret_cast<const char*>(&v), 4);
    }
  }
  return out;
}

ParamSet decode_checkpoint(const std::string& magic, const std::string& bytes) {
  if (bytes.compare(0, magic.size(), magic) != 0) data_error("bad checkpoint magic, expected " + magic);
  Reader r{bytes, magic.size()};
  const auto version = r.u32();
  if (version != kCheckpointVersion) data_error("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.u32();
  ParamSet params;
  for (std::uint32_t b = 0; b < count; ++b) {
    const auto name = r.str(r.u32());
    const auto rank = r.u32();
    if (rank != 2) data_error("checkpoint block " + name + ": unsupported rank " + std::to_string(rank));
    const auto rows = r.u32(), cols = r.u32();
    Matrix& m = params.add(name, rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = r.f32();
    if (!m.allFinite()) data_error("checkpoint block " + name + " holds non-finite values");
  }
  if (r.pos != bytes.size()) data_error("checkpoint has trailing bytes");
  return params;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) data_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) data_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void save_checkpoint(const std::filesystem::path& path, const std::string& magic, const ParamSet& params) {
  write_file_bytes(path, encode_checkpoint(magic, params));
}

ParamSet load_checkpoint(const std::filesystem::path& path, const std::string& magic) {
  return decode_checkpoint(magic, read_file_bytes(path));
}

}  // namespace svmr
