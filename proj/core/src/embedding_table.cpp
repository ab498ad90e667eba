#include "jianpu/embedding_table.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace jianpu {

namespace {

static_assert(sizeof(float) == 4);

void put_le(std::vector<std::uint8_t>& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint32_t le(int bytes) {
    need(bytes);
    std::uint32_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += bytes;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(le(4)); }
  [[nodiscard]] bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw EmbeddingFormatError("truncated embedding table");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

const std::vector<float>* EmbeddingTable::find(const std::string& id) const {
  const auto it = vectors_.find(id);
  return it == vectors_.end() ? nullptr : &it->second;
}

void EmbeddingTable::add(const std::string& id, std::vector<float> vec) {
  if (id.empty() || id.size() > 0xffff) throw EmbeddingFormatError("embedding id length out of range");
  if (dim_ == 0) dim_ = static_cast<std::uint32_t>(vec.size());
  if (vec.size() != dim_ || dim_ == 0) throw EmbeddingFormatError("embedding dimension mismatch for id " + id);
  double n2 = 0.0;
  for (float v : vec) n2 += static_cast<double>(v) * v;
  if (std::abs(std::sqrt(n2) - 1.0) > kNormTolerance) throw EmbeddingFormatError("embedding not unit-norm: " + id);
  if (!vectors_.emplace(id, std::move(vec)).second) throw EmbeddingFormatError("duplicate embedding id " + id);
  order_.push_back(id);
}

std::vector<std::uint8_t> EmbeddingTable::serialize() const {
  std::vector<std::uint8_t> out = {'E', 'M', 'B', '1'};
  put_le(out, static_cast<std::uint32_t>(order_.size()), 4);
  put_le(out, dim_, 4);
  for (const auto& id : order_) {
    put_le(out, static_cast<std::uint32_t>(id.size()), 2);
    out.insert(out.end(), id.begin(), id.end());
    for (float v : vectors_.at(id)) put_le(out, std::bit_cast<std::uint32_t>(v), 4);
  }
  return out;
}

EmbeddingTable EmbeddingTable::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(4) != "EMB1") throw EmbeddingFormatError("bad embedding table magic");
  const std::uint32_t count = r.le(4);
  EmbeddingTable t(r.le(4));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string id = r.str(r.le(2));
    std::vector<float> vec(t.dim_);
    for (auto& v : vec) v = r.f32();
    t.add(id, std::move(vec));
  }
  if (!r.done()) throw EmbeddingFormatError("trailing bytes after embedding table");
  return t;
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw EmbeddingFormatError("cannot write " + path.string());
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw EmbeddingFormatError("cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace jianpu
