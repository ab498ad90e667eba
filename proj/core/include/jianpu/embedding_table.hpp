#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace jianpu {

class EmbeddingFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// id -> unit-norm vector. Binary layout ("EMB1"): magic, u32 count,
/// u32 dim, then per record u16 id length, UTF-8 id bytes, dim float32.
/// All integers and floats little-endian.
class EmbeddingTable {
 public:
  static constexpr double kNormTolerance = 1e-3;

  EmbeddingTable() = default;
  explicit EmbeddingTable(std::uint32_t dim) : dim_(dim) {}

  [[nodiscard]] std::uint32_t dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return order_.size(); }
  [[nodiscard]] const std::vector<std::string>& ids() const { return order_; }
  [[nodiscard]] bool contains(const std::string& id) const { return vectors_.count(id) != 0; }
  /// nullptr when absent.
  [[nodiscard]] const std::vector<float>* find(const std::string& id) const;

  /// Rejects duplicates, wrong dims and non-unit vectors.
  void add(const std::string& id, std::vector<float> vec);

  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  static EmbeddingTable deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::filesystem::path& path) const;
  static EmbeddingTable load(const std::filesystem::path& path);

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> order_;
  std::map<std::string, std::vector<float>> vectors_;
};

}  // namespace jianpu
