#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "ttfs/nn.hpp"

namespace ttfs {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian binary writer for checkpoint containers.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void str(const std::string& s);
  void vec(const VecX& v);
  /// Layer-width list, then each layer's weights (row-major) and biases.
  void mlp(const Mlp& net);
  void optimizer(const OptimizerState& opt);

 private:
  std::ostream& os_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& is) : is_(is) {}
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  VecX vec();
  Mlp mlp();
  OptimizerState optimizer();

 private:
  void read(char* dst, std::size_t n);
  std::istream& is_;
};

inline constexpr char kCheckpointMagic[8] = {'T', 'T', 'F', 'S', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace ttfs
