#include "ttfs/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace ttfs {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian host");

void BinaryWriter::u32(std::uint32_t v) { os_.write(reinterpret_cast<const char*>(&v), sizeof v); }
void BinaryWriter::u64(std::uint64_t v) { os_.write(reinterpret_cast<const char*>(&v), sizeof v); }
void BinaryWriter::f64(double v) { os_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  os_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::vec(const VecX& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
}

void BinaryWriter::mlp(const Mlp& net) {
  u32(static_cast<std::uint32_t>(net.widths().size()));
  for (int w : net.widths()) u32(static_cast<std::uint32_t>(w));
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto W = net.weight(l);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) f64(W(r, c));
    }
    const auto b = net.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) f64(b(i));
  }
}

void BinaryWriter::optimizer(const OptimizerState& opt) {
  vec(opt.m);
  vec(opt.v);
  i64(opt.step);
  f64(opt.lr);
  f64(opt.beta1);
  f64(opt.beta2);
  f64(opt.eps);
  i64(opt.skipped);
}

void BinaryReader::read(char* dst, std::size_t n) {
  is_.read(dst, static_cast<std::streamsize>(n));
  if (!is_ || static_cast<std::size_t>(is_.gcount()) != n) {
    throw CheckpointError("checkpoint truncated");
  }
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

double BinaryReader::f64() {
  double v;
  read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::string BinaryReader::str() {
  const std::uint64_t n = u64();
  if (n > (1ull << 32)) throw CheckpointError("checkpoint string too long");
  std::string s(n, '\0');
  read(s.data(), n);
  return s;
}

VecX BinaryReader::vec() {
  const std::uint64_t n = u64();
  if (n > (1ull << 34)) throw CheckpointError("checkpoint vector too long");
  VecX v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f64();
  return v;
}

Mlp BinaryReader::mlp() {
  const std::uint32_t count = u32();
  if (count < 2 || count > 64) throw CheckpointError("checkpoint: bad layer count");
  std::vector<int> widths(count);
  for (auto& w : widths) {
    w = static_cast<int>(u32());
    if (w <= 0 || w > (1 << 20)) throw CheckpointError("checkpoint: bad layer width");
  }
  Mlp net(widths);
  for (int l = 0; l < net.num_layers(); ++l) {
    auto W = net.weight(l);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = f64();
    }
    auto b = net.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = f64();
  }
  return net;
}

OptimizerState BinaryReader::optimizer() {
  OptimizerState o;
  o.m = vec();
  o.v = vec();
  o.step = i64();
  o.lr = f64();
  o.beta1 = f64();
  o.beta2 = f64();
  o.eps = f64();
  o.skipped = i64();
  return o;
}

}  // namespace ttfs
