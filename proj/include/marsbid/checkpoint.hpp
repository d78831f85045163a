#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "marsbid/error.hpp"
#include "marsbid/policy_net.hpp"
#include "marsbid/text.hpp"

namespace marsbid {

// Binary layout (all integers and floats little-endian):
//   char[8]  magic "MARSDA01"
//   u32      format version
//   u32 n, n bytes   role tag
//   u32 n, n x u64   layer_dims
//   u32      action_dim
//   u8       squash flag
//   u64      training-step counter
//   u64      config hash
//   u64 n, n x f64   parameters in declaration order
//   u64      FNV-1a checksum of every preceding byte
inline constexpr std::string_view kCheckpointMagic = "MARSDA01";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string role;
  ActorCritic network;
  std::uint64_t training_steps = 0;
  std::uint64_t config_hash = 0;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.append(s); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw CheckpointError("corrupt checkpoint: truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  detail::ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.role.size()));
  w.bytes(ckpt.role);
  const auto& dims = ckpt.network.layer_dims();
  w.u32(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) w.u64(d);
  w.u32(static_cast<std::uint32_t>(ckpt.network.action_dim()));
  w.u8(ckpt.network.squash() ? 1 : 0);
  w.u64(ckpt.training_steps);
  w.u64(ckpt.config_hash);
  const auto params = ckpt.network.parameters();
  w.u64(params.size());
  for (double p : params) w.f64(p);
  std::string out = w.str();
  detail::ByteWriter tail;
  tail.u64(fnv1a(out));
  return out + tail.str();
}

/// Parses a checkpoint. When expected_layer_dims is given, a mismatch is an
/// error naming both shapes.
inline Checkpoint deserialize_checkpoint(std::string_view data,
                                         const std::optional<std::vector<std::size_t>>& expected_layer_dims = {}) {
  detail::ByteReader r(data);
  if (r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) throw CheckpointError("not a checkpoint: bad magic");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(detail::concat("checkpoint format version ", version, " unsupported (expected ",
                                        kCheckpointVersion, ")"));
  }
  Checkpoint ck;
  const auto role_len = r.u32();
  ck.role = std::string(r.bytes(role_len));
  const auto n_dims = r.u32();
  if (n_dims == 0 || n_dims > 64) throw CheckpointError("corrupt checkpoint: bad layer count");
  std::vector<std::size_t> dims(n_dims);
  for (auto& d : dims) d = static_cast<std::size_t>(r.u64());
  const auto action_dim = r.u32();
  const bool squash = r.u8() != 0;
  ck.training_steps = r.u64();
  ck.config_hash = r.u64();
  const auto n_params = r.u64();
  if (n_params > r.remaining() / 8) throw CheckpointError("corrupt checkpoint: truncated");
  std::vector<double> params(static_cast<std::size_t>(n_params));
  for (auto& p : params) p = r.f64();
  const std::size_t body_end = r.position();
  const auto checksum = r.u64();
  if (r.remaining() != 0) throw CheckpointError("corrupt checkpoint: trailing bytes");
  if (checksum != fnv1a(data.substr(0, body_end))) throw CheckpointError("corrupt checkpoint: checksum mismatch");

  auto fmt_dims = [](const std::vector<std::size_t>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "]";
  };
  if (expected_layer_dims && *expected_layer_dims != dims) {
    throw CheckpointError("checkpoint layer dims " + fmt_dims(dims) + " do not match configured dims " +
                          fmt_dims(*expected_layer_dims));
  }
  ActorCritic net(dims, action_dim, squash);
  if (net.parameter_count() != params.size()) throw CheckpointError("corrupt checkpoint: parameter count mismatch");
  std::copy(params.begin(), params.end(), net.parameters().begin());
  ck.network = std::move(net);
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path,
                                  const std::optional<std::vector<std::size_t>>& expected_layer_dims = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("missing checkpoint '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes, expected_layer_dims);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

}  // namespace marsbid
