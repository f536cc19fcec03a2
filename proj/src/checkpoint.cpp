// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "warpspace/errors.hpp"

namespace warpspace {

namespace {

constexpr std::array<std::uint8_t, 16> kMagic = {'W', 'A', 'R', 'P', 'S', 'P', 'A', 'C',
                                                 'E', '-', 'C', 'K', 'P', 'T', 0, 0};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kFlagBipolar = 1;
constexpr std::uint8_t kFlagScalesFrozen = 2;

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_vector(std::vector<std::uint8_t>& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

class Cursor {
 public:
  Cursor(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(data_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  Eigen::VectorXd f64_vector(std::size_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f64();
    return v;
  }
  bool at_end() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > size_) throw CheckpointError("truncated checkpoint");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

/// Guard against absurd counts before allocating.
std::size_t checked_count(std::uint64_t v, const char* what) {
  if (v > (1ULL << 32)) throw CheckpointError(std::string("implausible ") + what + " count");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int b = 0; b < 8; ++b) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint) {
  const WarpingNetwork& net = checkpoint.net;
  std::vector<std::uint8_t> payload;
  put_u8(payload, kVersion);
  put_u64(payload, static_cast<std::uint64_t>(net.num_warpings()));
  put_u64(payload, static_cast<std::uint64_t>(net.supports_per_warping()));
  put_u64(payload, static_cast<std::uint64_t>(net.dim()));
  std::uint8_t flags = 0;
  if (net.bipolar()) flags |= kFlagBipolar;
  if (net.scales_frozen()) flags |= kFlagScalesFrozen;
  put_u8(payload, flags);
  put_u64(payload, checkpoint.gen_seed);
  put_u64(payload, static_cast<std::uint64_t>(checkpoint.image_size));
  put_f64(payload, checkpoint.eps_min);
  put_f64(payload, checkpoint.eps_max);
  put_vector(payload, net.support_tensor_flat());
  put_vector(payload, net.weight_matrix_flat());
  put_vector(payload, net.log_scale_matrix_flat());

  const auto& params = checkpoint.recon.parameters();
  put_u64(payload, params.size());
  for (const NamedTensor& p : params) {
    put_u64(payload, p.name.size());
    payload.insert(payload.end(), p.name.begin(), p.name.end());
    put_u64(payload, p.shape.size());
    for (int d : p.shape) put_u64(payload, static_cast<std::uint64_t>(d));
    put_vector(payload, p.value);
  }

  std::vector<std::uint8_t> out;
  out.reserve(kMagic.size() + payload.size() + 4);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.insert(out.end(), payload.begin(), payload.end());
  const std::uint32_t crc = crc32_ieee(payload.data(), payload.size());
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(crc >> (8 * b)));
  return out;
}

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagic.size() + 4) throw CheckpointError("file too small to be a checkpoint");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw CheckpointError("bad magic: not a checkpoint file");

  const std::size_t payload_len = bytes.size() - kMagic.size() - 4;
  const std::uint8_t* payload = bytes.data() + kMagic.size();
  std::uint32_t stored = 0;
  for (int b = 0; b < 4; ++b)
    stored |= static_cast<std::uint32_t>(bytes[kMagic.size() + payload_len + b]) << (8 * b);
  if (crc32_ieee(payload, payload_len) != stored)
    throw CheckpointError("checksum mismatch: checkpoint is corrupted");

  Cursor cur(payload, payload_len);
  const std::uint8_t version = cur.u8();
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const std::size_t num_warpings = checked_count(cur.u64(), "warping");
  const std::size_t supports = checked_count(cur.u64(), "support");
  const std::size_t dim = checked_count(cur.u64(), "dimension");
  const std::uint8_t flags = cur.u8();

  Checkpoint checkpoint;
  checkpoint.gen_seed = cur.u64();
  checkpoint.image_size = static_cast<int>(checked_count(cur.u64(), "image size"));
  checkpoint.eps_min = cur.f64();
  checkpoint.eps_max = cur.f64();

  const Eigen::VectorXd support_tensor = cur.f64_vector(num_warpings * supports * dim);
  const Eigen::VectorXd weights = cur.f64_vector(num_warpings * supports);
  const Eigen::VectorXd log_scales = cur.f64_vector(num_warpings * supports);

  const std::size_t tensor_count = checked_count(cur.u64(), "tensor");
  std::vector<NamedTensor> params;
  params.reserve(tensor_count);
  for (std::size_t i = 0; i < tensor_count; ++i) {
    NamedTensor p;
    p.name = cur.bytes(checked_count(cur.u64(), "name length"));
    const std::size_t rank = checked_count(cur.u64(), "rank");
    p.shape.resize(rank);
    for (std::size_t r = 0; r < rank; ++r)
      p.shape[r] = static_cast<int>(checked_count(cur.u64(), "dimension"));
    p.value = cur.f64_vector(static_cast<std::size_t>(shape_numel(p.shape)));
    params.push_back(std::move(p));
  }
  if (!cur.at_end()) throw CheckpointError("trailing bytes after checkpoint payload");

  try {
    checkpoint.net = WarpingNetwork::from_tensors(
        static_cast<int>(num_warpings), static_cast<int>(supports), static_cast<int>(dim),
        (flags & kFlagBipolar) != 0, (flags & kFlagScalesFrozen) != 0, support_tensor, weights,
        log_scales);
    const int in_channels = params.empty() || params[0].shape.size() != 4
                                ? 0
                                : params[0].shape[1];
    checkpoint.recon = Reconstructor::from_parameters(static_cast<int>(num_warpings),
                                                      in_channels, std::move(params));
  } catch (const ContractViolation& e) {
    throw CheckpointError(std::string("inconsistent checkpoint contents: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("inconsistent checkpoint contents: ") + e.what());
  }
  return checkpoint;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw CheckpointError("failed reading checkpoint '" + path + "'");
  return parse_checkpoint(bytes);
}

}  // namespace warpspace
