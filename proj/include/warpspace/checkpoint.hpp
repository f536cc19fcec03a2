// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Self-describing binary checkpoint container:
//
//   magic[16] = "WARPSPACE-CKPT\0\0"
//   payload:
//     u8  version (currently 1)
//     u64 K, N, d            (little-endian, as all integers below)
//     u8  flags              (bit 0: bipolar, bit 1: scales frozen)
//     u64 generator seed, u64 image size
//     f64 eps_min, f64 eps_max
//     f64[K*N*d] support tensor, f64[K*N] weights, f64[K*N] log-scales
//     u64 tensor count, then per reconstructor tensor:
//       u64 name length, name bytes, u64 rank, u64 dims..., f64 data...
//   u32 CRC-32 (IEEE) of the payload
//
// Round-trips are bit-exact; any byte flip fails the checksum.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "warpspace/network.hpp"
#include "warpspace/reconstructor.hpp"

namespace warpspace {

struct Checkpoint {
  WarpingNetwork net;
  Reconstructor recon;
  std::uint64_t gen_seed = 0;
  int image_size = 0;
  double eps_min = 0.25;
  double eps_max = 2.0;
};

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t len);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);

/// Throws CheckpointError on bad magic, version, checksum, truncation, or
/// inconsistent dimensions.
Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace warpspace
