#pragma once

// Checkpoint container, version 1 (all integers and doubles little-endian):
//
//   bytes 0..7    magic "ASYMCKPT"
//   u32           format version (1)
//   u32           header length H
//   H bytes       JSON header, keys sorted: arch (text form), bn_channels
//                 (array), bn_epsilon, param_count, seed
//   f64[P]        learnable parameters
//   f64[P]        init snapshot
//   per BN layer  f64[C] running mean, f64[C] running variance
//   u64           FNV-1a hash of all preceding bytes
//
// Serialization is canonical: save(load(save(m))) == save(m) byte for byte.

#include <cstdint>
#include <string>
#include <vector>

#include "asym/model.hpp"

namespace asym {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> serialize_model(const Model& model);
Model deserialize_model(const std::vector<unsigned char>& bytes);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

// Hash of the serialized bytes; used as the checkpoint id in result sidecars.
std::string checkpoint_id(const Model& model);

}  // namespace asym
