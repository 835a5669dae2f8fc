// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint: magic "SEQLCKPT", u32 version, u32-length-prefixed JSON
// header (model config plus free-form metadata), u32 tensor count, then per
// tensor a u32-length-prefixed name, u64 rows, u64 cols and the column-major
// float64 values. All integers and floats are little-endian.
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "seqloss/network.hpp"

namespace seqloss {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Seq2SeqModel model;
  std::map<std::string, std::string> metadata;
};

/// Written to a temporary sibling and renamed into place.
void save_checkpoint(const std::filesystem::path &path, const Seq2SeqModel &model,
                     const std::map<std::string, std::string> &metadata = {});

/// Throws FormatError on a bad magic/version or tensors that do not match the
/// stored configuration.
Checkpoint load_checkpoint(const std::filesystem::path &path);

}  // namespace seqloss
