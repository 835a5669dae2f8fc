// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "seqloss/corpus.hpp"

namespace seqloss {

/// Template-generated Java-like methods with matching one-line summaries
/// ("returns the width", "adds a node to the list", ...). Ids are
/// `<prefix>-<k>`; content is a deterministic function of the seed.
std::vector<RawRecord> synthetic_records(std::size_t count, std::uint64_t seed,
                                         const std::string &prefix = "syn");

struct SyntheticSplits {
  std::vector<RawRecord> train, val, test;
};

SyntheticSplits synthetic_splits(std::size_t train, std::size_t val, std::size_t test,
                                 std::uint64_t seed);

}  // namespace seqloss
