// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace seqloss {

/// SHA-1 of "blob <size>\0<bytes>" in lowercase hex, the same id `git hash-object` prints.
std::string git_blob_hash(std::string_view bytes);

std::string git_blob_hash_file(const std::filesystem::path &path);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path &path, std::string_view contents);

}  // namespace seqloss
