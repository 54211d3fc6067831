#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace aspecteval::digest {

/// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's contents, lowercase hex.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace aspecteval::digest
