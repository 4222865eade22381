#pragma once

#include <string>
#include <string_view>

namespace rhetoric {

// SHA-256, used for content-addressed cache keys and dataset hashes in
// run manifests.
std::string sha256_hex(std::string_view data);

// Hash of a file's bytes; throws if the file cannot be read.
std::string sha256_file_hex(const std::string& path);

}  // namespace rhetoric
