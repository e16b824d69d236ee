#pragma once

#include <string>

namespace unim::digest {

// Hex-encoded SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);  // throws IngestError

}  // namespace unim::digest
