#ifndef INOC_SHA256_HPP
#define INOC_SHA256_HPP

#include <string>

namespace inoc {

// Hex digest of the SHA-256 hash of `data`. Used for request hashes and
// config hashes; stable across platforms.
std::string sha256_hex(const std::string& data);

}  // namespace inoc

#endif
