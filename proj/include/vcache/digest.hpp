#pragma once

#include <string>
#include <string_view>

namespace vcache {

// First 16 lowercase hex digits of SHA-256(data). Used for content
// addressing of templates and for environment audit digests.
std::string short_sha256_hex(std::string_view data);

}  // namespace vcache
