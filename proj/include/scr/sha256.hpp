#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace scr {

// SHA-256 digest as a lowercase hex string.
std::string sha256_hex(std::string_view data);

}  // namespace scr
