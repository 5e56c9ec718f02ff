#pragma once

#include <string>
#include <string_view>

namespace scr::lexfeat {

// Porter suffix-stripping stemmer over lowercase ASCII words. Tokens
// shorter than three characters and non-alphabetic tokens pass through
// unchanged.
std::string stem(std::string_view word);

}  // namespace scr::lexfeat
