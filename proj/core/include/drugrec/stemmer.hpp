#pragma once

#include <string>
#include <string_view>

namespace drugrec::text {

// One pass of the classic Porter (1980) suffix-stripping algorithm.
// Input is expected to be lowercase ASCII; words shorter than 3 characters
// are returned unchanged.
std::string porter_step(std::string_view word);

// porter_step iterated to a fixed point. A single Porter pass is not always
// idempotent ("uses" -> "use" -> "us"); iterating makes stem(stem(w)) ==
// stem(w) hold. Porter never lengthens a word, so this terminates.
std::string stem(std::string_view word);

}  // namespace drugrec::text
