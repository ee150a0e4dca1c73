#pragma once

#include <string>
#include <string_view>

namespace sumalign {

// Porter (1980) suffix stripping. Input is expected to be lowercase ASCII;
// anything containing a non-letter is returned unchanged.
std::string porter_stem(std::string_view word);

// Stem used throughout the toolkit: lowercases, then applies porter_stem
// until a fixpoint, which makes stem(stem(w)) == stem(w) hold for every w.
std::string stem(std::string_view word);

std::string to_lower(std::string_view word);

}  // namespace sumalign
