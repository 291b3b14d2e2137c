#pragma once

#include <string>
#include <string_view>

namespace eileen {

/// Porter (1980) suffix-stripping stemmer, original algorithm.
/// Expects a lowercase ASCII word; other bytes are treated as consonants.
std::string porter_stem(std::string_view word);

}  // namespace eileen
