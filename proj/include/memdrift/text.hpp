#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace memdrift {

/// Lowercase ASCII tokenization: split on any byte outside [a-z0-9] after
/// lowering [A-Z], drop empty fragments. No stemming, no stopwords.
/// Multi-byte UTF-8 sequences act as separators.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace memdrift
