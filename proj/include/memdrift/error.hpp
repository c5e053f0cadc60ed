#pragma once

#include <stdexcept>
#include <string>

namespace memdrift {

/// Domain error. Messages carry stable substrings that callers and the CLI
/// match on ("no store", "no payload found", "unembeddable text", ...), so
/// wording changes are breaking changes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace memdrift
