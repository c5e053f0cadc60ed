#pragma once

#include <string>

#include "memdrift/corpus.hpp"

namespace memdrift {

/// A markdown payload note: benign-looking prose wrapping one fenced code
/// block whose content is a seed corpus.
struct PayloadNote {
    std::string body;
    SeedCorpus corpus;
};

/// Scan every fenced code block; exactly one must parse as a seed corpus.
/// Zero parseable blocks throw "no payload found", more than one throws
/// "ambiguous payload".
PayloadNote parse_note(const std::string& markdown);

/// Render the corpus into the template's {{SEED_CORPUS_JSON}} placeholder.
/// parse_note(craft_note(c, t)) round-trips to an equal corpus. Throws when
/// the template lacks the placeholder.
std::string craft_note(const SeedCorpus& corpus, const std::string& template_text);

}  // namespace memdrift
