#include "memdrift/note.hpp"

#include <sstream>

#include "memdrift/error.hpp"

namespace memdrift {

namespace {

constexpr const char* kPlaceholder = "{{SEED_CORPUS_JSON}}";

bool is_fence_line(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    return line.compare(i, 3, "```") == 0;
}

std::vector<std::string> fenced_blocks(const std::string& markdown) {
    std::vector<std::string> blocks;
    std::istringstream in(markdown);
    std::string line;
    bool open = false;
    std::string current;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_fence_line(line)) {
            if (open) {
                blocks.push_back(current);
                current.clear();
            }
            open = !open;
            continue;
        }
        if (open) {
            current += line;
            current += "\n";
        }
    }
    return blocks;
}

}  // namespace

PayloadNote parse_note(const std::string& markdown) {
    std::vector<SeedCorpus> found;
    for (const auto& block : fenced_blocks(markdown)) {
        try {
            found.push_back(parse_corpus(block));
        } catch (const Error&) {
            // Not a corpus block; prose and unrelated code are expected.
        }
    }
    if (found.empty()) throw Error("no payload found");
    if (found.size() > 1) throw Error("ambiguous payload: multiple corpus blocks");
    PayloadNote note;
    note.body = markdown;
    note.corpus = std::move(found.front());
    return note;
}

std::string craft_note(const SeedCorpus& corpus, const std::string& template_text) {
    const auto pos = template_text.find(kPlaceholder);
    if (pos == std::string::npos) {
        throw Error(std::string("note template missing placeholder ") + kPlaceholder);
    }
    std::string out = template_text;
    out.replace(pos, std::string(kPlaceholder).size(), corpus_to_json(corpus).dump(2));
    return out;
}

}  // namespace memdrift
