#include "nff/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace nff {

ParseError::ParseError(const std::string& where, std::size_t position, const std::string& message)
    : Error(fmt::format("{} {}: {}", where, position, message)), position_(position) {}

const std::vector<AnnotatedSentence>& Corpus::split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) throw Error(fmt::format("corpus has no split named '{}'", name));
    return it->second;
}

std::vector<std::string> collect_labels(const std::vector<AnnotatedSentence>& sentences) {
    std::set<std::string> labels;
    for (const auto& s : sentences) {
        for (const auto& e : s.entities) labels.insert(e.label);
    }
    return {labels.begin(), labels.end()};
}

CorpusStats compute_stats(const std::vector<AnnotatedSentence>& sentences) {
    CorpusStats stats;
    std::size_t total_length = 0;
    for (const auto& sentence : sentences) {
        ++stats.sentences;
        bool any_nested = false;
        for (const auto& e : sentence.entities) {
            ++stats.entities;
            total_length += e.span.length();
            stats.max_length = std::max(stats.max_length, e.span.length());
            const bool nested = std::any_of(sentence.entities.begin(), sentence.entities.end(),
                                            [&](const Entity& o) { return is_strictly_within(e.span, o.span); });
            if (nested) {
                ++stats.nested_entities;
                any_nested = true;
            }
        }
        if (any_nested) ++stats.nested_sentences;
    }
    if (stats.sentences > 0) {
        stats.nested_sentence_pct = 100.0 * static_cast<double>(stats.nested_sentences) / stats.sentences;
    }
    if (stats.entities > 0) {
        stats.nested_entity_pct = 100.0 * static_cast<double>(stats.nested_entities) / stats.entities;
        stats.average_length = static_cast<double>(total_length) / stats.entities;
    }
    return stats;
}

// ---- column format ----------------------------------------------------------

namespace {

struct TaggedToken {
    std::string token;
    std::string tag;
    std::size_t line = 0;
};

struct RawSentence {
    std::vector<TaggedToken> rows;
    std::size_t doc = 0;
};

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t begin = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > begin) fields.push_back(line.substr(begin, i - begin));
    }
    return fields;
}

// Tag as (prefix, type); prefix is 'O', 'B' or 'I'.
std::pair<char, std::string> split_tag(const TaggedToken& row) {
    const std::string& tag = row.tag;
    if (tag == "O") return {'O', {}};
    if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
        std::string type = tag.substr(2);
        if (type == kNonEntity) throw ParseError("line", row.line, "entity type 'O' is reserved");
        return {tag[0], std::move(type)};
    }
    throw ParseError("line", row.line, fmt::format("unrecognized tag '{}'", tag));
}

std::vector<RawSentence> read_columns(std::string_view text) {
    std::vector<RawSentence> sentences;
    RawSentence current;
    std::size_t docstarts = 0;
    auto flush = [&] {
        if (!current.rows.empty()) sentences.push_back(std::move(current));
        current = RawSentence{};
        current.doc = docstarts == 0 ? 0 : docstarts - 1;
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const auto fields = split_whitespace(line);
        if (fields.empty()) {
            flush();
            continue;
        }
        if (fields.front() == "-DOCSTART-") {
            ++docstarts;
            flush();
            continue;
        }
        if (fields.size() < 2) throw ParseError("line", line_no, "expected a token column and a tag column");
        current.rows.push_back({std::string(fields.front()), std::string(fields.back()), line_no});
    }
    flush();
    return sentences;
}

TagScheme detect(const std::vector<RawSentence>& sentences) {
    for (const auto& s : sentences) {
        std::pair<char, std::string> prev{'O', {}};
        for (const auto& row : s.rows) {
            auto tag = split_tag(row);
            if (tag.first == 'B' && !(prev.first != 'O' && prev.second == tag.second)) return TagScheme::BIO2;
            prev = std::move(tag);
        }
    }
    return TagScheme::IOB1;
}

}  // namespace

TagScheme detect_scheme(std::string_view text) { return detect(read_columns(text)); }

std::vector<AnnotatedSentence> parse_bio(std::string_view text, const BioOptions& options) {
    const auto raw = read_columns(text);
    const TagScheme scheme = options.scheme == TagScheme::Auto ? detect(raw) : options.scheme;

    std::vector<AnnotatedSentence> out;
    out.reserve(raw.size());
    for (const auto& rs : raw) {
        AnnotatedSentence sentence;
        sentence.id = fmt::format("s{}", out.size());
        sentence.doc_id = fmt::format("doc{}", rs.doc);

        std::optional<Entity> open;
        auto close = [&] {
            if (open) sentence.entities.push_back(std::move(*open));
            open.reset();
        };
        std::pair<char, std::string> prev{'O', {}};
        for (std::size_t k = 0; k < rs.rows.size(); ++k) {
            const auto& row = rs.rows[k];
            sentence.tokens.push_back(row.token);
            auto [prefix, type] = split_tag(row);
            if (prefix == 'O') {
                close();
            } else if (prefix == 'B') {
                close();
                open = Entity{{k, k}, type};
            } else if (open && open->label == type) {
                open->span.end = k;
            } else {
                if (scheme == TagScheme::BIO2 && options.strict) {
                    const std::string before = prev.first == 'O' ? "O" : fmt::format("{}-{}", prev.first, prev.second);
                    throw ParseError("line", row.line,
                                     fmt::format("I-{} follows {} (invalid under BIO2)", type, before));
                }
                close();
                open = Entity{{k, k}, type};
            }
            prev = {prefix, std::move(type)};
        }
        close();
        canonicalize(sentence);
        out.push_back(std::move(sentence));
    }
    return out;
}

// ---- JSON lines ---------------------------------------------------------------

namespace {

using nlohmann::json;

std::size_t read_index(const json& value, const char* name, std::size_t record) {
    if (!value.is_number_integer() || value.get<long long>() < 0) {
        throw ParseError("record", record, fmt::format("'{}' must be a non-negative integer", name));
    }
    return value.get<std::size_t>();
}

AnnotatedSentence read_record(const json& j, std::size_t record) {
    if (!j.is_object()) throw ParseError("record", record, "expected a JSON object");
    AnnotatedSentence s;

    if (auto it = j.find("id"); it != j.end()) {
        if (!it->is_string()) throw ParseError("record", record, "'id' must be a string");
        s.id = it->get<std::string>();
    } else {
        s.id = std::to_string(record);
    }
    if (auto it = j.find("doc"); it != j.end()) {
        if (!it->is_string()) throw ParseError("record", record, "'doc' must be a string");
        s.doc_id = it->get<std::string>();
    }

    auto tokens = j.find("tokens");
    if (tokens == j.end() || !tokens->is_array()) throw ParseError("record", record, "'tokens' must be an array");
    for (const auto& t : *tokens) {
        if (!t.is_string()) throw ParseError("record", record, "tokens must be strings");
        s.tokens.push_back(t.get<std::string>());
    }

    if (auto ents = j.find("entities"); ents != j.end()) {
        if (!ents->is_array()) throw ParseError("record", record, "'entities' must be an array");
        for (const auto& e : *ents) {
            if (!e.is_object() || !e.contains("start") || !e.contains("end") || !e.contains("label")) {
                throw ParseError("record", record, "entity needs 'start', 'end' and 'label'");
            }
            Entity entity;
            entity.span.start = read_index(e["start"], "start", record);
            entity.span.end = read_index(e["end"], "end", record);
            if (!e["label"].is_string()) throw ParseError("record", record, "'label' must be a string");
            entity.label = e["label"].get<std::string>();
            s.entities.push_back(std::move(entity));
        }
    }
    try {
        canonicalize(s);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& err) {
        throw ParseError("record", record, err.what());
    }
    return s;
}

}  // namespace

std::vector<AnnotatedSentence> parse_json_spans(std::string_view text) {
    std::vector<AnnotatedSentence> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::size_t record = out.size();
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& err) {
            throw ParseError("record", record, fmt::format("invalid JSON: {}", err.what()));
        }
        out.push_back(read_record(j, record));
    }
    return out;
}

std::string write_json_spans(const std::vector<AnnotatedSentence>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
        nlohmann::ordered_json j;
        j["id"] = s.id;
        if (!s.doc_id.empty()) j["doc"] = s.doc_id;
        j["tokens"] = s.tokens;
        auto entities = nlohmann::ordered_json::array();
        for (const auto& e : s.entities) {
            nlohmann::ordered_json je;
            je["start"] = e.span.start;
            je["end"] = e.span.end;
            je["label"] = e.label;
            entities.push_back(std::move(je));
        }
        j["entities"] = std::move(entities);
        out += j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

// ---- files ------------------------------------------------------------------

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open '{}' for reading", path));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open '{}' for writing", path));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(fmt::format("failed writing '{}'", path));
}

Format parse_format(std::string_view name) {
    if (name == "jsonl" || name == "json") return Format::Jsonl;
    if (name == "bio" || name == "conll") return Format::Bio;
    throw Error(fmt::format("unknown format '{}' (expected jsonl or bio)", name));
}

std::vector<AnnotatedSentence> load_sentences(const std::string& path, Format format, const BioOptions& bio) {
    const std::string text = read_text_file(path);
    try {
        return format == Format::Jsonl ? parse_json_spans(text) : parse_bio(text, bio);
    } catch (const ParseError& err) {
        throw Error(fmt::format("{}: {}", path, err.what()));
    }
}

}  // namespace nff
