#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nff {

/// Label reserved for spans that are not entities. Never carried by an Entity.
inline constexpr const char* kNonEntity = "O";

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Token interval, inclusive on both ends.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start + 1; }

    friend auto operator<=>(const Span&, const Span&) = default;
};

struct Entity {
    Span span;
    std::string label;

    friend auto operator<=>(const Entity&, const Entity&) = default;
};

struct AnnotatedSentence {
    std::string id;
    std::string doc_id;
    std::vector<std::string> tokens;
    std::vector<Entity> entities;  // sorted by (span, label), no duplicates

    std::size_t size() const { return tokens.size(); }

    friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

/// Within/out partition of all spans of one sentence. Every vector follows
/// enumerate_spans order.
struct SpanPartition {
    std::size_t length = 0;
    std::vector<Span> all;
    std::vector<Span> entity;
    std::vector<Span> within;
    std::vector<Span> out;

    std::vector<char> within_mask;  // length x length, row-major by start

    bool is_within(const Span& s) const;
};

/// All spans (i, j) with 0 <= i <= j < length, ordered by width then start.
/// With max_len, only spans of at most max_len tokens.
std::vector<Span> enumerate_spans(std::size_t length, std::optional<std::size_t> max_len = std::nullopt);

/// Number of spans enumerate_spans would return.
std::size_t span_count(std::size_t length, std::optional<std::size_t> max_len = std::nullopt);

/// inner lies inside outer and shares at most one boundary with it.
constexpr bool is_strictly_within(const Span& inner, const Span& outer) {
    return (outer.start <= inner.start && inner.end < outer.end) ||
           (outer.start < inner.start && inner.end <= outer.end);
}

SpanPartition partition_spans(const AnnotatedSentence& sentence,
                              std::optional<std::size_t> max_len = std::nullopt);
SpanPartition partition_spans(std::size_t length, const std::vector<Span>& entity_spans,
                              std::optional<std::size_t> max_len = std::nullopt);

/// Entities not strictly within any other entity. Identical spans with
/// different labels are kept together.
std::vector<Entity> outermost(const std::vector<Entity>& entities);

std::vector<AnnotatedSentence> flatten_dataset(const std::vector<AnnotatedSentence>& dataset);

/// No entity is strictly within another.
bool is_flat(const AnnotatedSentence& sentence);

/// Sorts entities, then checks bounds, labels and duplicates. Throws Error.
void canonicalize(AnnotatedSentence& sentence);

std::vector<Span> entity_spans(const std::vector<Entity>& entities);

}  // namespace nff
