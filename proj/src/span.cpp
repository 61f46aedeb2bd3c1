#include "nff/span.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace nff {

bool SpanPartition::is_within(const Span& s) const {
    if (s.end >= length || s.start > s.end) return false;
    return within_mask[s.start * length + s.end] != 0;
}

std::vector<Span> enumerate_spans(std::size_t length, std::optional<std::size_t> max_len) {
    std::vector<Span> spans;
    spans.reserve(span_count(length, max_len));
    const std::size_t widest = max_len ? std::min(*max_len, length) : length;
    for (std::size_t width = 1; width <= widest; ++width) {
        for (std::size_t start = 0; start + width <= length; ++start) {
            spans.push_back({start, start + width - 1});
        }
    }
    return spans;
}

std::size_t span_count(std::size_t length, std::optional<std::size_t> max_len) {
    const std::size_t widest = max_len ? std::min(*max_len, length) : length;
    // sum over widths w of (length - w + 1)
    return widest * (length + 1) - widest * (widest + 1) / 2;
}

std::vector<Span> entity_spans(const std::vector<Entity>& entities) {
    std::vector<Span> spans;
    spans.reserve(entities.size());
    for (const auto& e : entities) spans.push_back(e.span);
    std::sort(spans.begin(), spans.end());
    spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
    return spans;
}

SpanPartition partition_spans(std::size_t length, const std::vector<Span>& entities,
                              std::optional<std::size_t> max_len) {
    SpanPartition p;
    p.length = length;
    p.all = enumerate_spans(length, max_len);
    p.entity = entities;
    std::sort(p.entity.begin(), p.entity.end());
    p.entity.erase(std::unique(p.entity.begin(), p.entity.end()), p.entity.end());
    p.within_mask.assign(length * length, 0);

    // Everything strictly inside an entity span: all (s, e) with
    // outer.start <= s <= e <= outer.end, minus the entity span itself.
    for (const Span& outer : p.entity) {
        if (outer.end >= length) {
            throw Error(fmt::format("entity span ({}, {}) exceeds sentence length {}", outer.start,
                                    outer.end, length));
        }
        for (std::size_t s = outer.start; s <= outer.end; ++s) {
            for (std::size_t e = s; e <= outer.end; ++e) {
                if (s == outer.start && e == outer.end) continue;
                p.within_mask[s * length + e] = 1;
            }
        }
    }

    p.within.reserve(p.all.size());
    p.out.reserve(p.all.size());
    for (const Span& s : p.all) {
        (p.within_mask[s.start * length + s.end] ? p.within : p.out).push_back(s);
    }
    return p;
}

SpanPartition partition_spans(const AnnotatedSentence& sentence, std::optional<std::size_t> max_len) {
    return partition_spans(sentence.size(), entity_spans(sentence.entities), max_len);
}

std::vector<Entity> outermost(const std::vector<Entity>& entities) {
    std::vector<Entity> kept;
    for (const auto& candidate : entities) {
        const bool nested = std::any_of(entities.begin(), entities.end(), [&](const Entity& other) {
            return is_strictly_within(candidate.span, other.span);
        });
        if (!nested) kept.push_back(candidate);
    }
    return kept;
}

bool is_flat(const AnnotatedSentence& sentence) {
    for (const auto& a : sentence.entities) {
        for (const auto& b : sentence.entities) {
            if (is_strictly_within(a.span, b.span)) return false;
        }
    }
    return true;
}

std::vector<AnnotatedSentence> flatten_dataset(const std::vector<AnnotatedSentence>& dataset) {
    std::vector<AnnotatedSentence> flat;
    flat.reserve(dataset.size());
    for (const auto& sentence : dataset) {
        AnnotatedSentence copy = sentence;
        copy.entities = outermost(sentence.entities);
        flat.push_back(std::move(copy));
    }
    return flat;
}

void canonicalize(AnnotatedSentence& sentence) {
    std::sort(sentence.entities.begin(), sentence.entities.end());
    for (std::size_t k = 0; k < sentence.entities.size(); ++k) {
        const Entity& e = sentence.entities[k];
        if (e.span.start > e.span.end) {
            throw Error(fmt::format("entity ({}, {}) has end before start", e.span.start, e.span.end));
        }
        if (e.span.end >= sentence.tokens.size()) {
            throw Error(fmt::format("entity ({}, {}) exceeds sentence length {}", e.span.start,
                                    e.span.end, sentence.tokens.size()));
        }
        if (e.label.empty() || e.label == kNonEntity) {
            throw Error(fmt::format("entity ({}, {}) has reserved or empty label '{}'", e.span.start,
                                    e.span.end, e.label));
        }
        if (k > 0 && sentence.entities[k - 1] == e) {
            throw Error(fmt::format("duplicate entity {} ({}, {})", e.label, e.span.start, e.span.end));
        }
    }
}

}  // namespace nff
