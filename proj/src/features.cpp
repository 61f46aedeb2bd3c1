#include "nff/features.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace nff {

namespace {

constexpr std::string_view kBos = "<s>";
constexpr std::string_view kEos = "</s>";

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// UTF-8 aware: counts code points, not bytes.
std::size_t codepoint_count(std::string_view s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string_view first_codepoints(std::string_view s, std::size_t n) {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
            if (seen == n) return s.substr(0, i);
            ++seen;
        }
    }
    return s;
}

std::string_view last_codepoints(std::string_view s, std::size_t n) {
    const std::size_t total = codepoint_count(s);
    if (total <= n) return s;
    const std::size_t skip = total - n;
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
            if (seen == skip) return s.substr(i);
            ++seen;
        }
    }
    return {};
}

std::string feat(std::string_view kind, std::string_view value) {
    std::string s;
    s.reserve(kind.size() + 1 + value.size());
    s.append(kind).append("=").append(value);
    return s;
}

}  // namespace

std::uint64_t fnv1a(std::string_view text, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string capitalization_shape(std::string_view token) {
    bool upper = false, lower = false, digit = false, other = false;
    for (unsigned char c : token) {
        if (std::isupper(c)) upper = true;
        else if (std::islower(c)) lower = true;
        else if (std::isdigit(c)) digit = true;
        else other = true;
    }
    if (other || token.empty()) return "mixed";
    if (digit) return upper || lower ? "mixed" : "d";
    if (upper && !lower) return "X";
    if (lower && !upper) return "x";
    return std::isupper(static_cast<unsigned char>(token.front())) ? "Xx" : "mixed";
}

std::string_view width_bucket(std::size_t width) {
    if (width <= 1) return "1";
    if (width == 2) return "2";
    if (width == 3) return "3";
    if (width <= 5) return "4-5";
    return "6+";
}

std::vector<std::string> span_feature_strings(const std::vector<std::string>& tokens, const Span& span) {
    const std::string& first = tokens[span.start];
    const std::string& last = tokens[span.end];
    const std::string_view left = span.start == 0 ? kBos : std::string_view(tokens[span.start - 1]);
    const std::string_view right = span.end + 1 >= tokens.size() ? kEos : std::string_view(tokens[span.end + 1]);

    std::vector<std::string> f;
    f.reserve(16 + span.length());
    f.emplace_back("bias");
    f.push_back(feat("first", first));
    f.push_back(feat("last", last));
    f.push_back(feat("first_lc", lowercase(first)));
    f.push_back(feat("last_lc", lowercase(last)));
    f.push_back(feat("left", left));
    f.push_back(feat("right", right));
    for (std::size_t k = span.start + 1; k < span.end; ++k) f.push_back(feat("inner", tokens[k]));
    f.push_back(feat("width", width_bucket(span.length())));
    f.push_back(feat("shape_first", capitalization_shape(first)));
    f.push_back(feat("shape_last", capitalization_shape(last)));
    f.push_back(feat("prefix_first", first_codepoints(first, 3)));
    f.push_back(feat("suffix_first", last_codepoints(first, 3)));
    f.push_back(feat("prefix_last", first_codepoints(last, 3)));
    f.push_back(feat("suffix_last", last_codepoints(last, 3)));
    return f;
}

SpanFeatures featurize_span(const std::vector<std::string>& tokens, const Span& span, std::size_t dim) {
    std::vector<std::uint32_t> raw;
    for (const auto& s : span_feature_strings(tokens, span)) {
        raw.push_back(static_cast<std::uint32_t>(fnv1a(s) % dim));
    }
    std::sort(raw.begin(), raw.end());

    SpanFeatures features;
    for (std::uint32_t index : raw) {
        if (!features.indices.empty() && features.indices.back() == index) {
            features.values.back() += 1.0;
        } else {
            features.indices.push_back(index);
            features.values.push_back(1.0);
        }
    }
    return features;
}

std::vector<SpanFeatures> featurize_sentence(const std::vector<std::string>& tokens,
                                             std::optional<std::size_t> max_len, std::size_t dim) {
    std::vector<SpanFeatures> out;
    const auto spans = enumerate_spans(tokens.size(), max_len);
    out.reserve(spans.size());
    for (const auto& s : spans) out.push_back(featurize_span(tokens, s, dim));
    return out;
}

}  // namespace nff
