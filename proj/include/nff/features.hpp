#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nff/span.hpp"

namespace nff {

inline constexpr std::size_t kDefaultFeatureDim = std::size_t{1} << 18;

/// Sparse vector over the hashed feature space. Indices strictly increasing.
struct SpanFeatures {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;

    std::size_t size() const { return indices.size(); }

    friend bool operator==(const SpanFeatures&, const SpanFeatures&) = default;
};

/// 64-bit FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Raw feature strings for a span, before hashing. Namespaced as "kind=value".
std::vector<std::string> span_feature_strings(const std::vector<std::string>& tokens, const Span& span);

/// Hashed features for a span: boundary tokens (raw and lowercased), the
/// tokens on either side (with sentence sentinels), the tokens strictly
/// inside, a width bucket, boundary capitalization shapes, boundary
/// 3-character prefixes and suffixes, and a bias feature. Colliding features
/// have their values summed.
SpanFeatures featurize_span(const std::vector<std::string>& tokens, const Span& span,
                            std::size_t dim = kDefaultFeatureDim);

/// featurize_span for every span of enumerate_spans(tokens.size(), max_len),
/// in that order.
std::vector<SpanFeatures> featurize_sentence(const std::vector<std::string>& tokens,
                                             std::optional<std::size_t> max_len,
                                             std::size_t dim = kDefaultFeatureDim);

/// "Xx", "X", "x", "d" or "mixed".
std::string capitalization_shape(std::string_view token);

/// "1", "2", "3", "4-5" or "6+".
std::string_view width_bucket(std::size_t width);

}  // namespace nff
