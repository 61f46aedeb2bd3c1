#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nff/span.hpp"

namespace nff {

/// Parse failure tied to a location: a 1-based line for column files, a
/// 0-based record index for JSON-lines.
class ParseError : public Error {
public:
    ParseError(const std::string& where, std::size_t position, const std::string& message);

    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

struct Corpus {
    std::map<std::string, std::vector<AnnotatedSentence>> splits;
    std::vector<std::string> labels;  // sorted, every entity label in every split

    const std::vector<AnnotatedSentence>& split(const std::string& name) const;
};

/// Sorted distinct entity labels over the given sentences.
std::vector<std::string> collect_labels(const std::vector<AnnotatedSentence>& sentences);

struct CorpusStats {
    std::size_t sentences = 0;
    std::size_t nested_sentences = 0;
    double nested_sentence_pct = 0.0;
    std::size_t entities = 0;
    std::size_t nested_entities = 0;
    double nested_entity_pct = 0.0;
    double average_length = 0.0;
    std::size_t max_length = 0;
};

/// Nested entity: strictly within another entity of the same sentence.
CorpusStats compute_stats(const std::vector<AnnotatedSentence>& sentences);

enum class TagScheme { Auto, IOB1, BIO2 };

struct BioOptions {
    TagScheme scheme = TagScheme::Auto;
    // Reject I-X that does not continue an X entity when decoding BIO2.
    bool strict = true;
};

/// Column format: token first, tag last, blank line between sentences,
/// -DOCSTART- lines start a new document.
std::vector<AnnotatedSentence> parse_bio(std::string_view text, const BioOptions& options = {});

/// Which scheme parse_bio would pick for this text under TagScheme::Auto.
TagScheme detect_scheme(std::string_view text);

/// One JSON object per line:
///   {"id": ..., "doc": ..., "tokens": [...], "entities": [{"start", "end", "label"}]}
/// start and end are inclusive token indices. "doc" is optional.
std::vector<AnnotatedSentence> parse_json_spans(std::string_view text);
std::string write_json_spans(const std::vector<AnnotatedSentence>& sentences);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

enum class Format { Jsonl, Bio };

Format parse_format(std::string_view name);
std::vector<AnnotatedSentence> load_sentences(const std::string& path, Format format, const BioOptions& bio = {});

// ---- synthetic corpus -------------------------------------------------------

struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t train_sentences = 2000;
    std::size_t dev_sentences = 300;
    std::size_t test_sentences = 300;
    double nesting_probability = 0.5;
    std::size_t first_names = 40;
    std::size_t last_names = 40;
    std::size_t cities = 30;
    std::size_t org_suffixes = 8;
    std::size_t filler_words = 60;

    void validate() const;
};

/// What the generator planted in one split.
struct PlantedCounts {
    std::size_t sentences = 0;
    std::size_t nested_sentences = 0;
    std::size_t entities = 0;
    std::size_t nested_entities = 0;
};

struct SynthCorpus {
    /// "train", "dev", "test" carry nested gold; "train.flat" and "dev.flat"
    /// are their outermost projections.
    Corpus corpus;
    std::map<std::string, PlantedCounts> planted;  // keyed by nested split name
};

/// Largest pool sizes the bundled word lists support.
SynthConfig synth_vocabulary_limits();

SynthCorpus generate_synth(const SynthConfig& config);

}  // namespace nff
